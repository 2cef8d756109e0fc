#include "modalbound/modality.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "modalbound/errors.hpp"

namespace modalbound {

ModalityLayout::ModalityLayout(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw LayoutError("layout needs at least one modality");
  offsets_.reserve(dims_.size());
  for (int d : dims_) {
    if (d < 1) throw LayoutError("modality dimension must be >= 1");
    offsets_.push_back(total_dim_);
    total_dim_ += d;
  }
}

int ModalityLayout::dim(int modality) const {
  if (modality < 1 || modality > num_modalities())
    throw LayoutError("modality index " + std::to_string(modality) + " outside [1, " +
                      std::to_string(num_modalities()) + "]");
  return dims_[static_cast<std::size_t>(modality - 1)];
}

Index ModalityLayout::offset(int modality) const {
  dim(modality);
  return offsets_[static_cast<std::size_t>(modality - 1)];
}

ModalitySet::ModalitySet(std::vector<int> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
    throw LayoutError("duplicate modality index in set");
  if (!members_.empty() && members_.front() < 1)
    throw LayoutError("modality indices are 1-based");
}

ModalitySet ModalitySet::all(int num_modalities) {
  std::vector<int> m(static_cast<std::size_t>(num_modalities));
  for (int k = 0; k < num_modalities; ++k) m[static_cast<std::size_t>(k)] = k + 1;
  return ModalitySet(std::move(m));
}

ModalitySet ModalitySet::parse(std::string_view text, int num_modalities) {
  if (text == "all") return all(num_modalities);
  if (text == "none" || text.empty()) return none();
  std::vector<int> members;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view token = text.substr(pos, comma - pos);
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw LayoutError("cannot parse modality index '" + std::string(token) + "'");
    if (value < 1 || value > num_modalities)
      throw LayoutError("modality index " + std::to_string(value) + " outside [1, " +
                        std::to_string(num_modalities) + "]");
    members.push_back(value);
    pos = comma + 1;
  }
  return ModalitySet(std::move(members));
}

bool ModalitySet::contains(int modality) const {
  return std::binary_search(members_.begin(), members_.end(), modality);
}

bool ModalitySet::is_subset_of(const ModalitySet& other) const {
  return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                       members_.end());
}

ModalitySet ModalitySet::intersect(const ModalitySet& other) const {
  std::vector<int> out;
  std::set_intersection(members_.begin(), members_.end(), other.members_.begin(),
                        other.members_.end(), std::back_inserter(out));
  return ModalitySet(std::move(out));
}

void ModalitySet::validate(int num_modalities) const {
  if (!members_.empty() && members_.back() > num_modalities)
    throw LayoutError("modality index " + std::to_string(members_.back()) + " outside [1, " +
                      std::to_string(num_modalities) + "]");
}

Index ModalitySet::feature_dim(const ModalityLayout& layout) const {
  validate(layout.num_modalities());
  Index total = 0;
  for (int k : members_) total += layout.dim(k);
  return total;
}

std::string ModalitySet::to_string(char sep) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i) out << sep;
    out << members_[i];
  }
  return out.str();
}

bool operator==(const MultimodalSample& a, const MultimodalSample& b) {
  if (a.label != b.label || a.present != b.present || a.features.size() != b.features.size())
    return false;
  for (std::size_t k = 0; k < a.features.size(); ++k) {
    if (a.features[k].size() != b.features[k].size() || a.features[k] != b.features[k])
      return false;
  }
  return true;
}

MultimodalSample make_sample(const ModalityLayout& layout, const VectorXd& flat, int label) {
  if (flat.size() != layout.total_dim()) throw LayoutError("flat vector length != total_dim");
  MultimodalSample x;
  x.label = label;
  for (int k = 1; k <= layout.num_modalities(); ++k) {
    x.features.push_back(flat.segment(layout.offset(k), layout.dim(k)));
    x.present.push_back(true);
  }
  return x;
}

void check_conforms(const MultimodalSample& x, const ModalityLayout& layout) {
  if (x.num_modalities() != layout.num_modalities() ||
      x.present.size() != x.features.size())
    throw LayoutError("sample has " + std::to_string(x.num_modalities()) +
                      " modalities, layout has " + std::to_string(layout.num_modalities()));
  for (int k = 1; k <= layout.num_modalities(); ++k) {
    if (x.modality(k).size() != layout.dim(k))
      throw LayoutError("modality " + std::to_string(k) + " has wrong dimension");
    if (!x.is_present(k) && !x.modality(k).isZero(0.0))
      throw LayoutError("absent modality " + std::to_string(k) + " must be stored as zeros");
  }
}

MultimodalSample project_modality(const MultimodalSample& x, const ModalitySet& m) {
  m.validate(x.num_modalities());
  MultimodalSample out = x;
  for (int k = 1; k <= x.num_modalities(); ++k) {
    if (!m.contains(k)) {
      auto idx = static_cast<std::size_t>(k - 1);
      out.present[idx] = false;
      out.features[idx].setZero();
    }
  }
  return out;
}

bool compose_projection_check(const MultimodalSample& x, const ModalitySet& n,
                              const ModalitySet& m) {
  if (!n.is_subset_of(m)) throw PreconditionError("compose_projection_check requires N subset of M");
  return project_modality(x, n) == project_modality(project_modality(x, m), n);
}

VectorXd flatten(const MultimodalSample& x) {
  Index total = 0;
  for (const auto& f : x.features) total += f.size();
  VectorXd flat(total);
  Index at = 0;
  for (std::size_t k = 0; k < x.features.size(); ++k) {
    const Index d = x.features[k].size();
    if (x.present[k])
      flat.segment(at, d) = x.features[k];
    else
      flat.segment(at, d).setZero();
    at += d;
  }
  return flat;
}

VectorXd coordinate_mask(const ModalityLayout& layout, const ModalitySet& mask) {
  mask.validate(layout.num_modalities());
  VectorXd out = VectorXd::Zero(layout.total_dim());
  for (int k : mask.members()) out.segment(layout.offset(k), layout.dim(k)).setOnes();
  return out;
}

}  // namespace modalbound

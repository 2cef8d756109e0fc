#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "modalbound/errors.hpp"
#include "modalbound/types.hpp"

namespace modalbound {

// Factorization of the input space into K modality blocks.
class ModalityLayout {
 public:
  ModalityLayout() = default;
  explicit ModalityLayout(std::vector<int> dims);

  int num_modalities() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int modality) const;  // 1-based
  Index total_dim() const { return total_dim_; }
  // First flat coordinate of `modality` (1-based) in the concatenated vector.
  Index offset(int modality) const;

  bool operator==(const ModalityLayout&) const = default;

 private:
  std::vector<int> dims_;
  std::vector<Index> offsets_;
  Index total_dim_ = 0;
};

// Subset of modality indices, stored ascending and duplicate-free. Indices are
// 1-based; range against a layout is checked by `validate`.
class ModalitySet {
 public:
  ModalitySet() = default;
  explicit ModalitySet(std::vector<int> members);

  static ModalitySet all(int num_modalities);
  static ModalitySet none() { return {}; }
  // "all", "none", or a comma list like "1,3".
  static ModalitySet parse(std::string_view text, int num_modalities);

  const std::vector<int>& members() const { return members_; }
  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  bool contains(int modality) const;
  bool is_subset_of(const ModalitySet& other) const;
  ModalitySet intersect(const ModalitySet& other) const;
  void validate(int num_modalities) const;
  // Number of flat coordinates covered under `layout`.
  Index feature_dim(const ModalityLayout& layout) const;
  std::string to_string(char sep = ',') const;

  bool operator==(const ModalitySet&) const = default;

 private:
  std::vector<int> members_;
};

struct MultimodalSample {
  std::vector<VectorXd> features;
  std::vector<bool> present;
  int label = 0;

  int num_modalities() const { return static_cast<int>(features.size()); }
  // Stored block of modality k (1-based). Absent modalities are zero.
  const VectorXd& modality(int k) const { return features.at(static_cast<std::size_t>(k - 1)); }
  bool is_present(int k) const { return present.at(static_cast<std::size_t>(k - 1)); }

  // Exact comparison: same shapes, same mask, same label, equal coordinates.
  friend bool operator==(const MultimodalSample& a, const MultimodalSample& b);
};

// Builds a sample with every modality present. Throws LayoutError on dims mismatch.
MultimodalSample make_sample(const ModalityLayout& layout, const VectorXd& flat, int label);

void check_conforms(const MultimodalSample& x, const ModalityLayout& layout);

// p_M: keep modality k when k is in M, replace by the missing sentinel otherwise.
// Missing modalities are stored as zero vectors.
MultimodalSample project_modality(const MultimodalSample& x, const ModalitySet& m);

// p_N(x) == p_N(p_M(x)) exactly, for N a subset of M.
bool compose_projection_check(const MultimodalSample& x, const ModalitySet& n,
                              const ModalitySet& m);

// Concatenated feature vector; absent modalities contribute zeros.
VectorXd flatten(const MultimodalSample& x);

// 0/1 indicator over flat coordinates covered by `mask`.
VectorXd coordinate_mask(const ModalityLayout& layout, const ModalitySet& mask);

}  // namespace modalbound

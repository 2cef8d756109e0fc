#include "modalbound/metric.hpp"

#include <string>

namespace modalbound {

void DiagonalMetricModel::check_feasible(const ModalityLayout& layout) const {
  if (lambdas.size() != layout.total_dim()) throw ShapeError("lambdas length != total_dim");
  mask.validate(layout.num_modalities());
  if (!(caps.eigen_cap >= 0.0) || !(caps.dist_cap > 0.0) || !(caps.feature_cap > 0.0))
    throw LayoutError("caps must satisfy D >= 0, kappa > 0, B > 0");
  const VectorXd on = coordinate_mask(layout, mask);
  for (Index i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas(i) >= 0.0 && lambdas(i) <= caps.eigen_cap))
      throw LayoutError("lambda_" + std::to_string(i) + " outside [0, eigen_cap]");
    if (on(i) == 0.0 && lambdas(i) != 0.0)
      throw LayoutError("lambda_" + std::to_string(i) + " must be 0 outside the mask");
  }
  if (!(bias >= 0.0 && bias <= caps.dist_cap)) throw LayoutError("bias outside [0, dist_cap]");
}

DiagonalMetricModel initial_model(const ModalityLayout& layout, const ModalitySet& mask,
                                  const MetricCaps& caps) {
  DiagonalMetricModel m;
  m.mask = mask;
  m.caps = caps;
  m.lambdas = 0.5 * caps.eigen_cap * coordinate_mask(layout, mask);
  m.bias = 0.5 * caps.dist_cap;
  return m;
}

VectorXd project_to_constraints(const VectorXd& lambdas, const ModalityLayout& layout,
                                const ModalitySet& mask, double eigen_cap) {
  if (lambdas.size() != layout.total_dim()) throw ShapeError("lambdas length != total_dim");
  return lambdas.cwiseMax(0.0).cwiseMin(eigen_cap).cwiseProduct(coordinate_mask(layout, mask));
}

double feature_diff_cap_range(const MatrixXd& features) {
  if (features.rows() == 0) return 0.0;
  return (features.colwise().maxCoeff() - features.colwise().minCoeff()).maxCoeff();
}

double feature_diff_cap_pairwise(const MatrixXd& features) {
  double best = 0.0;
  for (Index i = 0; i < features.rows(); ++i)
    for (Index j = i + 1; j < features.rows(); ++j)
      best = std::max(best, (features.row(i) - features.row(j)).lpNorm<Eigen::Infinity>());
  return best;
}

double feature_diff_cap_check(const Dataset& data) {
  if (data.size() < 2) throw SizeError("feature_diff_cap_check needs n >= 2");
  const MatrixXd x = feature_matrix(data);
  const double range = feature_diff_cap_range(x);
  if (data.size() <= 2048 && feature_diff_cap_pairwise(x) != range)
    throw NumericError("pairwise and range feature caps disagree");
  return range;
}

}  // namespace modalbound

#include "modalbound/random.hpp"

namespace modalbound {
namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv, out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

std::vector<std::uint64_t> first_primes(std::size_t count) {
  std::vector<std::uint64_t> primes;
  for (std::uint64_t c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (auto p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

}  // namespace

std::vector<DiagonalMetricModel> halton_model_grid(const ModalityLayout& layout,
                                                   const ModalitySet& mask,
                                                   const MetricCaps& caps, int count,
                                                   std::uint64_t seed) {
  if (count < 1) throw ConfigError("grid_size", "must be >= 1");
  const Index m = layout.total_dim();
  const auto primes = first_primes(static_cast<std::size_t>(m + 1));
  const VectorXd on = coordinate_mask(layout, mask);
  Stream s(seed, {0x68616c746f6eULL});
  VectorXd shift(m + 1);
  for (Index i = 0; i <= m; ++i) shift(i) = s.uniform();

  std::vector<DiagonalMetricModel> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    DiagonalMetricModel model;
    model.mask = mask;
    model.caps = caps;
    model.lambdas.resize(m);
    for (Index i = 0; i <= m; ++i) {
      double u = radical_inverse(static_cast<std::uint64_t>(j + 1), primes[static_cast<std::size_t>(i)]) + shift(i);
      u -= std::floor(u);
      if (i < m)
        model.lambdas(i) = on(i) * caps.eigen_cap * u;
      else
        model.bias = caps.dist_cap * u;
    }
    grid.push_back(std::move(model));
  }
  return grid;
}

std::vector<DiagonalMetricModel> restrict_grid(const std::vector<DiagonalMetricModel>& grid,
                                               const ModalityLayout& layout,
                                               const ModalitySet& mask) {
  std::vector<DiagonalMetricModel> out = grid;
  for (auto& model : out) {
    model.mask = model.mask.intersect(mask);
    model.lambdas = project_to_constraints(model.lambdas, layout, model.mask, model.caps.eigen_cap);
  }
  return out;
}

}  // namespace modalbound

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "modalbound/dataset.hpp"
#include "modalbound/errors.hpp"
#include "modalbound/modality.hpp"
#include "modalbound/types.hpp"

namespace modalbound {

// Box of the learnable metric: 0 <= lambda_i <= eigen_cap (D), distances
// clipped at dist_cap (kappa), feature differences bounded by feature_cap (B)
// in the infinity norm.
struct MetricCaps {
  double eigen_cap = 1.0;
  double dist_cap = 1.0;
  double feature_cap = 1.0;
};

struct DiagonalMetricModel {
  VectorXd lambdas;
  double bias = 0.0;
  ModalitySet mask;
  MetricCaps caps;

  // Throws LayoutError/ShapeError when the model leaves the constraint set.
  void check_feasible(const ModalityLayout& layout) const;
};

// lambda = D/2 on masked coordinates, b = kappa/2.
DiagonalMetricModel initial_model(const ModalityLayout& layout, const ModalitySet& mask,
                                  const MetricCaps& caps);

/// Clipped diagonal Mahalanobis pseudo-distance
///   min( sum_i lambda_i (x_i - y_i)^2, cap ).
template <typename DerivedL, typename DerivedX, typename DerivedY>
typename DerivedL::Scalar mahalanobis_distance(const Eigen::MatrixBase<DerivedL>& lambdas,
                                               const Eigen::MatrixBase<DerivedX>& x,
                                               const Eigen::MatrixBase<DerivedY>& y,
                                               typename DerivedL::Scalar cap) {
  if (x.size() != lambdas.size() || y.size() != lambdas.size())
    throw ShapeError("distance operands must have length total_dim");
  const auto raw = (lambdas.array() * (x - y).array().square()).sum();
  return std::min(raw, cap);
}

inline double mahalanobis_distance(const DiagonalMetricModel& model, const VectorXd& x,
                                   const VectorXd& y) {
  return mahalanobis_distance(model.lambdas, x, y, model.caps.dist_cap);
}

/// Unclipped (x - y)^T A (x - y) for a general symmetric A.
template <typename DerivedA, typename DerivedX, typename DerivedY>
typename DerivedA::Scalar mahalanobis_distance_full(const Eigen::MatrixBase<DerivedA>& a,
                                                    const Eigen::MatrixBase<DerivedX>& x,
                                                    const Eigen::MatrixBase<DerivedY>& y) {
  if (a.rows() != a.cols() || x.size() != a.rows() || y.size() != a.rows())
    throw ShapeError("metric and operands disagree in dimension");
  const auto diff = (x - y).eval();
  return diff.dot(a * diff);
}

// Clamp to [0, eigen_cap], then zero the coordinates outside `mask`.
VectorXd project_to_constraints(const VectorXd& lambdas, const ModalityLayout& layout,
                                const ModalitySet& mask, double eigen_cap);

// Tightest valid feature_cap: max over pairs of ||x_i - x_j||_inf, via the
// coordinate-wise (max - min) identity. For n <= 2048 the pairwise double loop
// is run as well and the two are required to agree.
double feature_diff_cap_check(const Dataset& data);
double feature_diff_cap_pairwise(const MatrixXd& features);
double feature_diff_cap_range(const MatrixXd& features);

}  // namespace modalbound

namespace modalbound {

// `count` feasible models from a randomly shifted Halton sequence over the
// (lambda, b) box. Coordinates outside `mask` are zero.
std::vector<DiagonalMetricModel> halton_model_grid(const ModalityLayout& layout,
                                                   const ModalitySet& mask,
                                                   const MetricCaps& caps, int count,
                                                   std::uint64_t seed);

// Same models with coordinates outside `mask` zeroed (the restriction to G_M).
std::vector<DiagonalMetricModel> restrict_grid(const std::vector<DiagonalMetricModel>& grid,
                                               const ModalityLayout& layout,
                                               const ModalitySet& mask);

}  // namespace modalbound

#pragma once

#include <algorithm>
#include <cstdint>

#include "modalbound/metric.hpp"

namespace modalbound {

enum class LossKind { clipped_pair_hinge };

/// Pairwise loss
///   l = min(C, max(0, margin + tau * (d(x_i, x_j) - b)))
/// with tau = +1 for similar and -1 for dissimilar pairs. `lipschitz_first`
/// and `lipschitz_second` are the joint Lipschitz constants (L1, L2) with
/// respect to each argument's feature vector.
struct LossSpec {
  LossKind kind = LossKind::clipped_pair_hinge;
  double margin = 1.0;
  double clip = 2.0;
  double lipschitz_first = 1.0;
  double lipschitz_second = 1.0;

  // Both constants set to 2 * D * B * sqrt(total_dim), the gradient bound of
  // the hinge composed with the diagonal quadratic on the bounded domain.
  static LossSpec certified(const MetricCaps& caps, Index total_dim, double margin,
                            double clip);

  double lipschitz_sum() const { return lipschitz_first + lipschitz_second; }
  void validate() const;
};

inline double hinge_loss(const LossSpec& spec, double distance, double bias, double tau) {
  return std::min(spec.clip, std::max(0.0, spec.margin + tau * (distance - bias)));
}

double pair_loss(const LossSpec& spec, const DiagonalMetricModel& model,
                 const MultimodalSample& zi, const MultimodalSample& zj);

struct LossGradient {
  VectorXd lambdas;
  double bias = 0.0;
};

// Subgradient in (lambda, b) for one pair given masked flat features. At kinks
// the inactive side is taken (zero slope).
LossGradient pair_loss_subgradient(const LossSpec& spec, const DiagonalMetricModel& model,
                                   const VectorXd& xi, const VectorXd& xj, double tau);

struct LipschitzEstimate {
  double first = 0.0;
  double second = 0.0;
};

// Largest difference quotient observed per argument slot over random models
// in the box and random feature pairs with ||x - x'||_inf <= B. Throws
// CertificationError when an observation exceeds the declared constant.
LipschitzEstimate lipschitz_certify(const LossSpec& spec, const ModalityLayout& layout,
                                    const ModalitySet& mask, const MetricCaps& caps,
                                    int trials, std::uint64_t seed);

}  // namespace modalbound

#include "modalbound/loss.hpp"

#include <cmath>

#include "modalbound/random.hpp"

namespace modalbound {

LossSpec LossSpec::certified(const MetricCaps& caps, Index total_dim, double margin,
                             double clip) {
  LossSpec spec;
  spec.margin = margin;
  spec.clip = clip;
  const double l = 2.0 * caps.eigen_cap * caps.feature_cap * std::sqrt(static_cast<double>(total_dim));
  spec.lipschitz_first = l;
  spec.lipschitz_second = l;
  return spec;
}

void LossSpec::validate() const {
  if (!(clip > 0.0)) throw ConfigError("loss.clip", "must be > 0");
  if (!(clip >= margin)) throw ConfigError("loss.clip", "must be >= margin");
  if (!(lipschitz_first > 0.0) || !(lipschitz_second > 0.0))
    throw ConfigError("loss.lipschitz", "constants must be > 0");
}

double pair_loss(const LossSpec& spec, const DiagonalMetricModel& model,
                 const MultimodalSample& zi, const MultimodalSample& zj) {
  const VectorXd xi = flatten(project_modality(zi, model.mask));
  const VectorXd xj = flatten(project_modality(zj, model.mask));
  const double d = mahalanobis_distance(model, xi, xj);
  return hinge_loss(spec, d, model.bias, pair_label(zi.label, zj.label));
}

LossGradient pair_loss_subgradient(const LossSpec& spec, const DiagonalMetricModel& model,
                                   const VectorXd& xi, const VectorXd& xj, double tau) {
  LossGradient g{VectorXd::Zero(model.lambdas.size()), 0.0};
  const VectorXd sq = (xi - xj).array().square().matrix();
  const double raw = model.lambdas.dot(sq);
  const double d = std::min(raw, model.caps.dist_cap);
  const double arg = spec.margin + tau * (d - model.bias);
  if (arg <= 0.0 || arg >= spec.clip) return g;
  if (raw < model.caps.dist_cap) g.lambdas = tau * sq;
  g.bias = -tau;
  return g;
}

LipschitzEstimate lipschitz_certify(const LossSpec& spec, const ModalityLayout& layout,
                                    const ModalitySet& mask, const MetricCaps& caps,
                                    int trials, std::uint64_t seed) {
  if (trials < 1000) throw PreconditionError("lipschitz_certify needs trials >= 1000");
  const Index m = layout.total_dim();
  const VectorXd on = coordinate_mask(layout, mask);
  const double b = caps.feature_cap;
  const VectorXd zero = VectorXd::Zero(m);

  LipschitzEstimate best;
  for (int t = 0; t < trials; ++t) {
    Stream s(seed, {static_cast<std::uint64_t>(t)});
    DiagonalMetricModel model;
    model.mask = mask;
    model.caps = caps;
    model.lambdas.resize(m);
    // Half the trials sit on the corner lambda = D where the gradient peaks.
    const bool corner = s.uniform() < 0.5;
    for (Index i = 0; i < m; ++i)
      model.lambdas(i) = on(i) * (corner ? caps.eigen_cap : s.uniform(0.0, caps.eigen_cap));
    model.bias = s.uniform(0.0, caps.dist_cap);
    const double tau = s.sign();

    for (int slot = 0; slot < 2; ++slot) {
      VectorXd x1(m), dir(m);
      for (Index i = 0; i < m; ++i) x1(i) = s.uniform(-b, b);
      for (Index i = 0; i < m; ++i) dir(i) = s.normal();
      const double h = b * std::pow(10.0, -s.uniform(0.0, 6.0));
      VectorXd x2 = (x1 + h * dir.normalized()).cwiseMax(-b).cwiseMin(b);
      const double step = (x1 - x2).norm();
      if (step < 1e-6) continue;
      const double l1 = slot == 0 ? hinge_loss(spec, mahalanobis_distance(model, x1, zero), model.bias, tau)
                                  : hinge_loss(spec, mahalanobis_distance(model, zero, x1), model.bias, tau);
      const double l2 = slot == 0 ? hinge_loss(spec, mahalanobis_distance(model, x2, zero), model.bias, tau)
                                  : hinge_loss(spec, mahalanobis_distance(model, zero, x2), model.bias, tau);
      double& slot_best = slot == 0 ? best.first : best.second;
      slot_best = std::max(slot_best, std::abs(l1 - l2) / step);
    }
  }
  const double slack = 1e-9;
  if (best.first > spec.lipschitz_first * (1 + slack) ||
      best.second > spec.lipschitz_second * (1 + slack))
    throw CertificationError("observed Lipschitz quotient exceeds the declared constant");
  return best;
}

}  // namespace modalbound

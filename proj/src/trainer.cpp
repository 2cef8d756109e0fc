#include "modalbound/trainer.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace modalbound {

void TrainConfig::validate() const {
  if (max_iters < 1) throw ConfigError("train.max_iters", "must be >= 1");
  if (!(step > 0.0)) throw ConfigError("train.step", "must be > 0");
  if (!(tol >= 0.0)) throw ConfigError("train.tol", "must be >= 0");
}

double TrainConfig::step_at(int iter) const {
  return schedule == StepSchedule::constant ? step : step / std::sqrt(static_cast<double>(iter + 1));
}

TrainResult minimize_pair_objective(const PairTable& table, const VectorXd& weights,
                                    const LossSpec& spec, const ModalityLayout& layout,
                                    const DiagonalMetricModel& init, const TrainConfig& cfg) {
  cfg.validate();
  const Index pairs = table.pairs();
  if (pairs == 0) throw SizeError("objective has no pairs");
  const bool uniform = weights.size() == 0;
  if (!uniform && weights.size() != pairs) throw ShapeError("weights length != pair count");
  const VectorXd w = uniform ? VectorXd::Constant(pairs, 1.0 / static_cast<double>(pairs)) : weights;
  const double bound = spec.clip * w.cwiseAbs().sum() * (1.0 + 1e-12);

  const double d_cap = init.caps.eigen_cap;
  const double kappa = init.caps.dist_cap;
  const VectorXd on = coordinate_mask(layout, init.mask);

  DiagonalMetricModel current = init;
  current.lambdas = project_to_constraints(init.lambdas, layout, init.mask, d_cap);
  current.bias = std::clamp(init.bias, 0.0, kappa);

  TrainResult result;
  result.model = current;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_history;
  best_history.reserve(static_cast<std::size_t>(cfg.max_iters));

  for (int t = 0; t < cfg.max_iters; ++t) {
    const VectorXd raw = table.sqdiff * current.lambdas;
    const VectorXd arg =
        (spec.margin + table.tau.array() * (raw.array().min(kappa) - current.bias)).matrix();
    const double value = w.dot(arg.cwiseMax(0.0).cwiseMin(spec.clip));
    if (!std::isfinite(value) || !current.lambdas.allFinite() || !std::isfinite(current.bias))
      throw NumericError("non-finite iterate at iteration " + std::to_string(t));
    if (std::abs(value) > bound) throw Error("objective left its bounded range");

    if (value < best) {
      best = value;
      result.model = current;
    }
    const double eta = cfg.step_at(t);
    result.log.push_back({t, value, eta});
    result.iters_used = t + 1;
    best_history.push_back(best);
    if (t >= 50 && best_history[static_cast<std::size_t>(t - 50)] - best < cfg.tol) {
      result.converged = true;
      break;
    }

    // coef_p = w_p * tau_p on the linear piece of the hinge, 0 elsewhere.
    const VectorXd coef =
        ((arg.array() > 0.0) && (arg.array() < spec.clip)).select(w.array() * table.tau.array(), 0.0);
    const VectorXd lambda_coef = (raw.array() < kappa).select(coef.array(), 0.0);
    const VectorXd grad_u = d_cap * (table.sqdiff.transpose() * lambda_coef).cwiseProduct(on);
    const double grad_v = -kappa * coef.sum();
    const double norm = std::sqrt(grad_u.squaredNorm() + grad_v * grad_v);
    if (norm == 0.0) {
      result.converged = true;
      break;
    }
    current.lambdas = project_to_constraints(current.lambdas - (eta * d_cap / norm) * grad_u,
                                             layout, init.mask, d_cap);
    current.bias = std::clamp(current.bias - eta * kappa * grad_v / norm, 0.0, kappa);
  }
  result.final_empirical_risk = best;
  return result;
}

PairTable training_pairs(const Dataset& data, const TrainConfig& cfg) {
  const MatrixXd x = feature_matrix(data);
  const auto y = labels_of(data);
  if (cfg.risk_mode == RiskMode::ustat) return ustat_pairs(x, y);
  const auto perm = random_permutation(data.size(), cfg.seed);
  return block_pairs(x, y, perm);
}

TrainResult train(const Dataset& data, const ModalitySet& mask, const LossSpec& spec,
                  const MetricCaps& caps, const TrainConfig& cfg,
                  const DiagonalMetricModel* warm_start) {
  if (data.size() < 2) throw SizeError("train needs n >= 2");
  mask.validate(data.layout.num_modalities());
  DiagonalMetricModel init = initial_model(data.layout, mask, caps);
  if (warm_start) {
    if (warm_start->lambdas.size() != data.layout.total_dim())
      throw ShapeError("warm start has wrong dimension");
    init.lambdas = warm_start->lambdas;
    init.bias = warm_start->bias;
  }
  TrainResult result =
      minimize_pair_objective(training_pairs(data, cfg), VectorXd(), spec, data.layout, init, cfg);
  if (data.ground_truth && data.latents)
    result.excess_empirical_risk = excess_empirical_risk(result.model, data, spec, cfg);
  return result;
}

DiagonalMetricModel ground_truth_model(const GroundTruth& gt, const MetricCaps& caps) {
  DiagonalMetricModel m;
  m.lambdas = gt.latent_metric;
  m.bias = gt.bayes_threshold;
  m.mask = ModalitySet::all(1);
  m.caps = caps;
  m.caps.eigen_cap = std::max(caps.eigen_cap, gt.latent_metric.maxCoeff());
  return m;
}

double ground_truth_risk(const Dataset& data, const LossSpec& spec, const MetricCaps& caps,
                         const TrainConfig& cfg) {
  if (!data.ground_truth || !data.latents)
    throw ConfigError("ground_truth", "dataset carries no ground truth latents");
  const auto y = labels_of(data);
  const MatrixXd& z = *data.latents;
  const PairTable t = cfg.risk_mode == RiskMode::ustat
                          ? ustat_pairs(z, y)
                          : block_pairs(z, y, random_permutation(data.size(), cfg.seed));
  return mean_loss(t, spec, ground_truth_model(*data.ground_truth, caps));
}

double excess_empirical_risk(const DiagonalMetricModel& model, const Dataset& data,
                             const LossSpec& spec, const TrainConfig& cfg) {
  const double reference = ground_truth_risk(data, spec, model.caps, cfg);
  return mean_loss(training_pairs(data, cfg), spec, model) - reference;
}

MonotonicityResult monotonicity_check(const Dataset& data, const ModalitySet& n,
                                      const ModalitySet& m, const LossSpec& spec,
                                      const MetricCaps& caps, const TrainConfig& cfg) {
  if (!n.is_subset_of(m)) throw PreconditionError("monotonicity_check requires N subset of M");
  MonotonicityResult out;
  out.result_n = train(data, n, spec, caps, cfg);
  if (n == m) {
    out.result_m = train(data, m, spec, caps, cfg);
  } else {
    // N's lambdas are already zero outside N, hence feasible for M.
    out.result_m = train(data, m, spec, caps, cfg, &out.result_n.model);
  }
  out.risk_n = out.result_n.final_empirical_risk;
  out.risk_m = out.result_m.final_empirical_risk;
  out.warm_start_risk = out.result_m.log.front().risk;
  out.ok = out.risk_m <= out.risk_n + std::max(cfg.tol, 1e-6);
  return out;
}

GroundTruth calibrate_ground_truth(const GroundTruth& gt, const ModalityLayout& layout,
                                   const LossSpec& spec, const MetricCaps& caps,
                                   Index reference_n, std::uint64_t seed, bool fit_metric) {
  const Dataset ref = generate_dataset(layout, reference_n, gt, seed);
  const auto y = labels_of(ref);
  const PairTable t = block_pairs(*ref.latents, y);
  GroundTruth out = gt;
  if (fit_metric) {
    const ModalityLayout latent_layout({gt.latent_dim});
    MetricCaps latent_caps = caps;
    DiagonalMetricModel init = initial_model(latent_layout, ModalitySet::all(1), latent_caps);
    TrainConfig cfg;
    cfg.max_iters = 3000;
    cfg.tol = 0.0;
    out.latent_metric =
        minimize_pair_objective(t, VectorXd(), spec, latent_layout, init, cfg).model.lambdas;
  }
  const VectorXd d = pair_distances(t, out.latent_metric, caps.dist_cap);
  out.bayes_threshold = optimal_bias(d, t.tau, spec, caps.dist_cap).bias;
  return out;
}

}  // namespace modalbound

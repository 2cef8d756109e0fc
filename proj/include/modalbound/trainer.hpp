#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "modalbound/risk.hpp"

namespace modalbound {

enum class StepSchedule { constant, inverse_sqrt };

struct TrainConfig {
  int max_iters = 1000;
  StepSchedule schedule = StepSchedule::inverse_sqrt;
  double step = 0.1;  // base step in box-normalized coordinates
  double tol = 1e-9;  // stop when the best risk improves by less over 50 iterations
  RiskMode risk_mode = RiskMode::ustat;
  std::uint64_t seed = 0;

  void validate() const;
  double step_at(int iter) const;
};

struct TrainLogEntry {
  int iter = 0;
  double risk = 0.0;
  double step_size = 0.0;
};

struct TrainResult {
  DiagonalMetricModel model;
  double final_empirical_risk = 0.0;
  std::optional<double> excess_empirical_risk;
  int iters_used = 0;
  bool converged = false;
  std::vector<TrainLogEntry> log;
};

/// Projected normalized subgradient descent on sum_p w_p * l_p(lambda, b) over
/// the feasible box (0 <= lambda <= D on masked coordinates, 0 <= b <= kappa).
/// Steps are taken in coordinates rescaled by (D, kappa) so that both blocks
/// move on the same scale. Returns the best iterate seen. Empty `weights`
/// means the uniform mean over pairs.
TrainResult minimize_pair_objective(const PairTable& table, const VectorXd& weights,
                                    const LossSpec& spec, const ModalityLayout& layout,
                                    const DiagonalMetricModel& init, const TrainConfig& cfg);

// Pairs the objective is evaluated on: all pairs for ustat, seeded block
// decoupling for block mode.
PairTable training_pairs(const Dataset& data, const TrainConfig& cfg);

TrainResult train(const Dataset& data, const ModalitySet& mask, const LossSpec& spec,
                  const MetricCaps& caps, const TrainConfig& cfg,
                  const DiagonalMetricModel* warm_start = nullptr);

// h*∘g* as a diagonal model on the latent coordinates.
DiagonalMetricModel ground_truth_model(const GroundTruth& gt, const MetricCaps& caps);

// Empirical risk of h*∘g* on the pairs `cfg` selects, from the stored latents.
double ground_truth_risk(const Dataset& data, const LossSpec& spec, const MetricCaps& caps,
                         const TrainConfig& cfg);

// r^(model) - r^(h*∘g*) on the same pairs.
double excess_empirical_risk(const DiagonalMetricModel& model, const Dataset& data,
                             const LossSpec& spec, const TrainConfig& cfg);

struct MonotonicityResult {
  double risk_m = 0.0;
  double risk_n = 0.0;
  double warm_start_risk = 0.0;  // risk of the zero-padded N solution under M
  bool ok = false;
  TrainResult result_m;
  TrainResult result_n;
};

// Trains with N, then with M warm-started from the zero-padded N solution.
// ok = risk_M <= risk_N + max(cfg.tol, 1e-6).
MonotonicityResult monotonicity_check(const Dataset& data, const ModalitySet& n,
                                      const ModalitySet& m, const LossSpec& spec,
                                      const MetricCaps& caps, const TrainConfig& cfg);

// Fits the reference head threshold (and optionally the latent metric) on a
// large latent reference draw so that h*∘g* is the best diagonal composite.
GroundTruth calibrate_ground_truth(const GroundTruth& gt, const ModalityLayout& layout,
                                   const LossSpec& spec, const MetricCaps& caps,
                                   Index reference_n, std::uint64_t seed, bool fit_metric);

}  // namespace modalbound

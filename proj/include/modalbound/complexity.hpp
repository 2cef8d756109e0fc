#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "modalbound/trainer.hpp"

namespace modalbound {

enum class SupMethod { grid, sign_weighted_opt };

struct ComplexityEstimate {
  double value = 0.0;
  Index n_blocks = 0;
  int mc_trials = 0;
  double stderr_mc = 0.0;
  SupMethod sup_method = SupMethod::grid;
};

struct GridSource {
  std::vector<DiagonalMetricModel> models;
};

// Sup found by maximizing the sign-weighted block loss with the ERM optimizer
// from `restarts` random feasible starts.
struct OptSource {
  ModalitySet mask;
  MetricCaps caps;
  TrainConfig train;
  int restarts = 4;
};

using HypothesisSource = std::variant<GridSource, OptSource>;

// Per-hypothesis block losses, one row per model: row g holds
// l(g, Z_i, Z_{h+i}) for i < h = floor(n/2).
MatrixXd block_loss_table(const Dataset& data, const LossSpec& spec,
                          const std::vector<DiagonalMetricModel>& models);

/// Monte-Carlo estimate of E_sigma max_g (1/h) sum_i sigma_i table(g, i).
ComplexityEstimate rademacher_mc_table(const MatrixXd& loss_table, int mc_trials,
                                       std::uint64_t seed);

/// Empirical Rademacher complexity of the loss class over the decoupled
/// blocks (Z_i, Z_{floor(n/2)+i}) of `data`.
ComplexityEstimate rademacher_mc(const Dataset& data, const LossSpec& spec,
                                 const HypothesisSource& source, int mc_trials,
                                 std::uint64_t seed, unsigned threads = 1);

enum class MassartVariant { sup_norm, standard };

// sup_norm: max_w ||w||_inf * sqrt(2 log |W|) / n
// standard: max_w ||w||_2   * sqrt(2 log |W|) / n
// with n the length of the loss vectors (number of blocks).
double massart_bound(const MatrixXd& loss_table, MassartVariant variant);

// The closed form itself: max_norm * sqrt(2 log class_size) / n.
double massart_value(double max_norm, double class_size, Index n);

// A closed-form bound that may be undefined; `flags` explains why.
struct BoundValue {
  std::optional<double> value;
  std::vector<std::string> flags;
};

inline constexpr const char* kTheorem5LogFlag = "theorem5-log-argument-nonpositive";
inline constexpr const char* kBoundaryFlag = "boundary";

/// D * sqrt(2 ln(kappa / (D^m B^2))) / floor(n/2). Exactly 0 with flag
/// "boundary" when the log argument is 1; undefined when it is below 1.
BoundValue theorem5_bound(double eigen_cap, double dist_cap, double feature_cap, Index dim,
                          Index n);

struct EtaEstimate {
  double value = 0.0;
  double stderr_mc = 0.0;
  double best_bias = 0.0;
  double model_risk = 0.0;      // holdout risk of the best head on g
  double reference_risk = 0.0;  // holdout risk of h*∘g*
};

// eta(g) = inf_b r(b∘g) - r(h*∘g*), both estimated on the decoupled block
// pairs of `holdout`. The infimum over heads is exact.
EtaEstimate estimate_eta_on(const DiagonalMetricModel& g, const Dataset& holdout,
                            const LossSpec& spec);

// Draws a fresh holdout of `holdout_n` >= 1000 samples first.
EtaEstimate estimate_eta(const DiagonalMetricModel& g, const GeneratorConfig& generator,
                         Index holdout_n, const LossSpec& spec, std::uint64_t seed);

inline double gamma_s(double eta_m, double eta_n) { return eta_m - eta_n; }

}  // namespace modalbound

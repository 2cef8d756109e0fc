#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modalbound/io.hpp"

namespace modalbound {

struct ComplexitySettings {
  int grid_size = 256;
  int mc_trials = 1000;
  SupMethod method = SupMethod::grid;
  int restarts = 4;
};

struct ModalityPair {
  ModalitySet n;
  ModalitySet m;  // n must be a subset of m
};

struct SweepSpec {
  ExperimentConfig experiment;
  std::vector<Index> n_values;
  std::vector<ModalityPair> pairs;
  int trials = 1;
  double delta = 0.05;
  Index holdout_factor = 20;
  Index holdout_min = 1000;
  ComplexitySettings complexity;
  std::uint64_t base_seed = 0;
  std::optional<int> split_modality;  // applied to the layout before anything else

  void validate() const;
  Index holdout_size(Index n) const { return std::max(holdout_factor * n, holdout_min); }
};

// Reads a sweep document: the experiment blocks plus
//   "sweep": {n_values, pairs: [{N, M}], trials, delta, holdout_factor,
//             holdout_min, split_modality}
//   "complexity": {grid_size, mc_trials, method, restarts}
//   "seed"
SweepSpec sweep_from_json(const json& root);

struct SweepRow {
  int trial = 0;
  Index n = 0;
  ModalitySet n_set;
  ModalitySet m_set;
  double risk_hat_n = 0.0;
  double risk_hat_m = 0.0;
  double pop_risk_n = 0.0;
  double pop_risk_m = 0.0;
  double eta_n = 0.0;
  double eta_m = 0.0;
  double gamma = 0.0;
  double rad_mc = 0.0;
  double rad_massart_sup = 0.0;  // column rad_massart_paper
  double rad_massart_std = 0.0;
  std::optional<double> t5_bound;
  double t3_lhs = 0.0;
  double t3_rhs = 0.0;
  std::optional<bool> t3_holds;
  double t4_lhs = 0.0;
  double t4_rhs = 0.0;
  std::optional<bool> t4_holds;
  std::optional<double> t6_gap;
  std::optional<bool> t6_holds_as_printed;
  std::optional<bool> t6_holds_insight5;
  std::optional<bool> prop1_ok;
  std::vector<std::string> flags;

  // A cell that threw records an "error:" flag and NaN measurements.
  bool failed() const;
};

const std::vector<std::string>& sweep_columns();
std::string sweep_header();
std::string format_row(const SweepRow& row);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// One (n, pair, trial) cell. Never throws for numeric or data problems.
SweepRow run_cell(const SweepSpec& spec, Index n, std::size_t pair_index, int trial);

// Rows ordered by (n, pair index, trial) regardless of `threads`.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads = 1);

json sweep_metadata(const SweepSpec& spec);

// Default artifact experiment: three 2-d modalities over a 2-d latent space.
json default_experiment_json();

}  // namespace modalbound

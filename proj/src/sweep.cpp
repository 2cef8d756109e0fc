#include "modalbound/sweep.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "modalbound/parallel.hpp"
#include "modalbound/random.hpp"

namespace modalbound {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string set_cell(const ModalitySet& s) { return s.empty() ? "none" : s.to_string(';'); }

std::string bool_cell(const std::optional<bool>& b) {
  if (!b) return "nan";
  return *b ? "true" : "false";
}

std::string opt_cell(const std::optional<double>& v) { return format_double(v.value_or(kNaN)); }

std::string clean_flag(std::string s) {
  for (char& c : s)
    if (c == ',' || c == ';' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

void append_flags(std::vector<std::string>& out, const std::vector<std::string>& flags) {
  for (const auto& f : flags) out.push_back(clean_flag(f));
}

SweepRow failed_row(Index n, const ModalityPair& pair, int trial, const std::string& what) {
  SweepRow row;
  row.trial = trial;
  row.n = n;
  row.n_set = pair.n;
  row.m_set = pair.m;
  for (double* v : {&row.risk_hat_n, &row.risk_hat_m, &row.pop_risk_n, &row.pop_risk_m,
                    &row.eta_n, &row.eta_m, &row.gamma, &row.rad_mc, &row.rad_massart_sup,
                    &row.rad_massart_std, &row.t3_lhs, &row.t3_rhs, &row.t4_lhs, &row.t4_rhs})
    *v = kNaN;
  row.flags.push_back("error:" + clean_flag(what));
  return row;
}

}  // namespace

void SweepSpec::validate() const {
  if (n_values.empty()) throw ConfigError("sweep.n_values", "must be non-empty");
  for (Index n : n_values)
    if (n < 2) throw ConfigError("sweep.n_values", "every n must be >= 2");
  if (pairs.empty()) throw ConfigError("sweep.pairs", "must be non-empty");
  const int k = experiment.generator.layout.num_modalities();
  for (const auto& p : pairs) {
    try {
      p.n.validate(k);
      p.m.validate(k);
    } catch (const LayoutError& e) {
      throw ConfigError("sweep.pairs", e.what());
    }
    if (!p.n.is_subset_of(p.m)) throw ConfigError("sweep.pairs", "N must be a subset of M");
    if (p.m.empty()) throw ConfigError("sweep.pairs", "M must name at least one modality");
  }
  if (trials < 1) throw ConfigError("sweep.trials", "must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("sweep.delta", "must lie in (0, 1)");
  if (holdout_factor < 1) throw ConfigError("sweep.holdout_factor", "must be >= 1");
  if (holdout_min < 1000) throw ConfigError("sweep.holdout_min", "must be >= 1000");
  if (complexity.grid_size < 1) throw ConfigError("complexity.grid_size", "must be >= 1");
  if (complexity.mc_trials < 100) throw ConfigError("complexity.mc_trials", "must be >= 100");
  if (complexity.restarts < 1) throw ConfigError("complexity.restarts", "must be >= 1");
}

SweepSpec sweep_from_json(const json& root) {
  const ConfigReader r(root, "");
  SweepSpec spec;
  spec.experiment = experiment_from_json(root);
  spec.base_seed = r.seed("seed", 0);

  const ConfigReader s = r.child("sweep");
  if (s.has("split_modality")) {
    const int k = static_cast<int>(s.integer("split_modality"));
    try {
      SplitResult split = split_modality(spec.experiment.generator.layout,
                                         spec.experiment.generator.ground_truth, k);
      spec.experiment.generator.layout = std::move(split.layout);
      spec.experiment.generator.ground_truth = std::move(split.ground_truth);
    } catch (const Error& e) {
      throw ConfigError(s.path_of("split_modality"), e.what());
    }
    spec.split_modality = k;
  }
  const int k = spec.experiment.generator.layout.num_modalities();
  for (int n : s.has("n_values") ? s.integers("n_values") : std::vector<int>{32, 128})
    spec.n_values.push_back(n);
  if (s.has("pairs")) {
    const json& pairs = s.raw().at("pairs");
    if (!pairs.is_array()) throw ConfigError(s.path_of("pairs"), "expected an array");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const ConfigReader p(pairs[i], s.path_of("pairs") + "[" + std::to_string(i) + "]");
      try {
        spec.pairs.push_back({ModalitySet::parse(p.string("N", "none"), k),
                              ModalitySet::parse(p.string("M", "all"), k)});
      } catch (const LayoutError& e) {
        throw ConfigError(p.path_of("N"), e.what());
      }
    }
  } else {
    spec.pairs.push_back({ModalitySet::all(1), ModalitySet::all(k)});
  }
  spec.trials = static_cast<int>(s.integer("trials", 1));
  spec.delta = s.number("delta", 0.05);
  spec.holdout_factor = s.integer("holdout_factor", 20);
  spec.holdout_min = s.integer("holdout_min", 1000);

  const ConfigReader c = r.child("complexity");
  spec.complexity.grid_size = static_cast<int>(c.integer("grid_size", 256));
  spec.complexity.mc_trials = static_cast<int>(c.integer("mc_trials", 1000));
  const std::string method = c.string("method", "grid");
  if (method == "grid")
    spec.complexity.method = SupMethod::grid;
  else if (method == "sign-weighted-opt")
    spec.complexity.method = SupMethod::sign_weighted_opt;
  else
    throw ConfigError(c.path_of("method"), "expected 'grid' or 'sign-weighted-opt'");
  spec.complexity.restarts = static_cast<int>(c.integer("restarts", 4));
  spec.validate();
  return spec;
}

bool SweepRow::failed() const {
  for (const auto& f : flags)
    if (f.rfind("error:", 0) == 0) return true;
  return false;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> columns = {
      "trial",      "n",          "N_set",       "M_set",
      "risk_hat_N", "risk_hat_M", "pop_risk_N",  "pop_risk_M",
      "eta_N",      "eta_M",      "gamma",       "rad_mc",
      "rad_massart_paper", "rad_massart_std", "t5_bound", "t3_lhs",
      "t3_rhs",     "t3_holds",   "t4_lhs",      "t4_rhs",
      "t4_holds",   "t6_gap",     "t6_holds_as_printed", "t6_holds_insight5",
      "prop1_ok",   "flags"};
  return columns;
}

std::string sweep_header() {
  std::string out;
  for (const auto& c : sweep_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string format_row(const SweepRow& r) {
  std::string flags;
  for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
  const std::vector<std::string> cells = {
      std::to_string(r.trial),        std::to_string(r.n),
      set_cell(r.n_set),              set_cell(r.m_set),
      format_double(r.risk_hat_n),    format_double(r.risk_hat_m),
      format_double(r.pop_risk_n),    format_double(r.pop_risk_m),
      format_double(r.eta_n),         format_double(r.eta_m),
      format_double(r.gamma),         format_double(r.rad_mc),
      format_double(r.rad_massart_sup), format_double(r.rad_massart_std),
      opt_cell(r.t5_bound),           format_double(r.t3_lhs),
      format_double(r.t3_rhs),        bool_cell(r.t3_holds),
      format_double(r.t4_lhs),        format_double(r.t4_rhs),
      bool_cell(r.t4_holds),          opt_cell(r.t6_gap),
      bool_cell(r.t6_holds_as_printed), bool_cell(r.t6_holds_insight5),
      bool_cell(r.prop1_ok),          flags.empty() ? "none" : flags};
  std::string out;
  for (const auto& c : cells) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = sweep_header() + "\n";
  for (const auto& r : rows) out += format_row(r) + "\n";
  return out;
}

SweepRow run_cell(const SweepSpec& spec, Index n, std::size_t pair_index, int trial) {
  const ModalityPair& pair = spec.pairs.at(pair_index);
  try {
    const ExperimentConfig& ex = spec.experiment;
    const ModalityLayout& layout = ex.generator.layout;
    const GroundTruth& gt = ex.generator.ground_truth;
    const auto un = static_cast<std::uint64_t>(n);
    const auto ut = static_cast<std::uint64_t>(trial);
    // Data, holdout and signs depend on (n, trial) only, so every pair in a
    // cell sees the same sample.
    const Dataset data = generate_dataset(layout, n, gt, substream_key(spec.base_seed, {0x64617461ULL, un, ut}));
    const Dataset holdout = generate_dataset(layout, spec.holdout_size(n), gt,
                                             substream_key(spec.base_seed, {0x686f6c64ULL, un, ut}));
    const std::uint64_t sigma_seed = substream_key(spec.base_seed, {0x7369676dULL, un, ut});

    MetricCaps caps = ex.caps;
    const double observed_cap = feature_diff_cap_check(data);
    if (ex.feature_cap && observed_cap > *ex.feature_cap)
      throw PreconditionError("data exceeds the configured feature_cap");
    caps.feature_cap = ex.feature_cap ? *ex.feature_cap : observed_cap;
    const LossSpec loss = ex.loss.make(caps, layout.total_dim());

    SweepRow row;
    row.trial = trial;
    row.n = n;
    row.n_set = pair.n;
    row.m_set = pair.m;

    const MonotonicityResult mono = monotonicity_check(data, pair.n, pair.m, loss, caps, ex.train);
    const DiagonalMetricModel& g_n = mono.result_n.model;
    const DiagonalMetricModel& g_m = mono.result_m.model;
    row.risk_hat_n = mono.risk_n;
    row.risk_hat_m = mono.risk_m;
    row.prop1_ok = mono.ok;
    row.pop_risk_n = block_risk(loss, g_n, holdout).value;
    row.pop_risk_m = block_risk(loss, g_m, holdout).value;
    row.eta_n = estimate_eta_on(g_n, holdout, loss).value;
    row.eta_m = estimate_eta_on(g_m, holdout, loss).value;
    row.gamma = gamma_s(row.eta_m, row.eta_n);

    const ModalitySet full = ModalitySet::all(layout.num_modalities());
    const auto grid = halton_model_grid(layout, full, caps, spec.complexity.grid_size,
                                        substream_key(spec.base_seed, {0x67726964ULL}));
    const auto grid_m = restrict_grid(grid, layout, pair.m);
    auto source = [&](const ModalitySet& mask, const std::vector<DiagonalMetricModel>& models)
        -> HypothesisSource {
      if (spec.complexity.method == SupMethod::grid) return GridSource{models};
      return OptSource{mask, caps, ex.train, spec.complexity.restarts};
    };
    const ComplexityEstimate rad_full =
        rademacher_mc(data, loss, source(full, grid), spec.complexity.mc_trials, sigma_seed);
    const ComplexityEstimate rad_m =
        rademacher_mc(data, loss, source(pair.m, grid_m), spec.complexity.mc_trials, sigma_seed);
    row.rad_mc = rad_full.value;
    const MatrixXd table = block_loss_table(data, loss, grid);
    row.rad_massart_sup = massart_bound(table, MassartVariant::sup_norm);
    row.rad_massart_std = massart_bound(table, MassartVariant::standard);

    const BoundReport t5 = theorem5_report(rad_full.value, caps.eigen_cap, caps.dist_cap,
                                           caps.feature_cap, layout.total_dim(), n);
    row.t5_bound = t5.rhs;
    append_flags(row.flags, t5.validity_flags);

    const BoundReport t3 = theorem3_report(row.pop_risk_m, row.pop_risk_n, row.gamma,
                                           rad_full.value, loss, n, spec.delta);
    row.t3_lhs = *t3.lhs;
    row.t3_rhs = *t3.rhs;
    row.t3_holds = t3.holds;

    const double excess_m = mono.result_m.excess_empirical_risk.value_or(kNaN);
    const double excess_n = mono.result_n.excess_empirical_risk.value_or(kNaN);
    const BoundReport t4 = theorem4_report(row.eta_m, rad_m.value, rad_full.value, excess_m,
                                           loss, n, spec.delta);
    row.t4_lhs = *t4.lhs;
    row.t4_rhs = *t4.rhs;
    row.t4_holds = t4.holds;

    const Theorem6Readings t6 = theorem6_readings(
        excess_m, excess_n, pair.m.feature_dim(layout), pair.n.feature_dim(layout),
        caps.eigen_cap, caps.dist_cap, caps.feature_cap, loss, n);
    row.t6_gap = t6.gap.value;
    row.t6_holds_as_printed = t6.holds_as_printed;
    row.t6_holds_insight5 = t6.holds_reduction;
    append_flags(row.flags, t6.gap.flags);
    if (!mono.ok) row.flags.push_back("error:monotonicity-violated");
    return row;
  } catch (const std::exception& e) {
    return failed_row(n, pair, trial, e.what());
  }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads) {
  spec.validate();
  struct Cell {
    Index n;
    std::size_t pair;
    int trial;
  };
  std::vector<Cell> cells;
  for (Index n : spec.n_values)
    for (std::size_t p = 0; p < spec.pairs.size(); ++p)
      for (int t = 0; t < spec.trials; ++t) cells.push_back({n, p, t});
  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    rows[i] = run_cell(spec, cells[i].n, cells[i].pair, cells[i].trial);
  });
  return rows;
}

json sweep_metadata(const SweepSpec& spec) {
  json pairs = json::array();
  for (const auto& p : spec.pairs) pairs.push_back({{"N", set_cell(p.n)}, {"M", set_cell(p.m)}});
  const auto& ex = spec.experiment;
  return {
      {"columns", sweep_columns()},
      {"seed", spec.base_seed},
      {"n_values", spec.n_values},
      {"pairs", pairs},
      {"trials", spec.trials},
      {"delta", spec.delta},
      {"population_risk",
       {{"estimator", "block risk on a fresh holdout per trial"},
        {"holdout_size", "max(holdout_factor * n, holdout_min)"},
        {"holdout_factor", spec.holdout_factor},
        {"holdout_min", spec.holdout_min}}},
      {"complexity",
       {{"grid_size", spec.complexity.grid_size},
        {"mc_trials", spec.complexity.mc_trials},
        {"method", to_string(spec.complexity.method)},
        {"restarts", spec.complexity.restarts},
        {"rad_mc_class", "full modality set"}}},
      {"layout", to_json(ex.generator.layout)},
      {"split_modality", spec.split_modality ? json(*spec.split_modality) : json(nullptr)},
      {"metric",
       {{"eigen_cap", ex.caps.eigen_cap},
        {"dist_cap", ex.caps.dist_cap},
        {"feature_cap", ex.feature_cap ? json(*ex.feature_cap) : json("per-trial data range")}}},
      {"loss", {{"margin", ex.loss.margin}, {"clip", ex.loss.clip.value_or(ex.loss.margin + ex.caps.dist_cap)}}},
      {"t6_dims", "feature dimension of each modality set"},
      {"t6_readings", {{"t6_holds_as_printed", "Lhat_M - Lhat_N >= gap"},
                       {"t6_holds_insight5", "Lhat_N - Lhat_M >= gap"}}},
      {"ground_truth", to_json(ex.generator.ground_truth)}};
}

json default_experiment_json() {
  return json::parse(R"({
    "layout": {"dims": [2, 2, 2]},
    "generator": {"latent_dim": 2, "noise_sigma": 0.25, "num_classes": 2, "center_scale": 1.0,
                  "mixing": "random", "mixing_scale": 0.5, "mixing_seed": 7,
                  "calibrate": {"reference_n": 4000, "fit_metric": true}},
    "loss": {"margin": 1.0},
    "metric": {"eigen_cap": 1.0, "dist_cap": 64.0},
    "train": {"max_iters": 400, "schedule": "inverse-sqrt", "step": 0.2, "tol": 1e-9,
              "risk_mode": "ustat", "seed": 0}
  })");
}

}  // namespace modalbound

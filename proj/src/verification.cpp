#include "modalbound/verification.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "modalbound/jacobi.hpp"
#include "modalbound/parallel.hpp"
#include "modalbound/plot.hpp"
#include "modalbound/random.hpp"

namespace modalbound {
namespace {

using SuiteFn = std::function<SuiteResult(const VerifyOptions&)>;

ModalitySet set_of(std::initializer_list<int> members) { return ModalitySet(std::vector<int>(members)); }

MetricCaps reference_caps(const ExperimentConfig& ex, std::uint64_t seed) {
  const Dataset ref = generate_dataset(ex.generator.layout, 1000, ex.generator.ground_truth,
                                       substream_key(seed, {0x63617073ULL}));
  MetricCaps caps = ex.caps;
  caps.feature_cap = ex.feature_cap.value_or(feature_diff_cap_range(feature_matrix(ref)));
  return caps;
}

SuiteResult hierarchy(const VerifyOptions& opts) {
  SuiteResult r;
  int failures = 0, checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Stream s(opts.seed, {0x68696572ULL, static_cast<std::uint64_t>(trial)});
    const int k = 2 + trial % 3;
    std::vector<int> dims;
    for (int i = 0; i < k; ++i) dims.push_back(1 + static_cast<int>(s.bits() % 4));
    const ModalityLayout layout(dims);
    std::vector<int> m, n;
    for (int i = 1; i <= k; ++i)
      if (s.bits() & 1) {
        m.push_back(i);
        if (s.bits() & 1) n.push_back(i);
      }
    const ModalitySet mm(m), nn(n);
    const MultimodalSample x = make_sample(layout, s.normal_vector(layout.total_dim()), 0);
    const MultimodalSample px = project_modality(x, mm);
    bool ok = compose_projection_check(x, nn, mm);
    ok = ok && project_modality(px, mm) == px;  // idempotent
    const VectorXd flat = flatten(project_modality(x, nn));
    ok = ok && (flat.array() * (1.0 - coordinate_mask(layout, nn).array()) == 0.0).all();
    failures += ok ? 0 : 1;
    ++checks;
  }
  r.pass = failures == 0;
  r.details = {{"instances", checks}, {"failures", failures}, {"modality_counts", {2, 3, 4}}};
  return r;
}

SuiteResult decoupling(const VerifyOptions& opts) {
  SuiteResult r;
  const ExperimentConfig ex = experiment_from_json(default_experiment_json());
  const MetricCaps caps = reference_caps(ex, opts.seed);
  const LossSpec loss = ex.loss.make(caps, ex.generator.layout.total_dim());
  const auto grid = halton_model_grid(ex.generator.layout, ModalitySet::all(3), caps, 64,
                                      substream_key(opts.seed, {0x67726964ULL}));
  const DecouplingResult d = decoupling_gap(loss, grid, 200, ex.generator, 40,
                                            substream_key(opts.seed, {0x6465636fULL}), opts.threads);
  const bool holds = opts.inject_decoupling_fault
                         ? d.mean_sup_ustat > d.mean_sup_block + 2.0 * d.stderr_pooled
                         : d.holds();
  r.pass = holds;
  r.details = {{"grid_size", 64},           {"n", 40},
               {"draws", d.draws},          {"mean_sup_ustat", d.mean_sup_ustat},
               {"mean_sup_block", d.mean_sup_block}, {"stderr", d.stderr_pooled},
               {"fault_injected", opts.inject_decoupling_fault}};
  return r;
}

SuiteResult monotonicity(const VerifyOptions& opts) {
  SuiteResult r;
  const ExperimentConfig ex = experiment_from_json(default_experiment_json());
  const std::vector<ModalityPair> pairs = {
      {set_of({1}), set_of({1, 2})}, {set_of({1, 2}), set_of({1, 2, 3})}, {ModalitySet::none(), set_of({1, 2, 3})}};
  int runs = 0, ok = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int seed = 0; seed < 50; ++seed) {
    const Dataset data = generate_dataset(ex.generator.layout, 64, ex.generator.ground_truth,
                                          substream_key(opts.seed, {0x6d6f6e6fULL, static_cast<std::uint64_t>(seed)}));
    MetricCaps caps = ex.caps;
    caps.feature_cap = feature_diff_cap_check(data);
    const LossSpec loss = ex.loss.make(caps, data.layout.total_dim());
    for (const auto& p : pairs) {
      const MonotonicityResult m = monotonicity_check(data, p.n, p.m, loss, caps, ex.train);
      ++runs;
      ok += m.risk_m <= m.risk_n + 1e-6 ? 1 : 0;
      worst = std::max(worst, m.risk_m - m.risk_n);
    }
  }
  r.pass = ok == runs;
  r.details = {{"runs", runs}, {"ok", ok}, {"max_risk_increase", worst}};
  return r;
}

json count_cells(const std::vector<SweepRow>& rows, const std::function<std::optional<bool>(const SweepRow&)>& pick) {
  std::map<Index, std::pair<int, int>> by_n;  // n -> (violations, rows)
  for (const auto& row : rows) {
    auto& c = by_n[row.n];
    ++c.second;
    const auto h = pick(row);
    if (!h || !*h) ++c.first;
  }
  json out = json::array();
  for (const auto& [n, c] : by_n) out.push_back({{"n", n}, {"violations", c.first}, {"rows", c.second}});
  return out;
}

int failed_cells(const std::vector<SweepRow>& rows) {
  int f = 0;
  for (const auto& row : rows) f += row.failed() ? 1 : 0;
  return f;
}

SuiteResult theorem3(const VerifyOptions& opts) {
  SuiteResult r;
  const SweepSpec spec = verification_sweep({32, 128}, {{set_of({1}), set_of({1, 2, 3})}}, 200,
                                            substream_key(opts.seed, {0x7433ULL}));
  const auto rows = run_sweep(spec, opts.threads);
  const json cells = count_cells(rows, [](const SweepRow& row) { return row.t3_holds; });
  bool pass = failed_cells(rows) == 0;
  for (const auto& c : cells) pass = pass && c["violations"].get<int>() <= 24;
  r.pass = pass;
  r.details = {{"delta", spec.delta}, {"trials_per_cell", spec.trials}, {"max_violations", 24},
               {"cells", cells}, {"failed_cells", failed_cells(rows)}};
  return r;
}

SuiteResult theorem4(const VerifyOptions& opts) {
  SuiteResult r;
  const SweepSpec spec = verification_sweep({64}, {{set_of({1}), set_of({1, 2, 3})}}, 100,
                                            substream_key(opts.seed, {0x7434ULL}));
  const auto rows = run_sweep(spec, opts.threads);
  int holds = 0;
  for (const auto& row : rows) holds += row.t4_holds.value_or(false) ? 1 : 0;
  const double rate = static_cast<double>(holds) / static_cast<double>(rows.size());
  r.pass = rate >= 0.95 && failed_cells(rows) == 0;
  r.details = {{"delta", spec.delta}, {"trials", rows.size()}, {"holds", holds}, {"hold_rate", rate},
               {"failed_cells", failed_cells(rows)}};
  return r;
}

SuiteResult theorem5(const VerifyOptions&) {
  SuiteResult r;
  const BoundValue golden = theorem5_bound(1.0, std::exp(2.0), 1.0, 3, 10);
  const BoundValue second = theorem5_bound(2.0, 8.0, 1.0, 1, 4);
  const BoundValue boundary = theorem5_bound(2.0, 8.0, 2.0, 1, 10);  // kappa = D^m B^2
  const BoundValue below = theorem5_bound(2.0, 4.0, 2.0, 1, 10);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Index n : {4, 8, 16, 64}) {
    const double scaled = *theorem5_bound(1.0, std::exp(2.0), 1.0, 3, n).value * static_cast<double>(n / 2);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  const bool boundary_ok = boundary.value && *boundary.value == 0.0 && boundary.flags.size() == 1 &&
                           boundary.flags[0] == kBoundaryFlag;
  const bool below_ok = !below.value && below.flags.size() == 1 && below.flags[0] == kTheorem5LogFlag;
  r.pass = golden.value && std::abs(*golden.value - 0.4) <= 1e-12 && second.value &&
           std::abs(*second.value - std::sqrt(2.0 * std::log(4.0))) <= 1e-12 && boundary_ok &&
           below_ok && hi - lo <= 1e-12;
  r.details = {{"golden", golden.value.value_or(std::nan(""))},
               {"second", second.value.value_or(std::nan(""))},
               {"boundary_ok", boundary_ok},
               {"below_flagged", below_ok},
               {"scaled_spread", hi - lo}};
  return r;
}

SuiteResult rademacher(const VerifyOptions& opts) {
  SuiteResult r;
  MatrixXd two(2, 2);
  two << 0.0, 0.0, 1.0, 1.0;
  const ComplexityEstimate est = rademacher_mc_table(two, 10000, substream_key(opts.seed, {0x72616465ULL}));
  const ComplexityEstimate single =
      rademacher_mc_table(two.bottomRows(1), 10000, substream_key(opts.seed, {0x73696e67ULL}));
  const double standard = massart_bound(two, MassartVariant::standard);
  r.pass = std::abs(est.value - 0.25) <= 3.0 * est.stderr_mc &&
           std::abs(single.value) <= 3.0 * single.stderr_mc && standard >= 0.25;
  r.details = {{"estimate", est.value},     {"stderr", est.stderr_mc},
               {"exact", 0.25},             {"singleton", single.value},
               {"singleton_stderr", single.stderr_mc}, {"massart_standard", standard}};
  return r;
}

SuiteResult decay(const VerifyOptions& opts) {
  SuiteResult r;
  constexpr int kDraws = 20;
  const ExperimentConfig ex = experiment_from_json(default_experiment_json());
  const MetricCaps caps = reference_caps(ex, opts.seed);
  const LossSpec loss = ex.loss.make(caps, ex.generator.layout.total_dim());
  const auto grid = halton_model_grid(ex.generator.layout, ModalitySet::all(3), caps, 256,
                                      substream_key(opts.seed, {0x67726964ULL}));
  const std::vector<Index> ns = {32, 64, 128, 256, 512};
  std::vector<double> means(ns.size());
  parallel_for(ns.size(), opts.threads, [&](std::size_t i) {
    double acc = 0.0;
    const auto un = static_cast<std::uint64_t>(ns[i]);
    for (int d = 0; d < kDraws; ++d) {
      const auto ud = static_cast<std::uint64_t>(d);
      const Dataset data = generate_dataset(ex.generator.layout, ns[i], ex.generator.ground_truth,
                                            substream_key(opts.seed, {0x64656379ULL, un, ud}));
      acc += rademacher_mc(data, loss, GridSource{grid}, 1000,
                           substream_key(opts.seed, {0x7369676dULL, un, ud})).value;
    }
    means[i] = acc / kDraws;
  });
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    lx.push_back(std::log(static_cast<double>(ns[i])));
    ly.push_back(std::log(means[i]));
  }
  const double slope = fit_slope(lx, ly);
  r.pass = slope <= -0.5;
  r.details = {{"n_values", ns}, {"mean_rad_mc", means}, {"slope", slope},
               {"datasets_per_n", kDraws}, {"grid_size", 256}, {"mc_trials", 1000}};
  return r;
}

SuiteResult gradient(const VerifyOptions& opts) {
  SuiteResult r;
  const ModalityLayout layout({2, 3});
  const ModalitySet all = ModalitySet::all(2);
  MetricCaps caps;
  caps.eigen_cap = 2.0;
  caps.dist_cap = 10.0;
  caps.feature_cap = 2.0;
  const LossSpec spec = LossSpec::certified(caps, layout.total_dim(), 1.0, 3.0);
  constexpr double h = 1e-6;
  int points = 0, attempts = 0;
  double worst = 0.0;
  while (points < 500) {
    Stream s(opts.seed, {0x67726164ULL, static_cast<std::uint64_t>(attempts++)});
    DiagonalMetricModel m = initial_model(layout, all, caps);
    for (Index i = 0; i < m.lambdas.size(); ++i) m.lambdas(i) = s.uniform(0.0, caps.eigen_cap);
    m.bias = s.uniform(0.0, caps.dist_cap);
    VectorXd xi(layout.total_dim()), xj(layout.total_dim());
    for (Index i = 0; i < xi.size(); ++i) {
      xi(i) = s.uniform(-1.0, 1.0);
      xj(i) = s.uniform(-1.0, 1.0);
    }
    const double tau = s.sign();
    const VectorXd sq = (xi - xj).array().square().matrix();
    const double raw = m.lambdas.dot(sq);
    const double arg = spec.margin + tau * (std::min(raw, caps.dist_cap) - m.bias);
    // Keep clear of the three kinks by more than the step can move them.
    const double reach = h * (sq.sum() + 1.0) * 10.0;
    if (std::abs(raw - caps.dist_cap) < reach || std::abs(arg) < reach || std::abs(arg - spec.clip) < reach)
      continue;
    const LossGradient g = pair_loss_subgradient(spec, m, xi, xj, tau);
    auto loss_at = [&](const DiagonalMetricModel& mm) {
      return hinge_loss(spec, mahalanobis_distance(mm.lambdas, xi, xj, caps.dist_cap), mm.bias, tau);
    };
    VectorXd analytic(m.lambdas.size() + 1), numeric(m.lambdas.size() + 1);
    analytic << g.lambdas, g.bias;
    for (Index i = 0; i <= m.lambdas.size(); ++i) {
      DiagonalMetricModel up = m, down = m;
      if (i < m.lambdas.size()) {
        up.lambdas(i) += h;
        down.lambdas(i) -= h;
      } else {
        up.bias += h;
        down.bias -= h;
      }
      numeric(i) = (loss_at(up) - loss_at(down)) / (2.0 * h);
    }
    const double scale = std::max(analytic.norm(), numeric.norm());
    const double rel = scale == 0.0 ? 0.0 : (analytic - numeric).norm() / scale;
    worst = std::max(worst, rel);
    ++points;
  }
  r.pass = worst < 1e-4;
  r.details = {{"points", points}, {"max_relative_error", worst}, {"step", h}};
  return r;
}

SuiteResult diagonalization(const VerifyOptions& opts) {
  SuiteResult r;
  double worst_off = 0.0, worst_orth = 0.0;
  for (int size = 1; size <= 32; ++size) {
    Stream s(opts.seed, {0x6a61636fULL, static_cast<std::uint64_t>(size)});
    MatrixXd a(size, size);
    for (int i = 0; i < size; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = s.normal();
    const Diagonalization<double> d = jacobi_diagonalize(SymmetricMatrix<double>(a), 1e-14 * std::max(1.0, a.norm()));
    const MatrixXd t = d.q * a * d.q.transpose();
    worst_off = std::max(worst_off, off_diagonal_norm(t));
    worst_orth = std::max(worst_orth, (d.q * d.q.transpose() - MatrixXd::Identity(size, size)).norm());
  }
  MatrixXd small(2, 2);
  small << 2.0, 1.0, 1.0, 2.0;
  const VectorXd ev = jacobi_diagonalize(SymmetricMatrix<double>(small), 1e-14).values;
  const double ev_err = std::max(std::abs(ev(0) - 3.0), std::abs(ev(1) - 1.0));
  r.pass = worst_off < 1e-10 && worst_orth < 1e-10 && ev_err <= 1e-12;
  r.details = {{"max_size", 32},
               {"max_off_diagonal", worst_off},
               {"max_orthogonality_error", worst_orth},
               {"eigenvalues_2x2", {ev(0), ev(1)}}};
  return r;
}

SuiteResult theorem6(const VerifyOptions& opts) {
  SuiteResult r;
  LossSpec spec;
  spec.lipschitz_first = spec.lipschitz_second = 0.5;
  const BoundValue golden = theorem6_gap(2, 1, 2.0, 32.0, 1.0, spec, 4);
  const BoundValue unit = theorem6_gap(5, 2, 1.0, 32.0, 1.0, spec, 4);
  const BoundValue same = theorem6_gap(3, 3, 2.0, 64.0, 1.0, spec, 4);
  const SweepSpec sweep = verification_sweep({64}, {{set_of({1}), set_of({1, 2, 3})}}, 20,
                                             substream_key(opts.seed, {0x7436ULL}));
  const auto rows = run_sweep(sweep, opts.threads);
  int printed = 0, reduction = 0, defined = 0;
  for (const auto& row : rows) {
    if (!row.t6_holds_as_printed || !row.t6_holds_insight5) continue;
    ++defined;
    printed += *row.t6_holds_as_printed ? 1 : 0;
    reduction += *row.t6_holds_insight5 ? 1 : 0;
  }
  const double expected = 4.0 * (std::sqrt(2.0 * std::log(16.0)) - std::sqrt(2.0 * std::log(8.0)));
  // Hold rates are reported for both readings; neither is asserted.
  r.pass = golden.value && std::abs(*golden.value - expected) <= 1e-3 && unit.value &&
           *unit.value == 0.0 && same.value && *same.value == 0.0 && failed_cells(rows) == 0;
  r.details = {{"golden", golden.value.value_or(std::nan(""))},
               {"rows", rows.size()},
               {"defined_rows", defined},
               {"hold_rate_as_printed", defined ? static_cast<double>(printed) / defined : std::nan("")},
               {"hold_rate_reduction", defined ? static_cast<double>(reduction) / defined : std::nan("")}};
  return r;
}

SuiteResult determinism(const VerifyOptions& opts) {
  SuiteResult r;
  const SweepSpec spec = verification_sweep(
      {24, 40}, {{set_of({1}), set_of({1, 2})}, {ModalitySet::none(), set_of({1, 2, 3})}}, 2,
      substream_key(opts.seed, {0x64657465ULL}));
  const std::string first = sweep_csv(run_sweep(spec, 1));
  const std::string second = sweep_csv(run_sweep(spec, std::max(2u, opts.threads)));
  static const char* kGolden =
      "trial,n,N_set,M_set,risk_hat_N,risk_hat_M,pop_risk_N,pop_risk_M,eta_N,eta_M,gamma,rad_mc,"
      "rad_massart_paper,rad_massart_std,t5_bound,t3_lhs,t3_rhs,t3_holds,t4_lhs,t4_rhs,t4_holds,"
      "t6_gap,t6_holds_as_printed,t6_holds_insight5,prop1_ok,flags";
  const bool header_ok = first.substr(0, first.find('\n')) == kGolden;
  r.pass = first == second && header_ok;
  r.details = {{"identical", first == second}, {"header_matches", header_ok}, {"bytes", first.size()}};
  return r;
}

const std::map<std::string, SuiteFn>& registry() {
  static const std::map<std::string, SuiteFn> suites = {
      {"hierarchy", hierarchy},       {"decoupling", decoupling},
      {"monotonicity", monotonicity}, {"theorem3", theorem3},
      {"theorem4", theorem4},         {"theorem5", theorem5},
      {"rademacher", rademacher},     {"decay", decay},
      {"gradient", gradient},         {"diagonalization", diagonalization},
      {"theorem6", theorem6},         {"determinism", determinism}};
  return suites;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "hierarchy", "decoupling", "monotonicity",    "theorem3", "theorem4",   "theorem5",
      "rademacher", "decay",     "gradient", "diagonalization", "theorem6", "determinism"};
  return names;
}

SweepSpec verification_sweep(std::vector<Index> n_values, std::vector<ModalityPair> pairs,
                             int trials, std::uint64_t seed) {
  SweepSpec spec;
  spec.experiment = experiment_from_json(default_experiment_json());
  spec.n_values = std::move(n_values);
  spec.pairs = std::move(pairs);
  spec.trials = trials;
  spec.base_seed = seed;
  spec.complexity.mc_trials = 200;
  spec.validate();
  return spec;
}

SuiteResult run_suite(const std::string& name, const VerifyOptions& opts) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("suite", "unknown suite '" + name + "'");
  const auto start = std::chrono::steady_clock::now();
  SuiteResult r;
  try {
    r = it->second(opts);
  } catch (const std::exception& e) {
    r.pass = false;
    r.details = {{"error", e.what()}};
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<SuiteResult> run_suites(const std::string& name, const VerifyOptions& opts) {
  if (name != "all") return {run_suite(name, opts)};
  std::vector<SuiteResult> out;
  for (const auto& n : suite_names()) out.push_back(run_suite(n, opts));
  return out;
}

json verify_report(const std::vector<SuiteResult>& results) {
  json suites = json::object();
  bool all = true;
  for (const auto& r : results) {
    suites[r.name] = {{"result", r.pass ? "pass" : "fail"}, {"details", r.details}, {"seconds", r.seconds}};
    all = all && r.pass;
  }
  return {{"all_passed", all}, {"suites", suites}};
}

}  // namespace modalbound

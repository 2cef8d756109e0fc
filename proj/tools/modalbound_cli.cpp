#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modalbound/io.hpp"
#include "modalbound/plot.hpp"
#include "modalbound/random.hpp"
#include "modalbound/sweep.hpp"
#include "modalbound/verification.hpp"

using namespace modalbound;

namespace {

constexpr int kOk = 0;
constexpr int kFlagged = 1;
constexpr int kIoError = 2;
constexpr int kInvalid = 3;

const char* kConfigHelp = R"(
Config documents are single JSON objects. Blocks and defaults:
  layout     {"dims": [d1, ..., dK]}                        required
  generator  {latent_dim 2, noise_sigma 0.5, num_classes 2, center_scale 1,
              mixing "random"|"identity", mixing_scale 1, mixing_seed 0,
              latent_metric [ones], bayes_threshold (calibrated when absent),
              calibrate {reference_n 4000, fit_metric true}}
  ground_truth  explicit mechanism, replaces generator
  loss       {margin 1, clip margin + dist_cap}
  metric     {eigen_cap 1, dist_cap 64, feature_cap (data range when absent)}
  train      {max_iters 1000, schedule "inverse-sqrt"|"constant", step 0.1,
              tol 1e-9, risk_mode "ustat"|"block", seed 0}
  n, seed    sample count and data seed (generate)
  sweep      {n_values [32,128], pairs [{"N":"1","M":"all"}], trials 1,
              delta 0.05, holdout_factor 20, holdout_min 1000, split_modality}
  complexity {grid_size 256, mc_trials 1000, method "grid"|"sign-weighted-opt",
              restarts 4}
Exit codes: 0 ok, 1 flagged cells or failed suite, 2 I/O error, 3 invalid input.
)";

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool quiet = false;
};

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    write_text_file(out_path, text);
}

MetricCaps caps_for(const ExperimentConfig& ex, const Dataset& data) {
  MetricCaps caps = ex.caps;
  const double observed = feature_diff_cap_check(data);
  if (ex.feature_cap && observed > *ex.feature_cap)
    throw ConfigError("metric.feature_cap", "smaller than the data range " + format_double(observed));
  caps.feature_cap = ex.feature_cap ? *ex.feature_cap : observed;
  return caps;
}

int cmd_generate(const Globals& g, const std::string& config_path, const std::string& out) {
  const json root = read_json_file(config_path);
  const ExperimentConfig ex = experiment_from_json(root);
  const ConfigReader r(root, "");
  const std::int64_t n = r.integer("n");
  if (n < 2) throw ConfigError("n", "must be >= 2");
  const std::uint64_t seed = g.seed ? *g.seed : r.seed("seed", 0);
  const Dataset data = generate_dataset(ex.generator.layout, n, ex.generator.ground_truth, seed);
  emit(out, to_json(data).dump(1) + "\n");
  note(g, "generated " + std::to_string(n) + " samples");
  return kOk;
}

int cmd_train(const Globals& g, const std::string& data_path, const std::string& modalities,
              const std::string& config_path, const std::string& out, std::string log_path) {
  const Dataset data = dataset_from_json(read_json_file(data_path));
  ExperimentConfig ex;
  ex.loss = LossSettings{};
  ex.caps.dist_cap = 64.0;
  if (!config_path.empty()) {
    const json root = read_json_file(config_path);
    const ConfigReader r(root, "");
    ex.loss = loss_settings_from_json(r.child("loss"));
    ex.caps = caps_from_json(r.child("metric"), &ex.feature_cap);
    ex.train = train_config_from_json(r.child("train"));
  }
  if (g.seed) ex.train.seed = *g.seed;
  ModalitySet mask;
  try {
    mask = ModalitySet::parse(modalities, data.layout.num_modalities());
  } catch (const LayoutError& e) {
    throw ConfigError("modalities", e.what());
  }
  const MetricCaps caps = caps_for(ex, data);
  const LossSpec loss = ex.loss.make(caps, data.layout.total_dim());
  const TrainResult result = train(data, mask, loss, caps, ex.train);
  result.model.check_feasible(data.layout);
  emit(out, to_json(result.model).dump(1) + "\n");
  if (log_path.empty() && !out.empty() && out != "-") log_path = out + ".log.csv";
  if (!log_path.empty()) write_text_file(log_path, training_log_csv(result));
  note(g, "empirical risk " + format_double(result.final_empirical_risk) + " after " +
              std::to_string(result.iters_used) + " iterations");
  return kOk;
}

int cmd_risk(const std::string& data_path, const std::string& model_path, const std::string& mode,
             const std::string& config_path, const std::string& out) {
  const Dataset data = dataset_from_json(read_json_file(data_path));
  const DiagonalMetricModel model = model_from_json(read_json_file(model_path));
  model.check_feasible(data.layout);
  LossSettings settings;
  if (!config_path.empty()) {
    const json root = read_json_file(config_path);
    settings = loss_settings_from_json(ConfigReader(root, "").child("loss"));
  }
  const LossSpec loss = settings.make(model.caps, data.layout.total_dim());
  RiskValue v;
  if (mode == "ustat")
    v = ustat_risk(loss, model, data);
  else if (mode == "block")
    v = block_risk(loss, model, data);
  else
    throw ConfigError("mode", "expected 'ustat' or 'block'");
  json j = {{"value", v.value}, {"n_pairs", v.n_pairs}, {"mode", to_string(v.mode)}};
  emit(out, j.dump(1) + "\n");
  return kOk;
}

int cmd_rademacher(const Globals& g, const std::string& data_path, const std::string& config_path,
                   const std::string& modalities, int grid_size, int mc_trials,
                   const std::string& method, const std::string& out) {
  const Dataset data = dataset_from_json(read_json_file(data_path));
  ExperimentConfig ex;
  ex.caps.dist_cap = 64.0;
  if (!config_path.empty()) {
    const json root = read_json_file(config_path);
    const ConfigReader r(root, "");
    ex.loss = loss_settings_from_json(r.child("loss"));
    ex.caps = caps_from_json(r.child("metric"), &ex.feature_cap);
    ex.train = train_config_from_json(r.child("train"));
  }
  ModalitySet mask;
  try {
    mask = ModalitySet::parse(modalities, data.layout.num_modalities());
  } catch (const LayoutError& e) {
    throw ConfigError("modalities", e.what());
  }
  if (grid_size < 1) throw ConfigError("grid-size", "must be >= 1");
  const std::uint64_t seed = g.seed.value_or(0);
  const MetricCaps caps = caps_for(ex, data);
  const LossSpec loss = ex.loss.make(caps, data.layout.total_dim());
  const auto grid = halton_model_grid(data.layout, mask, caps, grid_size, substream_key(seed, {0x67726964ULL}));
  HypothesisSource source = GridSource{grid};
  if (method == "sign-weighted-opt")
    source = OptSource{mask, caps, ex.train, 4};
  else if (method != "grid")
    throw ConfigError("method", "expected 'grid' or 'sign-weighted-opt'");
  const ComplexityEstimate est =
      rademacher_mc(data, loss, source, mc_trials, substream_key(seed, {0x7369676dULL}), g.threads);
  const MatrixXd table = block_loss_table(data, loss, grid);
  json j = to_json(est);
  j["massart_sup_norm"] = massart_bound(table, MassartVariant::sup_norm);
  j["massart_standard"] = massart_bound(table, MassartVariant::standard);
  j["theorem5"] = to_json(theorem5_report(est.value, caps.eigen_cap, caps.dist_cap, caps.feature_cap,
                                          mask.feature_dim(data.layout), data.size()));
  emit(out, j.dump(1) + "\n");
  return kOk;
}

LossSpec loss_from_params(const ConfigReader& r) {
  LossSpec spec;
  const ConfigReader l = r.child("loss");
  spec.margin = l.number("margin", 1.0);
  spec.clip = l.number("clip", 2.0);
  spec.lipschitz_first = l.number("lipschitz_first", 1.0);
  spec.lipschitz_second = l.number("lipschitz_second", 1.0);
  return spec;
}

int cmd_bounds(const std::string& input, const std::string& out) {
  const json root = read_json_file(input);
  const ConfigReader r(root, "");
  const std::string theorem = r.string("theorem", "");
  const LossSpec spec = loss_from_params(r);
  BoundReport rep;
  if (theorem == "T3") {
    rep = theorem3_report(r.number("risk_M"), r.number("risk_N"), r.number("gamma"),
                          r.number("complexity"), spec, r.integer("n"), r.number("delta", 0.05));
  } else if (theorem == "T4") {
    rep = theorem4_report(r.number("eta_M"), r.number("complexity_M"), r.number("complexity_full"),
                          r.number("excess_empirical_M"), spec, r.integer("n"), r.number("delta", 0.05));
  } else if (theorem == "T5") {
    std::optional<double> complexity;
    if (r.has("complexity")) complexity = r.number("complexity");
    rep = theorem5_report(complexity, r.number("D"), r.number("kappa"), r.number("B"),
                          r.integer("dim"), r.integer("n"));
  } else if (theorem == "T6") {
    rep = theorem6_report(r.number("excess_M"), r.number("excess_N"), r.integer("dim_M"),
                          r.integer("dim_N"), r.number("D"), r.number("kappa"), r.number("B"), spec,
                          r.integer("n"));
  } else {
    throw ConfigError("theorem", "expected T3, T4, T5 or T6");
  }
  emit(out, to_json(rep).dump(1) + "\n");
  return kOk;
}

int cmd_sweep(const Globals& g, const std::string& config_path, const std::string& out) {
  json root = read_json_file(config_path);
  if (g.seed && root.is_object()) root["seed"] = *g.seed;
  const SweepSpec spec = sweep_from_json(root);
  const auto rows = run_sweep(spec, g.threads);
  emit(out, sweep_csv(rows));
  if (!out.empty() && out != "-") write_text_file(out + ".meta.json", sweep_metadata(spec).dump(1) + "\n");
  int failed = 0;
  for (const auto& row : rows) failed += row.failed() ? 1 : 0;
  note(g, std::to_string(rows.size()) + " rows, " + std::to_string(failed) + " failed cells");
  return failed == 0 ? kOk : kFlagged;
}

int cmd_verify(const Globals& g, const std::string& suite, const std::string& report,
               const std::string& fault) {
  VerifyOptions opts;
  opts.threads = g.threads;
  opts.seed = g.seed.value_or(0);
  if (fault == "decoupling")
    opts.inject_decoupling_fault = true;
  else if (!fault.empty())
    throw ConfigError("inject-fault", "unknown fault '" + fault + "'");
  if (suite != "all") {
    bool known = false;
    for (const auto& n : suite_names()) known = known || n == suite;
    if (!known) throw ConfigError("suite", "unknown suite '" + suite + "'");
  }
  const auto results = run_suites(suite, opts);
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    char line[160];
    std::snprintf(line, sizeof line, "%-16s %s  (%.2fs)", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.seconds);
    note(g, line);
  }
  const std::string text = verify_report(results).dump(1) + "\n";
  if (!report.empty()) write_text_file(report, text);
  else if (g.quiet) std::cout << text;
  return all ? kOk : kFlagged;
}

int cmd_plot(const std::string& csv_path, const std::string& kind, const std::string& out) {
  const PlotKind k = parse_plot_kind(kind);
  std::FILE* f = std::fopen(csv_path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + csv_path + "'");
  std::string text;
  char buf[4096];
  for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, got);
  std::fclose(f);
  emit(out, plot_tsv(plot_points(text, k)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise multimodal metric learning under modality masking, with empirical "
               "checks of its generalization bounds."};
  app.footer(kConfigHelp);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed overriding the config seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  std::string config, out, data, model, modalities = "all", mode = "ustat", log_path, suite = "all",
                                        report, fault, kind, csv, method = "grid", input;
  int grid_size = 256, mc_trials = 1000;

  auto* gen = app.add_subcommand("generate", "Draw a synthetic multimodal dataset");
  gen->add_option("--config", config, "Experiment config JSON")->required();
  gen->add_option("--out", out, "Dataset JSON path")->required();

  auto* tr = app.add_subcommand("train", "Fit a diagonal metric model by ERM");
  tr->add_option("--data", data, "Dataset JSON")->required();
  tr->add_option("--modalities", modalities, "Modality set: all, none or a list like 1,3");
  tr->add_option("--config", config, "Config JSON with loss, metric and train blocks");
  tr->add_option("--out", out, "Model JSON path")->required();
  tr->add_option("--log", log_path, "Training log CSV (default <out>.log.csv)");

  auto* rk = app.add_subcommand("risk", "Evaluate the empirical pair risk of a model");
  rk->add_option("--data", data, "Dataset JSON")->required();
  rk->add_option("--model", model, "Model JSON")->required();
  rk->add_option("--mode", mode, "ustat or block");
  rk->add_option("--config", config, "Config JSON with a loss block");
  rk->add_option("--out", out, "Output JSON (stdout when absent)");

  auto* rd = app.add_subcommand("rademacher", "Monte-Carlo Rademacher complexity on a dataset");
  rd->add_option("--data", data, "Dataset JSON")->required();
  rd->add_option("--config", config, "Config JSON with loss, metric and train blocks");
  rd->add_option("--modalities", modalities, "Modality set of the hypothesis class");
  rd->add_option("--grid-size", grid_size, "Number of grid models");
  rd->add_option("--mc-trials", mc_trials, "Sign draws (>= 100)");
  rd->add_option("--method", method, "grid or sign-weighted-opt");
  rd->add_option("--out", out, "Output JSON (stdout when absent)");

  auto* bd = app.add_subcommand("bounds", "Evaluate one bound from a parameter JSON");
  bd->add_option("--input", input, "Parameter JSON with a \"theorem\" field")->required();
  bd->add_option("--out", out, "Output JSON (stdout when absent)");

  auto* sw = app.add_subcommand("sweep", "Run an experiment sweep and write the results CSV");
  sw->add_option("--config", config, "Sweep config JSON")->required();
  sw->add_option("--out", out, "CSV path; metadata goes to <out>.meta.json")->required();

  auto* vf = app.add_subcommand("verify", "Run property suites");
  vf->add_option("--suite", suite, "Suite name or all");
  vf->add_option("--report", report, "JSON report path");
  vf->add_option("--inject-fault", fault)->group("");

  auto* pl = app.add_subcommand("plot-data", "Aggregate a sweep CSV into plot-ready TSV");
  pl->add_option("--csv", csv, "Sweep CSV")->required();
  pl->add_option("--kind", kind, "decay, bound-gap or risk-vs-modalities")->required();
  pl->add_option("--out", out, "TSV path (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*gen) return cmd_generate(g, config, out);
    if (*tr) return cmd_train(g, data, modalities, config, out, log_path);
    if (*rk) return cmd_risk(data, model, mode, config, out);
    if (*rd) return cmd_rademacher(g, data, config, modalities, grid_size, mc_trials, method, out);
    if (*bd) return cmd_bounds(input, out);
    if (*sw) return cmd_sweep(g, config, out);
    if (*vf) return cmd_verify(g, suite, report, fault);
    if (*pl) return cmd_plot(csv, kind, out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}

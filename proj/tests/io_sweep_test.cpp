#include <doctest.h>

#include <cmath>
#include <sstream>

#include "modalbound/io.hpp"
#include "modalbound/sweep.hpp"

using namespace modalbound;

namespace {

json small_sweep_json() {
  json j = default_experiment_json();
  j["generator"]["calibrate"]["reference_n"] = 1000;
  j["train"]["max_iters"] = 60;
  j["sweep"] = {{"n_values", {16}}, {"pairs", {{{"N", "1"}, {"M", "1,2"}}}}, {"trials", 1}};
  j["complexity"] = {{"grid_size", 16}, {"mc_trials", 100}};
  j["seed"] = 3;
  return j;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string config_field_of(const json& j) {
  try {
    sweep_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("dataset and model round trip through json") {
  const ModalityLayout layout({2, 1});
  GeneratorParams p;
  p.mixing_seed = 2;
  const Dataset d = generate_dataset(layout, 12, make_ground_truth(layout, p), 4);
  const Dataset back = dataset_from_json(json::parse(to_json(d).dump()));
  CHECK(back.layout == d.layout);
  CHECK(back.samples == d.samples);
  CHECK(back.seed == d.seed);
  REQUIRE(back.ground_truth);
  CHECK(back.ground_truth->mixing_matrices[0] == d.ground_truth->mixing_matrices[0]);
  CHECK(back.ground_truth->bayes_threshold == d.ground_truth->bayes_threshold);
  REQUIRE(back.latents);
  CHECK(*back.latents == *d.latents);

  Dataset masked = d;
  masked.samples[3] = project_modality(masked.samples[3], ModalitySet({2}));
  const Dataset masked_back = dataset_from_json(to_json(masked));
  CHECK_FALSE(masked_back.samples[3].is_present(1));
  CHECK(masked_back.samples == masked.samples);

  MetricCaps caps;
  caps.dist_cap = 4.0;
  DiagonalMetricModel m = initial_model(layout, ModalitySet({1}), caps);
  m.lambdas(1) = 0.1234567890123456789;
  const DiagonalMetricModel mb = model_from_json(json::parse(to_json(m).dump()));
  CHECK(mb.lambdas == m.lambdas);
  CHECK(mb.bias == m.bias);
  CHECK(mb.mask == m.mask);
  CHECK(mb.caps.dist_cap == 4.0);
}

TEST_CASE("bound report json") {
  BoundReport r;
  r.theorem = Theorem::t5;
  r.validity_flags = {"theorem5-log-argument-nonpositive"};
  const json j = to_json(r);
  CHECK(j["theorem"] == "T5");
  CHECK(j["rhs"].is_null());
  CHECK(j["holds"].is_null());
  CHECK(j["validity_flags"][0] == "theorem5-log-argument-nonpositive");
}

TEST_CASE("config errors name the offending field") {
  json j = small_sweep_json();
  j["train"]["max_iters"] = 0;
  CHECK(config_field_of(j) == "train.max_iters");

  j = small_sweep_json();
  j["metric"]["dist_cap"] = "big";
  CHECK(config_field_of(j) == "metric.dist_cap");

  j = small_sweep_json();
  j["sweep"]["delta"] = 1.5;
  CHECK(config_field_of(j) == "sweep.delta");

  j = small_sweep_json();
  j["sweep"]["pairs"] = {{{"N", "1,2"}, {"M", "1"}}};
  CHECK(config_field_of(j) == "sweep.pairs");

  j = small_sweep_json();
  j.erase("layout");
  CHECK(config_field_of(j) == "layout");

  j = small_sweep_json();
  j["complexity"]["method"] = "magic";
  CHECK(config_field_of(j) == "complexity.method");

  j = small_sweep_json();
  j["complexity"]["mc_trials"] = 10;
  CHECK(config_field_of(j) == "complexity.mc_trials");
}

TEST_CASE("golden sweep header") {
  CHECK(sweep_header() ==
        "trial,n,N_set,M_set,risk_hat_N,risk_hat_M,pop_risk_N,pop_risk_M,eta_N,eta_M,gamma,"
        "rad_mc,rad_massart_paper,rad_massart_std,t5_bound,t3_lhs,t3_rhs,t3_holds,t4_lhs,"
        "t4_rhs,t4_holds,t6_gap,t6_holds_as_printed,t6_holds_insight5,prop1_ok,flags");
  CHECK(sweep_columns().size() == 26);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("single-cell sweep") {
  const SweepSpec spec = sweep_from_json(small_sweep_json());
  CHECK(spec.holdout_size(16) == 1000);
  CHECK(spec.holdout_size(100) == 2000);
  const auto rows = run_sweep(spec, 1);
  REQUIRE(rows.size() == 1);
  const SweepRow& row = rows[0];
  CHECK_FALSE(row.failed());
  const std::string csv = sweep_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find('\r') == std::string::npos);

  CHECK(sweep_csv(run_sweep(spec, 2)) == csv);

  const auto lines = split(csv, '\n');
  const auto cells = split(lines[1], ',');
  CHECK(cells.size() == 26);
  CHECK(cells[2] == "1");
  CHECK(cells[3] == "1;2");

  REQUIRE(row.t3_holds);
  CHECK(*row.t3_holds == (row.t3_lhs <= row.t3_rhs));
  REQUIRE(row.t4_holds);
  CHECK(*row.t4_holds == (row.t4_lhs <= row.t4_rhs));
  CHECK(row.t3_lhs == row.pop_risk_m - row.pop_risk_n);
  CHECK(row.gamma == row.eta_m - row.eta_n);
  REQUIRE(row.prop1_ok);
  CHECK(*row.prop1_ok);
  CHECK(row.risk_hat_m <= row.risk_hat_n + 1e-6);


  const json meta = sweep_metadata(spec);
  CHECK(meta["population_risk"]["holdout_factor"] == 20);
  CHECK(meta["population_risk"]["holdout_min"] == 1000);
  CHECK(meta["columns"].size() == 26);
}

TEST_CASE("undefined closed-form bound is flagged") {
  json j = small_sweep_json();
  // kappa / (D^m B^2) = 64 / 100 < 1.
  j["metric"]["feature_cap"] = 10.0;
  const auto rows = run_sweep(sweep_from_json(j), 1);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].failed());
  CHECK_FALSE(rows[0].t5_bound);
  CHECK(std::find(rows[0].flags.begin(), rows[0].flags.end(), "theorem5-log-argument-nonpositive") !=
        rows[0].flags.end());
  CHECK(format_row(rows[0]).find(",nan,") != std::string::npos);
}

TEST_CASE("cells with a defined closed-form bound carry no flag") {
  json j = small_sweep_json();
  j["metric"] = {{"eigen_cap", 1.0}, {"dist_cap", 1e6}, {"feature_cap", 50.0}};
  const auto rows = run_sweep(sweep_from_json(j), 1);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].t5_bound);
  CHECK(*rows[0].t5_bound > 0.0);
  CHECK(std::find(rows[0].flags.begin(), rows[0].flags.end(), "theorem5-log-argument-nonpositive") ==
        rows[0].flags.end());
}

TEST_CASE("failed cells are recorded and flagged") {
  json j = small_sweep_json();
  // A feature cap below the data range voids the certified constants.
  j["metric"]["feature_cap"] = 1e-6;
  const auto rows = run_sweep(sweep_from_json(j), 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].failed());
  const std::string line = format_row(rows[0]);
  CHECK(line.find("error:") != std::string::npos);
  CHECK(split(line, ',').size() == 26);
}

TEST_CASE("granularity split keeps the flattened data") {
  json j = small_sweep_json();
  j["sweep"]["split_modality"] = 1;
  j["sweep"]["pairs"] = {{{"N", "1,3"}, {"M", "all"}}};
  const SweepSpec spec = sweep_from_json(j);
  CHECK(spec.experiment.generator.layout.dims() == std::vector<int>{1, 1, 2, 2});
  CHECK(spec.pairs[0].m.size() == 4);
  j["sweep"]["split_modality"] = 9;
  CHECK(config_field_of(j) == "sweep.split_modality");
}

TEST_CASE("rows are ordered by n, pair and trial") {
  json j = small_sweep_json();
  j["sweep"]["n_values"] = {12, 10};
  j["sweep"]["pairs"] = {{{"N", "none"}, {"M", "1"}}, {{"N", "1"}, {"M", "all"}}};
  j["sweep"]["trials"] = 2;
  const auto rows = run_sweep(sweep_from_json(j), 2);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].n == 12);
  CHECK(rows[0].n_set.empty());
  CHECK(rows[1].trial == 1);
  CHECK(rows[2].n_set == ModalitySet({1}));
  CHECK(rows[4].n == 10);
  CHECK(format_row(rows[0]).find(",none,1,") != std::string::npos);
}

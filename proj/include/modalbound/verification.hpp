#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modalbound/sweep.hpp"

namespace modalbound {

struct VerifyOptions {
  unsigned threads = 1;
  std::uint64_t seed = 0;
  // Test hook: negates the decoupling comparison so that the suite must fail.
  bool inject_decoupling_fault = false;
};

struct SuiteResult {
  std::string name;
  bool pass = false;
  json details;
  double seconds = 0.0;
};

// hierarchy, decoupling, monotonicity, theorem3, theorem4, theorem5,
// rademacher, decay, gradient, diagonalization, theorem6, determinism
const std::vector<std::string>& suite_names();

// `name` is one suite or "all". Unknown names raise ConfigError.
std::vector<SuiteResult> run_suites(const std::string& name, const VerifyOptions& opts);
SuiteResult run_suite(const std::string& name, const VerifyOptions& opts);

json verify_report(const std::vector<SuiteResult>& results);

// Sweep over the default experiment used by the bound suites.
SweepSpec verification_sweep(std::vector<Index> n_values, std::vector<ModalityPair> pairs,
                             int trials, std::uint64_t seed);

}  // namespace modalbound

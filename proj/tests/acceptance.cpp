// Acceptance criteria runner. `acceptance N` checks one criterion, no
// argument checks all twelve. One PASS/FAIL line per criterion.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "modalbound/bounds.hpp"
#include "modalbound/complexity.hpp"
#include "modalbound/sweep.hpp"
#include "modalbound/verification.hpp"

using namespace modalbound;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

VerifyOptions options() {
  VerifyOptions o;
  o.threads = std::max(1u, std::thread::hardware_concurrency());
  return o;
}

// Runs one library suite and applies the wall-clock limit of the criterion.
Outcome suite(const std::string& name, double limit_seconds) {
  const SuiteResult r = run_suite(name, options());
  std::string detail = r.details.dump() + " seconds=" + std::to_string(r.seconds);
  if (limit_seconds > 0.0 && r.seconds >= limit_seconds) {
    detail += " exceeds limit " + std::to_string(limit_seconds);
    return {false, detail};
  }
  return {r.pass, detail};
}

// Smallest k with P(Bin(n, p) <= k) >= q, from the exact CDF.
int binomial_quantile(int n, double p, double q) {
  double cdf = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                           k * std::log(p) + (n - k) * std::log1p(-p);
    cdf += std::exp(log_pmf);
    if (cdf >= q) return k;
  }
  return n;
}

double enumerate_two_constants(double c) {
  double total = 0.0;
  for (double s1 : {-1.0, 1.0})
    for (double s2 : {-1.0, 1.0}) total += std::max(0.0, c * (s1 + s2) / 2.0);
  return total / 4.0;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion(int id) {
  switch (id) {
    case 1:
      return suite("hierarchy", 1.0);
    case 2:
      return suite("decoupling", 120.0);
    case 3:
      return suite("monotonicity", 120.0);
    case 4: {
      const int quantile = binomial_quantile(200, 0.05, 0.999);
      Outcome o = suite("theorem3", 600.0);
      o.detail += " binomial_99.9%=" + std::to_string(quantile) + " pinned=24";
      o.pass = o.pass && quantile <= 24;
      return o;
    }
    case 5:
      return suite("theorem4", 300.0);
    case 6: {
      Outcome o = suite("theorem5", 0.0);
      const BoundValue v = theorem5_bound(1.0, std::exp(2.0), 1.0, 5, 10);
      // D sqrt(2 ln(kappa / (D^m B^2))) / floor(n/2) with ln(e^2) = 2.
      const double oracle = 1.0 * std::sqrt(2.0 * 2.0) / 5.0;
      o.pass = o.pass && v.value && std::abs(*v.value - oracle) <= 1e-12;
      return o;
    }
    case 7: {
      Outcome o = suite("rademacher", 0.0);
      MatrixXd two(2, 2);
      two << 0.0, 0.0, 1.0, 1.0;
      const ComplexityEstimate e = rademacher_mc_table(two, 10000, 2024);
      const double exact = enumerate_two_constants(1.0);
      o.pass = o.pass && exact == 0.25 && std::abs(e.value - exact) <= 3.0 * e.stderr_mc;
      o.detail += " enumeration=" + std::to_string(exact);
      return o;
    }
    case 8:
      return suite("decay", 300.0);
    case 9:
      return suite("gradient", 0.0);
    case 10:
      return suite("diagonalization", 0.0);
    case 11: {
      Outcome o = suite("theorem6", 0.0);
      LossSpec spec;
      spec.lipschitz_first = spec.lipschitz_second = 0.5;
      const BoundValue v = theorem6_gap(2, 1, 2.0, 32.0, 1.0, spec, 4);
      const double oracle = (4.0 * 1.0 * 2.0 / 2.0) * (std::sqrt(2.0 * std::log(32.0 / 2.0)) -
                                                       std::sqrt(2.0 * std::log(32.0 / 4.0)));
      o.pass = o.pass && v.value && std::abs(*v.value - oracle) <= 1e-3 && std::abs(oracle - 1.2619) <= 1e-3;
      return o;
    }
    case 12: {
      Outcome o = suite("determinism", 0.0);
      namespace fs = std::filesystem;
      const fs::path dir = fs::temp_directory_path() / ("modalbound_acc_" + std::to_string(::getpid()));
      fs::create_directories(dir);
      json cfg = default_experiment_json();
      cfg["sweep"] = {{"n_values", {16, 24}}, {"pairs", {{{"N", "1"}, {"M", "all"}}}}, {"trials", 2}};
      cfg["complexity"] = {{"grid_size", 16}, {"mc_trials", 100}};
      cfg["seed"] = 11;
      std::ofstream(dir / "sweep.json") << cfg.dump();
      std::string csv[2];
      for (int rep = 0; rep < 2; ++rep) {
        const fs::path out = dir / ("run" + std::to_string(rep) + ".csv");
        const std::string cmd = std::string(MODALBOUND_CLI) + " --quiet --threads " + std::to_string(rep + 1) +
                                " sweep --config " + (dir / "sweep.json").string() + " --out " + out.string();
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "cli sweep failed: " + cmd};
        csv[rep] = slurp(out);
      }
      const std::string golden =
          "trial,n,N_set,M_set,risk_hat_N,risk_hat_M,pop_risk_N,pop_risk_M,eta_N,eta_M,gamma,rad_mc,"
          "rad_massart_paper,rad_massart_std,t5_bound,t3_lhs,t3_rhs,t3_holds,t4_lhs,t4_rhs,t4_holds,"
          "t6_gap,t6_holds_as_printed,t6_holds_insight5,prop1_ok,flags\n";
      const bool cli_ok = !csv[0].empty() && csv[0] == csv[1] && csv[0].rfind(golden, 0) == 0;
      fs::remove_all(dir);
      o.pass = o.pass && cli_ok;
      o.detail += cli_ok ? " cli=identical" : " cli=mismatch";
      return o;
    }
    default:
      return {false, "unknown criterion"};
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  if (argc > 1) {
    ids.push_back(std::atoi(argv[1]));
  } else {
    for (int i = 1; i <= 12; ++i) ids.push_back(i);
  }
  int failures = 0;
  for (int id : ids) {
    Outcome o;
    try {
      o = criterion(id);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modalbound/complexity.hpp"

namespace modalbound {

enum class Theorem { t3, t4, t5, t6 };
enum class Relation { le, ge };  // how lhs is compared against rhs

// Evaluated sides of one bound with every additive term itemized in the
// order the bound adds them.
struct BoundReport {
  Theorem theorem = Theorem::t3;
  std::optional<double> lhs;
  std::optional<double> rhs;
  std::vector<std::pair<std::string, double>> terms;
  std::optional<bool> holds;
  Relation relation = Relation::le;
  std::vector<std::string> validity_flags;

  double term(const std::string& name) const;
  double terms_sum() const;
};

std::string to_string(Theorem t);

/// r(M) - r(N) <= gamma + 8(L1+L2) R + 4 sqrt(2) C / sqrt(n)
///                + C sqrt(2 ln(2/delta) / (n(n-1)))
BoundReport theorem3_report(double risk_m, double risk_n, double gamma, double complexity,
                            const LossSpec& spec, Index n, double delta);

/// eta(g_M) <= 4(L1+L2) R_M + sqrt(2 C^2 ln(2/delta) / (n(n-1)))
///             + 4(L1+L2) R + 8C / sqrt(floor(n/2)) + Lhat_M
BoundReport theorem4_report(double eta_m, double complexity_m, double complexity_full,
                            double excess_empirical_m, const LossSpec& spec, Index n,
                            double delta);

// Wraps theorem5_bound; lhs is an optional complexity estimate to compare.
BoundReport theorem5_report(std::optional<double> complexity, double eigen_cap, double dist_cap,
                            double feature_cap, Index dim, Index n);

/// (4(L1+L2) D / floor(n/2)) * (sqrt(2 ln(kappa / (D^N B^2)))
///                              - sqrt(2 ln(kappa / (D^M B^2))))
/// for feature dimensions M >= N.
BoundValue theorem6_gap(Index dim_m, Index dim_n, double eigen_cap, double dist_cap,
                        double feature_cap, const LossSpec& spec, Index n);

// Both readings of the risk-reduction statement:
//   as printed:  Lhat_M - Lhat_N >= gap
//   reduction:   Lhat_N - Lhat_M >= gap
struct Theorem6Readings {
  BoundValue gap;
  std::optional<bool> holds_as_printed;
  std::optional<bool> holds_reduction;
};
Theorem6Readings theorem6_readings(double excess_m, double excess_n, Index dim_m, Index dim_n,
                                   double eigen_cap, double dist_cap, double feature_cap,
                                   const LossSpec& spec, Index n);
BoundReport theorem6_report(double excess_m, double excess_n, Index dim_m, Index dim_n,
                            double eigen_cap, double dist_cap, double feature_cap,
                            const LossSpec& spec, Index n);

}  // namespace modalbound

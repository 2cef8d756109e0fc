#include "modalbound/bounds.hpp"

#include <cmath>

namespace modalbound {
namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta", "must lie in (0, 1)");
}

void finish(BoundReport& r) {
  r.rhs = r.terms_sum();
  if (r.lhs)
    r.holds = r.relation == Relation::le ? *r.lhs <= *r.rhs : *r.lhs >= *r.rhs;
}

}  // namespace

double BoundReport::term(const std::string& name) const {
  for (const auto& [key, value] : terms)
    if (key == name) return value;
  throw Error("bound report has no term '" + name + "'");
}

double BoundReport::terms_sum() const {
  double sum = 0.0;
  for (const auto& [key, value] : terms) sum += value;
  return sum;
}

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::t3: return "T3";
    case Theorem::t4: return "T4";
    case Theorem::t5: return "T5";
    case Theorem::t6: return "T6";
  }
  return "?";
}

BoundReport theorem3_report(double risk_m, double risk_n, double gamma, double complexity,
                            const LossSpec& spec, Index n, double delta) {
  check_delta(delta);
  if (n < 2) throw SizeError("theorem3_report needs n >= 2");
  const double nd = static_cast<double>(n);
  const double c = spec.clip;
  BoundReport r;
  r.theorem = Theorem::t3;
  r.lhs = risk_m - risk_n;
  r.terms = {
      {"gamma", gamma},
      {"complexity", 8.0 * spec.lipschitz_sum() * complexity},
      {"sample", 4.0 * std::sqrt(2.0) * c / std::sqrt(nd)},
      {"confidence", c * std::sqrt(2.0 * std::log(2.0 / delta) / (nd * (nd - 1.0)))},
  };
  finish(r);
  return r;
}

BoundReport theorem4_report(double eta_m, double complexity_m, double complexity_full,
                            double excess_empirical_m, const LossSpec& spec, Index n,
                            double delta) {
  check_delta(delta);
  if (n < 2) throw SizeError("theorem4_report needs n >= 2");
  const double nd = static_cast<double>(n);
  const double c = spec.clip;
  BoundReport r;
  r.theorem = Theorem::t4;
  r.lhs = eta_m;
  r.terms = {
      {"complexity_restricted", 4.0 * spec.lipschitz_sum() * complexity_m},
      {"confidence", std::sqrt(2.0 * c * c * std::log(2.0 / delta) / (nd * (nd - 1.0)))},
      {"complexity_full", 4.0 * spec.lipschitz_sum() * complexity_full},
      {"sample", 8.0 * c / std::sqrt(static_cast<double>(n / 2))},
      {"excess_empirical", excess_empirical_m},
  };
  finish(r);
  return r;
}

BoundReport theorem5_report(std::optional<double> complexity, double eigen_cap, double dist_cap,
                            double feature_cap, Index dim, Index n) {
  const BoundValue b = theorem5_bound(eigen_cap, dist_cap, feature_cap, dim, n);
  BoundReport r;
  r.theorem = Theorem::t5;
  r.lhs = complexity;
  r.validity_flags = b.flags;
  if (b.value) {
    r.terms = {{"closed_form", *b.value}};
    finish(r);
  }
  return r;
}

BoundValue theorem6_gap(Index dim_m, Index dim_n, double eigen_cap, double dist_cap,
                        double feature_cap, const LossSpec& spec, Index n) {
  if (dim_m < dim_n) throw PreconditionError("theorem6_gap needs dim(M) >= dim(N)");
  if (n < 2) throw SizeError("theorem6_gap needs n >= 2");
  if (!(eigen_cap > 0.0) || !(dist_cap > 0.0) || !(feature_cap > 0.0))
    throw PreconditionError("theorem6_gap needs D, kappa, B > 0");
  auto log_arg = [&](Index dim) {
    return std::log(dist_cap) - static_cast<double>(dim) * std::log(eigen_cap) -
           2.0 * std::log(feature_cap);
  };
  const double arg_n = log_arg(dim_n), arg_m = log_arg(dim_m);
  BoundValue out;
  if (arg_n < 0.0 || arg_m < 0.0) {
    out.flags.emplace_back("theorem6-log-argument-nonpositive");
    return out;
  }
  const double scale = 4.0 * spec.lipschitz_sum() * eigen_cap / static_cast<double>(n / 2);
  out.value = scale * (std::sqrt(2.0 * arg_n) - std::sqrt(2.0 * arg_m));
  return out;
}

Theorem6Readings theorem6_readings(double excess_m, double excess_n, Index dim_m, Index dim_n,
                                   double eigen_cap, double dist_cap, double feature_cap,
                                   const LossSpec& spec, Index n) {
  Theorem6Readings r;
  r.gap = theorem6_gap(dim_m, dim_n, eigen_cap, dist_cap, feature_cap, spec, n);
  if (r.gap.value) {
    r.holds_as_printed = excess_m - excess_n >= *r.gap.value;
    r.holds_reduction = excess_n - excess_m >= *r.gap.value;
  }
  return r;
}

BoundReport theorem6_report(double excess_m, double excess_n, Index dim_m, Index dim_n,
                            double eigen_cap, double dist_cap, double feature_cap,
                            const LossSpec& spec, Index n) {
  const BoundValue gap = theorem6_gap(dim_m, dim_n, eigen_cap, dist_cap, feature_cap, spec, n);
  BoundReport r;
  r.theorem = Theorem::t6;
  r.relation = Relation::ge;
  r.lhs = excess_m - excess_n;
  r.validity_flags = gap.flags;
  if (gap.value) {
    r.terms = {{"gap", *gap.value}};
    finish(r);
  }
  return r;
}

}  // namespace modalbound

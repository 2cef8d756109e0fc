#include "modalbound/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modalbound/parallel.hpp"
#include "modalbound/random.hpp"

namespace modalbound {
namespace {

void check_labels(const MatrixXd& features, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != features.rows())
    throw ShapeError("label count != feature rows");
}

double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

PairTable ustat_pairs(const MatrixXd& features, std::span<const int> labels) {
  check_labels(features, labels);
  const Index n = features.rows();
  if (n < 2) throw SizeError("pairwise risk needs n >= 2");
  const Index count = n * (n - 1) / 2;
  PairTable t{MatrixXd(count, features.cols()), VectorXd(count)};
  Index p = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++p) {
      t.sqdiff.row(p) = (features.row(i) - features.row(j)).array().square();
      t.tau(p) = pair_label(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
    }
  }
  return t;
}

void check_permutation(std::span<const Index> permutation, Index n) {
  if (static_cast<Index>(permutation.size()) != n)
    throw PermutationError("permutation length " + std::to_string(permutation.size()) +
                           " != n = " + std::to_string(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index v : permutation) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)])
      throw PermutationError("permutation is not a bijection on [0, n)");
    seen[static_cast<std::size_t>(v)] = 1;
  }
}

std::vector<Index> random_permutation(Index n, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index(0));
  Stream s(seed, {0x7065726dULL});
  // Fisher-Yates with an explicit bounded draw so results do not depend on the
  // standard library's shuffle implementation.
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(s.bits() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

PairTable block_pairs(const MatrixXd& features, std::span<const int> labels,
                      std::span<const Index> permutation) {
  check_labels(features, labels);
  const Index n = features.rows();
  if (n < 2) throw SizeError("pairwise risk needs n >= 2");
  std::vector<Index> identity;
  if (permutation.empty()) {
    identity.resize(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), Index(0));
    permutation = identity;
  }
  check_permutation(permutation, n);
  const Index half = n / 2;
  PairTable t{MatrixXd(half, features.cols()), VectorXd(half)};
  for (Index i = 0; i < half; ++i) {
    const Index a = permutation[static_cast<std::size_t>(i)];
    const Index b = permutation[static_cast<std::size_t>(half + i)];
    t.sqdiff.row(i) = (features.row(a) - features.row(b)).array().square();
    t.tau(i) = pair_label(labels[static_cast<std::size_t>(a)], labels[static_cast<std::size_t>(b)]);
  }
  return t;
}

VectorXd pair_losses(const PairTable& table, const LossSpec& spec,
                     const DiagonalMetricModel& model) {
  const VectorXd d = pair_distances(table, model.lambdas, model.caps.dist_cap);
  const VectorXd arg = (spec.margin + table.tau.array() * (d.array() - model.bias)).matrix();
  return arg.cwiseMax(0.0).cwiseMin(spec.clip);
}

double mean_loss(const PairTable& table, const LossSpec& spec, const DiagonalMetricModel& model) {
  return pair_losses(table, spec, model).mean();
}

RiskValue ustat_risk(const LossSpec& spec, const DiagonalMetricModel& model, const Dataset& data) {
  if (data.size() < 2) throw SizeError("ustat_risk needs n >= 2");
  const MatrixXd x = feature_matrix(data, &model.mask);
  const auto y = labels_of(data);
  const PairTable t = ustat_pairs(x, y);
  return {mean_loss(t, spec, model), data.size() * (data.size() - 1), RiskMode::ustat};
}

RiskValue block_risk(const LossSpec& spec, const DiagonalMetricModel& model, const Dataset& data,
                     std::span<const Index> permutation) {
  if (data.size() < 2) throw SizeError("block_risk needs n >= 2");
  const MatrixXd x = feature_matrix(data, &model.mask);
  const auto y = labels_of(data);
  const PairTable t = block_pairs(x, y, permutation);
  return {mean_loss(t, spec, model), t.pairs(), RiskMode::block};
}

DecouplingResult decoupling_gap(const LossSpec& spec, std::span<const DiagonalMetricModel> grid,
                                int draws, const GeneratorConfig& generator, Index n,
                                std::uint64_t seed, unsigned threads) {
  if (grid.empty()) throw ConfigError("grid", "hypothesis grid is empty");
  if (draws < 30) throw PreconditionError("decoupling_gap needs at least 30 dataset draws");

  std::vector<double> sup_u(static_cast<std::size_t>(draws)), sup_b(static_cast<std::size_t>(draws));
  parallel_for(static_cast<std::size_t>(draws), threads, [&](std::size_t r) {
    const Dataset data = generate_dataset(generator.layout, n, generator.ground_truth,
                                          substream_key(seed, {r}));
    const MatrixXd x = feature_matrix(data);
    const auto y = labels_of(data);
    const PairTable u = ustat_pairs(x, y);
    const PairTable b = block_pairs(x, y);
    double best_u = -1.0, best_b = -1.0;
    for (const auto& model : grid) {
      best_u = std::max(best_u, mean_loss(u, spec, model));
      best_b = std::max(best_b, mean_loss(b, spec, model));
    }
    sup_u[r] = best_u;
    sup_b[r] = best_b;
  });

  DecouplingResult out;
  out.draws = draws;
  out.mean_sup_ustat = sample_mean(sup_u);
  out.mean_sup_block = sample_mean(sup_b);
  out.stderr_pooled = std::sqrt((sample_variance(sup_u, out.mean_sup_ustat) +
                                 sample_variance(sup_b, out.mean_sup_block)) /
                                static_cast<double>(draws));
  return out;
}

}  // namespace modalbound

namespace modalbound {

BiasFit optimal_bias(const VectorXd& distances, const VectorXd& tau, const LossSpec& spec,
                     double dist_cap) {
  if (distances.size() != tau.size() || distances.size() == 0)
    throw ShapeError("optimal_bias needs matching non-empty distances and signs");
  const double c = spec.clip;
  const double margin = spec.margin;
  auto mean_at = [&](double b) {
    return (margin + tau.array() * (distances.array() - b)).max(0.0).min(c).mean();
  };

  // Slope of each pair's loss in b changes by +-1 at its two breakpoints.
  std::vector<std::pair<double, double>> events;
  events.reserve(static_cast<std::size_t>(2 * distances.size()));
  double slope = 0.0;
  auto add = [&](double at, double delta, bool active_at_zero) {
    if (at > 0.0 && at < dist_cap) events.emplace_back(at, delta);
    if (active_at_zero) slope += delta;
  };
  for (Index p = 0; p < distances.size(); ++p) {
    const double d = distances(p);
    if (tau(p) > 0) {
      const double enter = d + margin - c, leave = d + margin;  // slope -1 between
      add(enter, -1.0, enter <= 0.0);
      add(leave, +1.0, leave <= 0.0);
    } else {
      const double enter = d - margin, leave = d - margin + c;  // slope +1 between
      add(enter, +1.0, enter <= 0.0);
      add(leave, -1.0, leave <= 0.0);
    }
  }
  std::sort(events.begin(), events.end());

  const double scale = 1.0 / static_cast<double>(distances.size());
  double pos = 0.0, value = mean_at(0.0);
  BiasFit best{0.0, value};
  for (const auto& [at, delta] : events) {
    value += slope * scale * (at - pos);
    pos = at;
    if (value < best.value) best = {at, value};
    slope += delta;
  }
  value += slope * scale * (dist_cap - pos);
  if (value < best.value) best = {dist_cap, value};
  best.value = mean_at(best.bias);
  return best;
}

}  // namespace modalbound

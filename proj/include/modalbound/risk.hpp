#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modalbound/dataset.hpp"
#include "modalbound/loss.hpp"
#include "modalbound/metric.hpp"

namespace modalbound {

enum class RiskMode { ustat, block };

struct RiskValue {
  double value = 0.0;
  Index n_pairs = 0;  // n(n-1) ordered pairs for ustat, floor(n/2) for block
  RiskMode mode = RiskMode::ustat;
};

// Squared coordinate differences and pair signs for a fixed set of pairs.
// Every diagonal-metric loss on those pairs is a function of `sqdiff * lambda`.
struct PairTable {
  MatrixXd sqdiff;  // pairs x total_dim
  VectorXd tau;     // +1 similar, -1 dissimilar

  Index pairs() const { return tau.size(); }
};

// All unordered pairs i < j. The loss is symmetric, so their mean equals the
// mean over the n(n-1) ordered pairs.
PairTable ustat_pairs(const MatrixXd& features, std::span<const int> labels);

// Pairs (pi(i), pi(h + i)), i < h = floor(n/2). `permutation` is 0-based and
// defaults to the identity; with odd n the last permuted sample is unused.
PairTable block_pairs(const MatrixXd& features, std::span<const int> labels,
                      std::span<const Index> permutation = {});

void check_permutation(std::span<const Index> permutation, Index n);
std::vector<Index> random_permutation(Index n, std::uint64_t seed);

template <typename DerivedL>
VectorXd pair_distances(const PairTable& table, const Eigen::MatrixBase<DerivedL>& lambdas,
                        double dist_cap) {
  if (lambdas.size() != table.sqdiff.cols()) throw ShapeError("lambdas length != total_dim");
  return (table.sqdiff * lambdas).cwiseMin(dist_cap);
}

VectorXd pair_losses(const PairTable& table, const LossSpec& spec,
                     const DiagonalMetricModel& model);
double mean_loss(const PairTable& table, const LossSpec& spec, const DiagonalMetricModel& model);

RiskValue ustat_risk(const LossSpec& spec, const DiagonalMetricModel& model, const Dataset& data);
RiskValue block_risk(const LossSpec& spec, const DiagonalMetricModel& model, const Dataset& data,
                     std::span<const Index> permutation = {});

struct BiasFit {
  double bias = 0.0;
  double value = 0.0;  // mean loss at `bias`
};

// Exact minimizer over b in [0, dist_cap] of the mean clipped hinge loss for
// fixed distances. The objective is piecewise linear in b, so a sorted sweep
// over its breakpoints finds the global minimum.
BiasFit optimal_bias(const VectorXd& distances, const VectorXd& tau, const LossSpec& spec,
                     double dist_cap);

// Generating mechanism for fresh datasets.
struct GeneratorConfig {
  ModalityLayout layout;
  GroundTruth ground_truth;
};

struct DecouplingResult {
  double mean_sup_ustat = 0.0;
  double mean_sup_block = 0.0;
  double stderr_pooled = 0.0;
  int draws = 0;

  // mean_sup_ustat <= mean_sup_block + 2 * stderr
  bool holds() const { return mean_sup_ustat <= mean_sup_block + 2.0 * stderr_pooled; }
};

/// Monte-Carlo comparison of E sup_grid U-statistic risk against
/// E sup_grid block risk over `draws` fresh datasets of size `n`.
DecouplingResult decoupling_gap(const LossSpec& spec, std::span<const DiagonalMetricModel> grid,
                                int draws, const GeneratorConfig& generator, Index n,
                                std::uint64_t seed, unsigned threads = 1);

}  // namespace modalbound

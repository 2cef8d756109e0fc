#include "modalbound/complexity.hpp"

#include <cmath>

#include "modalbound/parallel.hpp"
#include "modalbound/random.hpp"

namespace modalbound {
namespace {

ComplexityEstimate summarize(const std::vector<double>& sups, Index blocks, SupMethod method) {
  ComplexityEstimate est;
  est.n_blocks = blocks;
  est.mc_trials = static_cast<int>(sups.size());
  est.sup_method = method;
  const Eigen::Map<const VectorXd> v(sups.data(), static_cast<Index>(sups.size()));
  est.value = v.mean();
  if (sups.size() > 1) {
    const double var = (v.array() - est.value).square().sum() / static_cast<double>(sups.size() - 1);
    est.stderr_mc = std::sqrt(var / static_cast<double>(sups.size()));
  }
  return est;
}

VectorXd draw_signs(Index blocks, std::uint64_t seed, std::uint64_t trial) {
  Stream s(seed, {0x7369676eULL, trial});
  VectorXd sigma(blocks);
  for (Index i = 0; i < blocks; ++i) sigma(i) = s.sign();
  return sigma;
}

PairTable data_blocks(const Dataset& data) {
  return block_pairs(feature_matrix(data), labels_of(data));
}

}  // namespace

MatrixXd block_loss_table(const Dataset& data, const LossSpec& spec,
                          const std::vector<DiagonalMetricModel>& models) {
  if (models.empty()) throw ConfigError("grid", "hypothesis grid is empty");
  const PairTable t = data_blocks(data);
  MatrixXd table(static_cast<Index>(models.size()), t.pairs());
  for (std::size_t g = 0; g < models.size(); ++g)
    table.row(static_cast<Index>(g)) = pair_losses(t, spec, models[g]).transpose();
  return table;
}

ComplexityEstimate rademacher_mc_table(const MatrixXd& loss_table, int mc_trials,
                                       std::uint64_t seed) {
  if (loss_table.rows() == 0) throw ConfigError("grid", "hypothesis grid is empty");
  if (mc_trials < 100) throw PreconditionError("rademacher_mc needs mc_trials >= 100");
  const Index blocks = loss_table.cols();
  std::vector<double> sups(static_cast<std::size_t>(mc_trials));
  constexpr int kChunk = 512;
  for (int start = 0; start < mc_trials; start += kChunk) {
    const int count = std::min(kChunk, mc_trials - start);
    MatrixXd signs(blocks, count);
    for (int c = 0; c < count; ++c)
      signs.col(c) = draw_signs(blocks, seed, static_cast<std::uint64_t>(start + c));
    const MatrixXd corr = loss_table * signs;
    for (int c = 0; c < count; ++c)
      sups[static_cast<std::size_t>(start + c)] = corr.col(c).maxCoeff() / static_cast<double>(blocks);
  }
  return summarize(sups, blocks, SupMethod::grid);
}

ComplexityEstimate rademacher_mc(const Dataset& data, const LossSpec& spec,
                                 const HypothesisSource& source, int mc_trials,
                                 std::uint64_t seed, unsigned threads) {
  if (const auto* grid = std::get_if<GridSource>(&source))
    return rademacher_mc_table(block_loss_table(data, spec, grid->models), mc_trials, seed);

  const auto& opt = std::get<OptSource>(source);
  if (mc_trials < 100) throw PreconditionError("rademacher_mc needs mc_trials >= 100");
  if (opt.restarts < 1) throw ConfigError("complexity.restarts", "must be >= 1");
  opt.train.validate();
  const PairTable t = data_blocks(data);
  const Index blocks = t.pairs();
  const VectorXd on = coordinate_mask(data.layout, opt.mask);

  std::vector<double> sups(static_cast<std::size_t>(mc_trials));
  parallel_for(static_cast<std::size_t>(mc_trials), threads, [&](std::size_t trial) {
    const VectorXd sigma = draw_signs(blocks, seed, trial);
    // Maximizing sum sigma_i l_i is minimizing with weights -sigma / h.
    const VectorXd weights = -sigma / static_cast<double>(blocks);
    double best = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < opt.restarts; ++r) {
      Stream s(seed, {0x72657374ULL, trial, static_cast<std::uint64_t>(r)});
      DiagonalMetricModel init = initial_model(data.layout, opt.mask, opt.caps);
      for (Index i = 0; i < init.lambdas.size(); ++i)
        init.lambdas(i) = on(i) * s.uniform(0.0, opt.caps.eigen_cap);
      init.bias = s.uniform(0.0, opt.caps.dist_cap);
      const TrainResult run = minimize_pair_objective(t, weights, spec, data.layout, init, opt.train);
      best = std::max(best, -run.final_empirical_risk);
    }
    sups[trial] = best;
  });
  return summarize(sups, blocks, SupMethod::sign_weighted_opt);
}

double massart_bound(const MatrixXd& loss_table, MassartVariant variant) {
  if (loss_table.rows() == 0 || loss_table.cols() == 0)
    throw ConfigError("loss_table", "finite class must be non-empty");
  const double norm = variant == MassartVariant::sup_norm
                          ? loss_table.cwiseAbs().maxCoeff()
                          : loss_table.rowwise().norm().maxCoeff();
  return massart_value(norm, static_cast<double>(loss_table.rows()), loss_table.cols());
}

double massart_value(double max_norm, double class_size, Index n) {
  if (!(class_size >= 1.0) || n < 1) throw ConfigError("loss_table", "finite class must be non-empty");
  return max_norm * std::sqrt(2.0 * std::log(class_size)) / static_cast<double>(n);
}

BoundValue theorem5_bound(double eigen_cap, double dist_cap, double feature_cap, Index dim,
                          Index n) {
  if (!(eigen_cap > 0.0) || !(dist_cap > 0.0) || !(feature_cap > 0.0))
    throw PreconditionError("theorem5_bound needs D, kappa, B > 0");
  if (n < 2) throw SizeError("theorem5_bound needs n >= 2");
  const double blocks = static_cast<double>(n / 2);
  // ln(kappa / (D^m B^2)), taken directly when D^m is representable.
  const double power = std::pow(eigen_cap, static_cast<double>(dim));
  const double log_arg = (std::isfinite(power) && power > 0.0)
                             ? std::log(dist_cap / (power * feature_cap * feature_cap))
                             : std::log(dist_cap) - static_cast<double>(dim) * std::log(eigen_cap) -
                                   2.0 * std::log(feature_cap);
  BoundValue out;
  if (std::abs(log_arg) <= 1e-12) {
    out.value = 0.0;
    out.flags.emplace_back(kBoundaryFlag);
  } else if (log_arg < 0.0) {
    out.flags.emplace_back(kTheorem5LogFlag);
  } else {
    out.value = eigen_cap * std::sqrt(2.0 * log_arg) / blocks;
  }
  return out;
}

EtaEstimate estimate_eta_on(const DiagonalMetricModel& g, const Dataset& holdout,
                            const LossSpec& spec) {
  if (!holdout.ground_truth || !holdout.latents)
    throw ConfigError("ground_truth", "eta needs a holdout carrying ground truth");
  const auto y = labels_of(holdout);
  const PairTable t = block_pairs(feature_matrix(holdout, &g.mask), y);
  const PairTable tz = block_pairs(*holdout.latents, y);

  const VectorXd d = pair_distances(t, g.lambdas, g.caps.dist_cap);
  const BiasFit fit = optimal_bias(d, t.tau, spec, g.caps.dist_cap);
  DiagonalMetricModel head = g;
  head.bias = fit.bias;
  const VectorXd model_losses = pair_losses(t, spec, head);
  const VectorXd ref_losses = pair_losses(tz, spec, ground_truth_model(*holdout.ground_truth, g.caps));
  const VectorXd diff = model_losses - ref_losses;

  EtaEstimate est;
  est.best_bias = fit.bias;
  est.model_risk = model_losses.mean();
  est.reference_risk = ref_losses.mean();
  est.value = diff.mean();
  if (diff.size() > 1) {
    const double var = (diff.array() - est.value).square().sum() / static_cast<double>(diff.size() - 1);
    est.stderr_mc = std::sqrt(var / static_cast<double>(diff.size()));
  }
  return est;
}

EtaEstimate estimate_eta(const DiagonalMetricModel& g, const GeneratorConfig& generator,
                         Index holdout_n, const LossSpec& spec, std::uint64_t seed) {
  if (holdout_n < 1000) throw PreconditionError("estimate_eta needs holdout_n >= 1000");
  const Dataset holdout = generate_dataset(generator.layout, holdout_n, generator.ground_truth, seed);
  return estimate_eta_on(g, holdout, spec);
}

}  // namespace modalbound

#include <doctest.h>

#include <cmath>

#include "modalbound/loss.hpp"
#include "modalbound/random.hpp"
#include "modalbound/risk.hpp"

using namespace modalbound;

namespace {

Dataset manual_dataset(const MatrixXd& x, const std::vector<int>& labels) {
  Dataset d;
  d.layout = ModalityLayout({static_cast<int>(x.cols())});
  for (Index i = 0; i < x.rows(); ++i)
    d.samples.push_back(make_sample(d.layout, x.row(i).transpose(), labels[static_cast<std::size_t>(i)]));
  return d;
}

DiagonalMetricModel model_of(const VectorXd& lambdas, double bias, double eigen_cap, double dist_cap) {
  DiagonalMetricModel m;
  m.lambdas = lambdas;
  m.bias = bias;
  m.mask = ModalitySet::all(1);
  m.caps.eigen_cap = eigen_cap;
  m.caps.dist_cap = dist_cap;
  return m;
}

LossSpec plain_loss(double margin, double clip) {
  LossSpec s;
  s.margin = margin;
  s.clip = clip;
  return s;
}

// Naive ordered-pair average, written without the library's pair tables.
double brute_ustat(const LossSpec& spec, const DiagonalMetricModel& m, const MatrixXd& x,
                   const std::vector<int>& y) {
  double sum = 0.0;
  int count = 0;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.rows(); ++j) {
      if (i == j) continue;
      double d = 0.0;
      for (Index c = 0; c < x.cols(); ++c) d += m.lambdas(c) * (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d = std::min(d, m.caps.dist_cap);
      const double tau = y[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)] ? 1.0 : -1.0;
      sum += std::min(spec.clip, std::max(0.0, spec.margin + tau * (d - m.bias)));
      ++count;
    }
  return sum / count;
}

}  // namespace

TEST_CASE("hinge examples") {
  const LossSpec spec = plain_loss(1.0, 3.0);
  CHECK(hinge_loss(spec, 2.5, 2.5, 1.0) == 1.0);
  CHECK(hinge_loss(spec, 2.5, 2.5, -1.0) == 1.0);
  CHECK(hinge_loss(spec, 1.5, 2.5, 1.0) == 0.0);
  CHECK(hinge_loss(spec, 2.5 + 3.0 + 5.0, 2.5, 1.0) == 3.0);
}

TEST_CASE("pair loss is symmetric and bounded") {
  const ModalityLayout layout({2, 1});
  MetricCaps caps;
  caps.eigen_cap = 2.0;
  caps.dist_cap = 5.0;
  const LossSpec spec = LossSpec::certified(caps, 3, 1.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    Stream s(3, {static_cast<std::uint64_t>(t)});
    DiagonalMetricModel m = initial_model(layout, t % 2 ? ModalitySet({1}) : ModalitySet::all(2), caps);
    m.bias = s.uniform(0.0, 5.0);
    const auto a = make_sample(layout, s.normal_vector(3), static_cast<int>(s.bits() % 2));
    const auto b = make_sample(layout, s.normal_vector(3), static_cast<int>(s.bits() % 2));
    const double l = pair_loss(spec, m, a, b);
    CHECK(l == pair_loss(spec, m, b, a));
    CHECK(l >= 0.0);
    CHECK(l <= spec.clip);
  }
}

TEST_CASE("certified Lipschitz constants") {
  MetricCaps caps;
  caps.eigen_cap = 1.0;
  caps.feature_cap = 1.0;
  caps.dist_cap = 100.0;
  const ModalityLayout layout({4});
  const LossSpec spec = LossSpec::certified(caps, 4, 1.0, 101.0);
  CHECK(spec.lipschitz_first == 4.0);
  const LipschitzEstimate est = lipschitz_certify(spec, layout, ModalitySet::all(1), caps, 4000, 1);
  CHECK(std::isfinite(est.first));
  CHECK(est.first <= 4.0);
  CHECK(est.second <= 4.0);
  CHECK(est.first > 1.0);

  // Dense grid oracle: the x-gradient 2 lambda*(x - y) peaks on the corners
  // lambda in {0, D}^4, x - y in {-B, B}^4.
  double grid_max = 0.0;
  for (int lm = 0; lm < 16; ++lm)
    for (int dm = 0; dm < 16; ++dm) {
      double sq = 0.0;
      for (int i = 0; i < 4; ++i) {
        const double lambda = (lm >> i) & 1 ? 1.0 : 0.0;
        const double diff = (dm >> i) & 1 ? 1.0 : -1.0;
        sq += 4.0 * lambda * lambda * diff * diff;
      }
      grid_max = std::max(grid_max, std::sqrt(sq));
    }
  CHECK(grid_max == doctest::Approx(4.0).epsilon(1e-15));

  MetricCaps zero = caps;
  zero.eigen_cap = 0.0;
  const LipschitzEstimate flat =
      lipschitz_certify(LossSpec::certified(zero, 4, 1.0, 2.0), layout, ModalitySet::all(1), zero, 1000, 2);
  CHECK(flat.first == 0.0);
  CHECK(flat.second == 0.0);

  LossSpec wrong = spec;
  wrong.lipschitz_first = wrong.lipschitz_second = 0.01;
  CHECK_THROWS_AS(lipschitz_certify(wrong, layout, ModalitySet::all(1), caps, 1000, 1), CertificationError);
  CHECK_THROWS_AS(lipschitz_certify(spec, layout, ModalitySet::all(1), caps, 999, 1), PreconditionError);
}

TEST_CASE("ustat risk of constant losses") {
  MatrixXd x = MatrixXd::Zero(6, 2);
  const Dataset d = manual_dataset(x, {0, 0, 0, 0, 0, 0});
  const LossSpec spec = plain_loss(1.0, 5.0);
  // d = 0 and tau = +1 everywhere: loss = margin - b.
  const RiskValue r = ustat_risk(spec, model_of(VectorXd::Ones(2), 0.25, 1.0, 10.0), d);
  CHECK(r.value == 0.75);
  CHECK(r.n_pairs == 30);
  CHECK(r.mode == RiskMode::ustat);
}

TEST_CASE("ustat risk on three samples") {
  MatrixXd x(3, 2);
  x << 0, 0, std::sqrt(0.2), 0, 0, std::sqrt(0.4);
  const Dataset d = manual_dataset(x, {1, 1, 1});
  // Similar pairs with b = margin: loss equals the distance 0.2, 0.4, 0.6.
  const RiskValue r = ustat_risk(plain_loss(1.0, 5.0), model_of(VectorXd::Ones(2), 1.0, 1.0, 10.0), d);
  CHECK(r.value == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(ustat_risk(plain_loss(1.0, 5.0), model_of(VectorXd::Ones(2), 1.0, 1.0, 10.0),
                             manual_dataset(x.topRows(1), {1})),
                  SizeError);
}

TEST_CASE("ustat risk matches a naive double loop") {
  Stream s(21, {});
  MatrixXd x(16, 3);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = s.normal();
  std::vector<int> y;
  for (int i = 0; i < 16; ++i) y.push_back(static_cast<int>(s.bits() % 3));
  const Dataset d = manual_dataset(x, y);
  VectorXd l(3);
  l << 0.3, 1.2, 0.8;
  const DiagonalMetricModel m = model_of(l, 1.7, 2.0, 4.0);
  const LossSpec spec = plain_loss(1.0, 2.5);
  CHECK(ustat_risk(spec, m, d).value == doctest::Approx(brute_ustat(spec, m, x, y)).epsilon(1e-13));

  // Relabeling the samples leaves the U-statistic unchanged.
  const auto perm = random_permutation(16, 4);
  MatrixXd xp(16, 3);
  std::vector<int> yp(16);
  for (Index i = 0; i < 16; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  CHECK(ustat_risk(spec, m, manual_dataset(xp, yp)).value ==
        doctest::Approx(ustat_risk(spec, m, d).value).epsilon(1e-13));
}

TEST_CASE("block risk pairs i with floor(n/2) + i") {
  MatrixXd x(5, 1);
  x << 0, 1, 3, 6, 10;
  const std::vector<int> y = {0, 0, 0, 0, 0};
  const LossSpec spec = plain_loss(0.0, 1000.0);
  // Similar pairs, margin 0, b = 0: loss equals the distance.
  const DiagonalMetricModel m = model_of(VectorXd::Ones(1), 0.0, 1.0, 1000.0);
  const RiskValue four = block_risk(spec, m, manual_dataset(x.topRows(4), {0, 0, 0, 0}));
  CHECK(four.value == (9.0 + 25.0) / 2.0);
  CHECK(four.n_pairs == 2);
  const RiskValue five = block_risk(spec, m, manual_dataset(x, y));
  CHECK(five.n_pairs == 2);
  CHECK(five.value == (9.0 + 25.0) / 2.0);
  const std::vector<Index> perm = {4, 3, 2, 1, 0};
  // Pairs (pi(0), pi(2)) = (4, 2) and (pi(1), pi(3)) = (3, 1).
  CHECK(block_risk(spec, m, manual_dataset(x, y), perm).value == (49.0 + 25.0) / 2.0);
  const std::vector<Index> bad = {0, 0, 1, 2, 3};
  CHECK_THROWS_AS(block_risk(spec, m, manual_dataset(x, y), bad), PermutationError);
  const std::vector<Index> short_perm = {0, 1};
  CHECK_THROWS_AS(block_risk(spec, m, manual_dataset(x, y), short_perm), PermutationError);
}

TEST_CASE("constant loss block risk is permutation free") {
  MatrixXd x = MatrixXd::Zero(8, 1);
  const Dataset d = manual_dataset(x, {0, 1, 0, 1, 0, 1, 0, 1});
  const LossSpec spec = plain_loss(1.0, 5.0);
  // Zero metric and b = 0: every pair loses exactly the margin.
  const DiagonalMetricModel m = model_of(VectorXd::Zero(1), 0.0, 1.0, 10.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto perm = random_permutation(8, seed);
    CHECK(block_risk(spec, m, d, perm).value == 1.0);
  }
}

TEST_CASE("block and ustat risk share their expectation") {
  const ModalityLayout layout({2});
  const GroundTruth gt = make_ground_truth(layout, GeneratorParams{});
  MetricCaps caps;
  caps.dist_cap = 4.0;
  const LossSpec spec = plain_loss(1.0, 5.0);
  const DiagonalMetricModel m = initial_model(layout, ModalitySet::all(1), caps);
  std::vector<double> diff;
  for (std::uint64_t r = 0; r < 400; ++r) {
    const Dataset d = generate_dataset(layout, 10, gt, r);
    diff.push_back(block_risk(spec, m, d).value - ustat_risk(spec, m, d).value);
  }
  double mean = 0.0, var = 0.0;
  for (double v : diff) mean += v;
  mean /= static_cast<double>(diff.size());
  for (double v : diff) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / static_cast<double>(diff.size() - 1) / static_cast<double>(diff.size()));
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("optimal bias matches a dense search") {
  Stream s(8, {});
  for (int t = 0; t < 20; ++t) {
    VectorXd d(30), tau(30);
    for (Index i = 0; i < 30; ++i) {
      d(i) = s.uniform(0.0, 6.0);
      tau(i) = s.sign();
    }
    const LossSpec spec = plain_loss(1.0, t % 2 ? 2.0 : 20.0);
    const BiasFit fit = optimal_bias(d, tau, spec, 8.0);
    double dense = 1e300;
    for (int k = 0; k <= 80000; ++k) {
      const double b = 8.0 * k / 80000.0;
      dense = std::min(dense, (spec.margin + tau.array() * (d.array() - b)).max(0.0).min(spec.clip).mean());
    }
    CHECK(fit.value <= dense + 1e-12);
    CHECK(fit.bias >= 0.0);
    CHECK(fit.bias <= 8.0);
  }
}

TEST_CASE("decoupling with degenerate grids") {
  const ModalityLayout layout({2});
  const GeneratorConfig gen{layout, make_ground_truth(layout, GeneratorParams{})};
  MetricCaps caps;
  caps.dist_cap = 4.0;
  const LossSpec spec = plain_loss(1.0, 5.0);
  DiagonalMetricModel zero = initial_model(layout, ModalitySet::all(1), caps);
  zero.lambdas.setZero();
  zero.bias = 0.0;
  const std::vector<DiagonalMetricModel> grid = {zero};
  const DecouplingResult r = decoupling_gap(spec, grid, 30, gen, 12, 1);
  CHECK(r.mean_sup_ustat == 1.0);
  CHECK(r.mean_sup_block == 1.0);
  CHECK(r.holds());
  CHECK_THROWS_AS(decoupling_gap(spec, grid, 29, gen, 12, 1), PreconditionError);
  CHECK_THROWS_AS(decoupling_gap(spec, std::vector<DiagonalMetricModel>{}, 30, gen, 12, 1), ConfigError);
}

TEST_CASE("subgradient matches central differences away from kinks") {
  const ModalityLayout layout({3});
  MetricCaps caps;
  caps.eigen_cap = 2.0;
  caps.dist_cap = 6.0;
  const LossSpec spec = plain_loss(1.0, 3.0);
  int checked = 0;
  for (int t = 0; checked < 200; ++t) {
    Stream s(17, {static_cast<std::uint64_t>(t)});
    DiagonalMetricModel m = initial_model(layout, ModalitySet::all(1), caps);
    for (Index i = 0; i < 3; ++i) m.lambdas(i) = s.uniform(0.0, 2.0);
    m.bias = s.uniform(0.0, 6.0);
    const VectorXd a = s.normal_vector(3), b = s.normal_vector(3);
    const double tau = s.sign();
    const double raw = m.lambdas.dot((a - b).array().square().matrix());
    const double arg = spec.margin + tau * (std::min(raw, 6.0) - m.bias);
    if (std::abs(arg) < 1e-3 || std::abs(arg - spec.clip) < 1e-3 || std::abs(raw - 6.0) < 1e-3) continue;
    const LossGradient g = pair_loss_subgradient(spec, m, a, b, tau);
    const double h = 1e-7;
    for (Index i = 0; i < 4; ++i) {
      DiagonalMetricModel up = m, down = m;
      if (i < 3) {
        up.lambdas(i) += h;
        down.lambdas(i) -= h;
      } else {
        up.bias += h;
        down.bias -= h;
      }
      const double fd = (hinge_loss(spec, mahalanobis_distance(up, a, b), up.bias, tau) -
                         hinge_loss(spec, mahalanobis_distance(down, a, b), down.bias, tau)) / (2 * h);
      const double analytic = i < 3 ? g.lambdas(i) : g.bias;
      CHECK(std::abs(fd - analytic) <= 1e-4 * std::max(1.0, std::abs(analytic)));
    }
    ++checked;
  }
}

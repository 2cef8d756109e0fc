#include <doctest.h>

#include <cmath>

#include "modalbound/random.hpp"
#include "modalbound/trainer.hpp"

using namespace modalbound;

namespace {

Dataset two_point_dataset() {
  Dataset d;
  d.layout = ModalityLayout({1});
  for (int i = 0; i < 6; ++i) {
    VectorXd x(1);
    x << (i % 2 ? 10.0 : 0.0);
    d.samples.push_back(make_sample(d.layout, x, i % 2));
  }
  return d;
}

MetricCaps caps_of(double eigen_cap, double dist_cap, double feature_cap) {
  MetricCaps c;
  c.eigen_cap = eigen_cap;
  c.dist_cap = dist_cap;
  c.feature_cap = feature_cap;
  return c;
}

struct Fixture {
  ModalityLayout layout{{2, 2, 2}};
  GroundTruth gt;
  Dataset data;
  MetricCaps caps;
  LossSpec spec;

  explicit Fixture(std::uint64_t seed, Index n = 40) {
    GeneratorParams p;
    p.mixing_seed = 3;
    gt = make_ground_truth(layout, p);
    data = generate_dataset(layout, n, gt, seed);
    caps = caps_of(1.0, 64.0, feature_diff_cap_check(data));
    spec = LossSpec::certified(caps, layout.total_dim(), 1.0, 65.0);
  }
};

}  // namespace

TEST_CASE("a single iteration returns the initialization") {
  Fixture f(1);
  TrainConfig cfg;
  cfg.max_iters = 1;
  const TrainResult r = train(f.data, ModalitySet::all(3), f.spec, f.caps, cfg);
  const DiagonalMetricModel init = initial_model(f.layout, ModalitySet::all(3), f.caps);
  CHECK(r.model.lambdas == init.lambdas);
  CHECK(r.model.bias == init.bias);
  CHECK(r.iters_used == 1);
  CHECK(r.log.size() == 1);
}

TEST_CASE("separable two-point data reaches zero risk") {
  const Dataset d = two_point_dataset();
  const MetricCaps caps = caps_of(1.0, 128.0, 10.0);
  const LossSpec spec = LossSpec::certified(caps, 1, 1.0, 129.0);

  // Grid-search oracle: some feasible (lambda, b) has zero empirical risk.
  double grid_best = 1e300;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 128; ++j) {
      DiagonalMetricModel m = initial_model(d.layout, ModalitySet::all(1), caps);
      m.lambdas(0) = i / 100.0;
      m.bias = j;
      grid_best = std::min(grid_best, ustat_risk(spec, m, d).value);
    }
  CHECK(grid_best == 0.0);

  TrainConfig cfg;
  cfg.max_iters = 2000;
  const TrainResult r = train(d, ModalitySet::all(1), spec, caps, cfg);
  CHECK(r.final_empirical_risk == 0.0);
  CHECK_NOTHROW(r.model.check_feasible(d.layout));
}

TEST_CASE("more iterations never hurt the best iterate") {
  Fixture f(2);
  TrainConfig cfg;
  double previous = 1e300;
  for (int iters : {10, 20, 40, 80, 160}) {
    cfg.max_iters = iters;
    cfg.tol = 0.0;
    const TrainResult r = train(f.data, ModalitySet({1, 2}), f.spec, f.caps, cfg);
    CHECK(r.final_empirical_risk <= previous);
    CHECK_NOTHROW(r.model.check_feasible(f.layout));
    CHECK(r.final_empirical_risk >= 0.0);
    CHECK(r.final_empirical_risk <= f.spec.clip);
    previous = r.final_empirical_risk;
  }
}

TEST_CASE("training is deterministic") {
  Fixture f(3);
  TrainConfig cfg;
  cfg.risk_mode = RiskMode::block;
  cfg.seed = 12;
  const TrainResult a = train(f.data, ModalitySet::all(3), f.spec, f.caps, cfg);
  const TrainResult b = train(f.data, ModalitySet::all(3), f.spec, f.caps, cfg);
  CHECK(a.model.lambdas == b.model.lambdas);
  CHECK(a.model.bias == b.model.bias);
  CHECK(a.final_empirical_risk == b.final_empirical_risk);
}

TEST_CASE("objective is convex when the clips cannot bind") {
  // kappa >= D m B^2 and C >= margin + kappa keep the clips inactive on
  // the feasible box, leaving a convex hinge of an affine map.
  Fixture f(4, 24);
  const double b = f.caps.feature_cap;
  const MetricCaps caps = caps_of(1.0, 6.0 * b * b, b);
  const LossSpec spec = LossSpec::certified(caps, 6, 1.0, 1.0 + caps.dist_cap);
  const PairTable t = training_pairs(f.data, TrainConfig{});
  const ModalitySet all = ModalitySet::all(3);
  for (int trial = 0; trial < 100; ++trial) {
    Stream s(5, {static_cast<std::uint64_t>(trial)});
    DiagonalMetricModel p = initial_model(f.layout, all, caps), q = p;
    for (Index i = 0; i < 6; ++i) {
      p.lambdas(i) = s.uniform(0.0, 1.0);
      q.lambdas(i) = s.uniform(0.0, 1.0);
    }
    p.bias = s.uniform(0.0, caps.dist_cap);
    q.bias = s.uniform(0.0, caps.dist_cap);
    for (double a : {0.25, 0.5, 0.75}) {
      DiagonalMetricModel mix = p;
      mix.lambdas = a * p.lambdas + (1 - a) * q.lambdas;
      mix.bias = a * p.bias + (1 - a) * q.bias;
      CHECK(mean_loss(t, spec, mix) <= a * mean_loss(t, spec, p) + (1 - a) * mean_loss(t, spec, q) + 1e-10);
    }
  }
}

TEST_CASE("monotonicity across nested masks") {
  Fixture f(6);
  TrainConfig cfg;
  cfg.max_iters = 300;

  const MonotonicityResult same = monotonicity_check(f.data, ModalitySet({1}), ModalitySet({1}), f.spec, f.caps, cfg);
  CHECK(same.ok);
  CHECK(same.risk_m == same.risk_n);

  const MonotonicityResult warm =
      monotonicity_check(f.data, ModalitySet({1}), ModalitySet({1, 3}), f.spec, f.caps, cfg);
  CHECK(warm.ok);
  CHECK(warm.warm_start_risk == warm.risk_n);
  CHECK(warm.risk_m <= warm.risk_n);

  CHECK_THROWS_AS(monotonicity_check(f.data, ModalitySet({2}), ModalitySet({1}), f.spec, f.caps, cfg),
                  PreconditionError);
}

TEST_CASE("empty mask leaves the constant rule") {
  Fixture f(7, 60);
  TrainConfig cfg;
  cfg.max_iters = 2000;
  const MonotonicityResult r = monotonicity_check(f.data, ModalitySet::none(), ModalitySet::all(3), f.spec, f.caps, cfg);
  // Distances are all zero: risk(b) = p_s max(0, 1 - b) + p_d (1 + b),
  // minimized at b = 0 or b = 1, giving min(1, 2 p_d).
  int dissimilar = 0, pairs = 0;
  for (std::size_t i = 0; i < f.data.samples.size(); ++i)
    for (std::size_t j = i + 1; j < f.data.samples.size(); ++j) {
      ++pairs;
      dissimilar += f.data.samples[i].label != f.data.samples[j].label ? 1 : 0;
    }
  const double closed = std::min(1.0, 2.0 * dissimilar / pairs);
  CHECK(r.risk_n == doctest::Approx(closed).epsilon(1e-3));
  CHECK(r.risk_m <= r.risk_n + 1e-6);
}

TEST_CASE("excess risk of the ground-truth composite is zero") {
  const ModalityLayout layout({2});
  GeneratorParams p;
  p.noise_sigma = 0.0;
  p.mixing = Mixing::identity;
  p.bayes_threshold = 1.5;
  const GroundTruth gt = make_ground_truth(layout, p);
  const Dataset d = generate_dataset(layout, 30, gt, 2);
  const MetricCaps caps = caps_of(1.0, 16.0, feature_diff_cap_check(d));
  const LossSpec spec = LossSpec::certified(caps, 2, 1.0, 17.0);
  const DiagonalMetricModel star = ground_truth_model(gt, caps);
  CHECK(excess_empirical_risk(star, d, spec, TrainConfig{}) == 0.0);

  const TrainResult r = train(d, ModalitySet::all(1), spec, caps, TrainConfig{});
  REQUIRE(r.excess_empirical_risk);
  CHECK(*r.excess_empirical_risk == doctest::Approx(r.final_empirical_risk - ground_truth_risk(d, spec, caps, TrainConfig{})));
}

TEST_CASE("separable data gives nonpositive excess risk") {
  Dataset d = two_point_dataset();
  GroundTruth gt;
  gt.latent_dim = 1;
  gt.noise_sigma = 0.0;
  gt.bayes_threshold = 0.0;
  gt.latent_metric = VectorXd::Ones(1);
  gt.mixing_matrices = {MatrixXd::Identity(1, 1)};
  gt.class_centers = MatrixXd(2, 1);
  gt.class_centers << 0.0, 10.0;
  d.ground_truth = gt;
  d.latents = MatrixXd(6, 1);
  for (Index i = 0; i < 6; ++i) (*d.latents)(i, 0) = flatten(d.samples[static_cast<std::size_t>(i)])(0);
  const MetricCaps caps = caps_of(1.0, 128.0, 10.0);
  const LossSpec spec = LossSpec::certified(caps, 1, 1.0, 129.0);
  TrainConfig cfg;
  cfg.max_iters = 2000;
  const TrainResult r = train(d, ModalitySet::all(1), spec, caps, cfg);
  REQUIRE(r.final_empirical_risk == 0.0);
  CHECK(*r.excess_empirical_risk == -ground_truth_risk(d, spec, caps, cfg));
  CHECK(*r.excess_empirical_risk <= 0.0);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.max_iters = 5;
  cfg.step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

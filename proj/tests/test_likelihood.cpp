#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mlpsel/kernels.hpp"
#include "mlpsel/likelihood.hpp"
#include "mlpsel/simulate.hpp"
#include "test_util.hpp"

using namespace mlpsel;
using testutil::random_theta;
using testutil::random_x;

namespace {
const TransferFunction kTanh(Transfer::tanh);

MlpParams one_unit(double beta, double a, double b, double w) {
  MlpParams p;
  p.beta = beta;
  p.units.push_back({a, b, {w}});
  return p;
}
}  // namespace

TEST_CASE("log-density at zero residual and one-sigma residual") {
  Rng rng(1);
  const MlpParams p = random_theta(rng, 2, 1);
  const auto x = random_x(rng, 1);
  const double fx = forward(p, kTanh, x);

  CHECK(log_density_term(p, kTanh, NoiseModel(1.0), x, fx) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));

  for (double s2 : {0.25, 1.0, 3.0}) {
    const double got = log_density_term(p, kTanh, NoiseModel(s2), x, fx + std::sqrt(s2));
    const double want = -0.5 * std::log(2.0 * std::numbers::pi * s2) - 0.5;
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("log-density matches the direct formula on random cases") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const MlpParams p = random_theta(rng, 3, 2);
    const auto x = random_x(rng, 2);
    const double y = rng.uniform(-3.0, 3.0);
    const double s2 = rng.uniform(0.1, 2.0);
    const double r = y - testutil::naive_forward(p, kTanh, x);
    const double want = -0.5 * std::log(2.0 * std::numbers::pi * s2) - r * r / (2.0 * s2);
    CHECK(log_density_term(p, kTanh, NoiseModel(s2), x, y) ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("invalid noise is rejected at density evaluation") {
  Rng rng(3);
  const MlpParams p = random_theta(rng, 1, 1);
  const auto x = random_x(rng, 1);
  CHECK_THROWS_AS(NoiseModel(-1.0), InvalidNoiseError);
  CHECK_THROWS_AS(log_density_term(p, kTanh, NoiseModel(0.0), x, 1.0), InvalidNoiseError);
}

TEST_CASE("log-likelihood: single point, duplication, oracle sum") {
  Rng rng(4);
  const MlpParams p = random_theta(rng, 2, 1);
  const NoiseModel noise(0.7);

  Dataset one(1);
  const auto x1 = random_x(rng, 1);
  one.add(x1, 0.33);
  CHECK(log_likelihood(p, kTanh, noise, one) ==
        doctest::Approx(log_density_term(p, kTanh, noise, x1, 0.33)).epsilon(1e-14));

  Dataset data(1);
  for (int t = 0; t < 50; ++t) data.add(random_x(rng, 1), rng.uniform(-2.0, 2.0));
  Dataset doubled(1);
  for (std::int64_t t = 0; t < data.n(); ++t) doubled.add(data.x(t), data.y(t));
  for (std::int64_t t = 0; t < data.n(); ++t) doubled.add(data.x(t), data.y(t));
  CHECK(log_likelihood(p, kTanh, noise, doubled) ==
        doctest::Approx(2.0 * log_likelihood(p, kTanh, noise, data)).epsilon(1e-12));

  double brute = 0.0;
  for (std::int64_t t = 0; t < data.n(); ++t)
    brute += log_density_term(p, kTanh, noise, data.x(t), data.y(t));
  CHECK(log_likelihood(p, kTanh, noise, data) == doctest::Approx(brute).epsilon(1e-10));

  CHECK_THROWS_AS(rss_value(p, kTanh, Dataset(1)), InvalidInputError);
}

TEST_CASE("log-likelihood equals the RSS identity exactly") {
  Rng rng(5);
  const MlpParams p = random_theta(rng, 2, 2);
  const NoiseModel noise(0.4);
  const Dataset data = generate_dataset(random_theta(rng, 1, 2), kTanh, noise,
                                        InputDistribution::standard_normal(2), 400, 99);
  const double rss = rss_value(p, kTanh, data);
  const double direct = -(0.5 * static_cast<double>(data.n())) *
                            std::log(2.0 * std::numbers::pi * noise.sigma2) -
                        rss / (2.0 * noise.sigma2);
  CHECK(log_likelihood(p, kTanh, noise, data) == direct);
}

TEST_CASE("shift invariance: adding c to ys and beta leaves l_n unchanged") {
  Rng rng(6);
  const MlpParams p = random_theta(rng, 2, 1);
  const NoiseModel noise(0.5);
  Dataset data(1);
  for (int t = 0; t < 200; ++t) data.add(random_x(rng, 1), rng.uniform(-2.0, 2.0));
  const double base = log_likelihood(p, kTanh, noise, data);
  for (double c : {-3.0, 0.125, 17.0}) {
    MlpParams shifted = p;
    shifted.beta += c;
    Dataset sdata(1);
    for (std::int64_t t = 0; t < data.n(); ++t) sdata.add(data.x(t), data.y(t) + c);
    CHECK(log_likelihood(shifted, kTanh, noise, sdata) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("density ratio: identity, inverse consistency, oracle") {
  Rng rng(7);
  const MlpParams p = random_theta(rng, 2, 1);
  const MlpParams q = random_theta(rng, 3, 1);
  const NoiseModel noise(0.6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_x(rng, 1);
    const double y = rng.uniform(-2.0, 2.0);
    CHECK(density_ratio(p, p, kTanh, noise, x, y) == 1.0);
    const double fwd = density_ratio(q, p, kTanh, noise, x, y);
    const double bwd = density_ratio(p, q, kTanh, noise, x, y);
    CHECK(fwd * bwd == doctest::Approx(1.0).epsilon(1e-12));
    const double want = std::exp(log_density_term(q, kTanh, noise, x, y) -
                                 log_density_term(p, kTanh, noise, x, y));
    CHECK(fwd == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("the two-unit realization of a one-unit network has ratio one") {
  // True function a0 * phi(w0 x): one unit, no biases.
  const MlpParams truth = one_unit(0.0, 1.7, 0.0, 0.9);
  const NoiseModel noise(0.8);
  Rng rng(8);

  // Branch one: second unit has zero output weight and arbitrary (b, w).
  MlpParams b1;
  b1.beta = 0.0;
  b1.units.push_back({1.7, 0.0, {0.9}});
  b1.units.push_back({0.0, -4.2, {11.0}});
  // Branch two: both units at w0 with output weights summing to a0.
  MlpParams b2;
  b2.beta = 0.0;
  b2.units.push_back({0.4, 0.0, {0.9}});
  b2.units.push_back({1.7 - 0.4, 0.0, {0.9}});

  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_x(rng, 1, 3.0);
    const double y = rng.uniform(-3.0, 3.0);
    CHECK(density_ratio(b1, truth, kTanh, noise, x, y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(density_ratio(b2, truth, kTanh, noise, x, y) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("normalized score: degenerate direction raises") {
  const MlpParams truth = one_unit(0.0, 1.7, 0.0, 0.9);
  MlpParams realizer;
  realizer.beta = 0.0;
  realizer.units.push_back({1.7, 0.0, {0.9}});
  realizer.units.push_back({0.0, 1.0, {2.0}});
  MonteCarloQuadrature quad;
  quad.samples = 20000;
  quad.input = InputDistribution::standard_normal(1);
  CHECK_THROWS_AS(normalized_score(realizer, truth, kTanh, NoiseModel(0.5), quad),
                  DegenerateDirectionError);
}

TEST_CASE("normalized score: unit norm on a fresh sample and direction stability") {
  const MlpParams truth = one_unit(0.3, 1.5, 0.6, 1.1);
  const NoiseModel noise(0.49);
  MonteCarloQuadrature quad;
  quad.samples = 100000;
  quad.input = InputDistribution::standard_normal(1);

  // Perturbations theta0 + h * delta for shrinking h.
  auto perturbed = [&](double h) {
    MlpParams p = truth;
    p.beta += 0.31 * h;
    p.units[0].a += 0.77 * h;
    p.units[0].b -= 0.52 * h;
    p.units[0].w[0] += 0.64 * h;
    return p;
  };

  const ScoreFunction s1 = normalized_score(perturbed(0.2), truth, kTanh, noise, quad);
  const ScoreFunction s2 = normalized_score(perturbed(0.1), truth, kTanh, noise, quad);
  const ScoreFunction s3 = normalized_score(perturbed(0.05), truth, kTanh, noise, quad);

  // Re-estimated norm of the returned score on a fresh stream is one +- 2%.
  MonteCarloQuadrature fresh = quad;
  fresh.seed = 0xFEEDull;
  const double sigma = std::sqrt(noise.sigma2);
  auto norm_of = [&](const ScoreFunction& s) {
    const double ms = kernels::mc_mean(fresh.seed, fresh.samples, 1, [&](Rng& rng, double* x) {
      fresh.input.sample(rng, x);
      const double y = forward(truth, kTanh, {x, 1}) + sigma * rng.normal();
      const double v = s({x, 1}, y);
      return v * v;
    });
    return std::sqrt(ms);
  };
  CHECK(norm_of(s2) == doctest::Approx(1.0).epsilon(0.02));
  // The construction reports the Monte-Carlo tolerance of the norm estimate.
  CHECK(s2.norm_se > 0.0);
  CHECK(s2.norm_se < 0.05 * s2.norm);

  // Empirical L2 distance between scores along the shrinking path decreases.
  auto dist = [&](const ScoreFunction& a, const ScoreFunction& b) {
    const double ms = kernels::mc_mean(0xD15Cull, fresh.samples, 1, [&](Rng& rng, double* x) {
      fresh.input.sample(rng, x);
      const double y = forward(truth, kTanh, {x, 1}) + sigma * rng.normal();
      const double v = a({x, 1}, y) - b({x, 1}, y);
      return v * v;
    });
    return std::sqrt(ms);
  };
  const double d12 = dist(s1, s2);
  const double d23 = dist(s2, s3);
  CHECK(d23 < d12);
  CHECK(d23 < 0.25);
}

TEST_CASE("plug-in variance estimate") {
  Rng rng(10);
  const MlpParams truth = one_unit(0.0, 2.0, 1.0, 1.5);
  const Dataset data = generate_dataset(truth, kTanh, NoiseModel(0.09),
                                        InputDistribution::standard_normal(1), 50000, 5);
  CHECK(sigma2_plugin(truth, kTanh, data) == doctest::Approx(0.09).epsilon(0.05));
}

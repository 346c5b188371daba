#include <doctest.h>

#include <cmath>

#include "mlpsel/kernels.hpp"
#include "mlpsel/reparam.hpp"
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

MlpParams two_units(double beta, HiddenUnit u1, HiddenUnit u2) {
  MlpParams p;
  p.beta = beta;
  p.units.push_back(std::move(u1));
  p.units.push_back(std::move(u2));
  return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Clustered perturbation of theta0: every reference unit is split into one or
// more nearby units plus optional far-away units with small output weights.
MlpParams clustered_theta(Rng& rng, const MlpParams& theta0, int k, double spread) {
  const int k0 = theta0.k();
  const int d = theta0.d();
  REQUIRE(k >= k0);
  MlpParams p;
  p.beta = theta0.beta + rng.uniform(-spread, spread);
  std::vector<int> copies(static_cast<std::size_t>(k0), 1);
  int extra_near = (k - k0) / 2;
  for (int e = 0; e < extra_near; ++e) ++copies[static_cast<std::size_t>(rng.next_u64() % k0)];
  for (int i = 0; i < k0; ++i) {
    const auto& u0 = theta0.units[static_cast<std::size_t>(i)];
    for (int cpy = 0; cpy < copies[static_cast<std::size_t>(i)]; ++cpy) {
      HiddenUnit u;
      u.a = u0.a / copies[static_cast<std::size_t>(i)] + rng.uniform(-spread, spread);
      u.b = u0.b + rng.uniform(-spread, spread);
      for (int j = 0; j < d; ++j)
        u.w.push_back(u0.w[static_cast<std::size_t>(j)] + rng.uniform(-spread, spread));
      p.units.push_back(std::move(u));
    }
  }
  while (p.k() < k) {
    HiddenUnit u;
    u.a = rng.uniform(-spread, spread);
    u.b = rng.uniform(4.0, 8.0);  // far from every reference unit
    for (int j = 0; j < d; ++j) u.w.push_back(rng.uniform(4.0, 8.0));
    p.units.push_back(std::move(u));
  }
  return p;
}

}  // namespace

TEST_CASE("decompose: two-unit realization of a one-unit network") {
  const MlpParams truth = one_unit(0.0, 1.7, 0.0, 0.9);
  MlpParams theta;
  theta.beta = 0.0;
  theta.units.push_back({1.7, 0.0, {0.9}});
  theta.units.push_back({0.0, 5.0, {-6.0}});

  const ReparamDecomposition dec = decompose(theta, truth, 0.05);
  CHECK(dec.t == std::vector<int>{1});
  CHECK(dec.perm == std::vector<int>{0, 1});
  CHECK(dec.s[0] == 0.0);
  CHECK(dec.q[0] == 1.0);
  CHECK(dec.extra.size() == 1);
  CHECK(dec.extra[0].a == 0.0);

  const auto phi0 = phi0_reference(truth, dec.t, theta.k());
  CHECK(max_abs_diff(dec.phi_flat(), phi0) == 0.0);
}

TEST_CASE("decompose: identity case") {
  Rng rng(3);
  MlpParams truth = random_theta(rng, 3, 2);
  truth.units[0].b = -2.0;
  truth.units[1].b = 0.0;
  truth.units[2].b = 2.0;  // well separated
  const ReparamDecomposition dec = decompose(truth, truth, 0.05);
  CHECK(dec.t == std::vector<int>{1, 2, 3});
  for (double si : dec.s) CHECK(si == 0.0);
  for (double qi : dec.q) CHECK(qi == 1.0);
  CHECK(dec.extra.empty());
  const auto phi0 = phi0_reference(truth, dec.t, truth.k());
  CHECK(max_abs_diff(dec.phi_flat(), phi0) == 0.0);
}

TEST_CASE("decompose: split unit with amplitudes summing to the reference") {
  const MlpParams truth = one_unit(0.3, 2.0, 0.5, 1.1);
  MlpParams theta;
  theta.beta = 0.3;
  theta.units.push_back({0.8, 0.5, {1.1}});
  theta.units.push_back({1.2, 0.5, {1.1}});
  theta.units.push_back({0.1, 6.0, {5.0}});

  const ReparamDecomposition dec = decompose(theta, truth, 0.05);
  CHECK(dec.t == std::vector<int>{2});
  CHECK(dec.s[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dec.q[0] == doctest::Approx(0.8 / 2.0).epsilon(1e-15));
  CHECK(dec.q[1] == doctest::Approx(1.2 / 2.0).epsilon(1e-15));

  const MlpParams rec = reconstruct(dec);
  CHECK(max_abs_diff(rec.to_flat(), theta.to_flat()) <= 1e-12);
}

TEST_CASE("decompose/reconstruct round trip on random clustered networks") {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const int k0 = 1 + static_cast<int>(rng.next_u64() % 2);
    const int d = 1 + static_cast<int>(rng.next_u64() % 2);
    MlpParams truth = random_theta(rng, k0, d);
    if (k0 == 2) {
      truth.units[0].b = -1.5;  // keep reference units well separated
      truth.units[1].b = 1.5;
    }
    const int k = k0 + static_cast<int>(rng.next_u64() % 3);
    const MlpParams theta = clustered_theta(rng, truth, k, 0.02);
    const ReparamDecomposition dec = decompose(theta, truth, 0.1);
    CHECK(dec.phi_dim() + dec.psi_dim() == theta.dim() + k0);
    const MlpParams rec = reconstruct(dec);
    CHECK(max_abs_diff(rec.to_flat(), theta.to_flat()) <= 1e-12);
    for (int xs = 0; xs < 100; ++xs) {
      const auto x = random_x(rng, d, 2.5);
      CHECK(forward(rec, kTanh, x) == doctest::Approx(forward(theta, kTanh, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("reconstruct: uniform split of the reference is function-identical") {
  const MlpParams truth = one_unit(0.25, 2.0, 0.5, 1.1);
  ReparamDecomposition dec;
  dec.k0 = 1;
  dec.k = 2;
  dec.d = 1;
  dec.t = {2};
  dec.perm = {0, 1};
  dec.beta = truth.beta;
  dec.b = {0.5, 0.5};
  dec.w = {{1.1}, {1.1}};
  dec.q = {0.5, 0.5};
  dec.s = {0.0};
  dec.a0 = {2.0};
  const MlpParams rec = reconstruct(dec);
  CHECK(rec.units[0].a == 1.0);
  CHECK(rec.units[1].a == 1.0);
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = random_x(rng, 1, 3.0);
    CHECK(forward(rec, kTanh, x) == doctest::Approx(forward(truth, kTanh, x)).epsilon(1e-13));
  }

  // Degenerate cluster: s_i = -a0_i zeroes the whole cluster.
  dec.s = {-2.0};
  const MlpParams zero = reconstruct(dec);
  CHECK(zero.units[0].a == 0.0);
  CHECK(zero.units[1].a == 0.0);

  // Broken mixing proportions are rejected.
  dec.q = {0.7, 0.7};
  CHECK_THROWS_AS(reconstruct(dec), InvalidDecompositionError);
}

TEST_CASE("decompose error cases") {
  const MlpParams truth = one_unit(0.0, 1.0, 0.0, 1.0);

  // Cancelling output weights in one cluster.
  MlpParams cancel = two_units(0.0, {1.0, 0.0, {1.0}}, {-1.0, 0.0, {1.0}});
  CHECK_THROWS_AS(decompose(cancel, truth, 0.05), InvalidDecompositionError);

  // No unit near the reference unit.
  MlpParams far = two_units(0.0, {1.0, 3.0, {4.0}}, {0.5, -3.0, {5.0}});
  CHECK_THROWS_AS(decompose(far, truth, 0.05), InvalidDecompositionError);

  // Reference units closer than twice the tolerance.
  MlpParams close0 = two_units(0.0, {1.0, 0.0, {1.0}}, {1.0, 0.05, {1.0}});
  MlpParams theta = two_units(0.0, {1.0, 0.0, {1.0}}, {1.0, 0.05, {1.0}});
  CHECK_THROWS_AS(decompose(theta, close0, 0.05), AmbiguousClusterError);

  // Fewer units than the reference.
  CHECK_THROWS_AS(decompose(one_unit(0.0, 1.0, 0.0, 1.0), close0, 0.01), InvalidInputError);
}

TEST_CASE("decompose warns when a unit sits exactly between two references") {
  // Reference separation exactly 2 * tol (dyadic values keep this exact).
  const double tol = 0.25;
  const MlpParams truth = two_units(0.0, {1.0, 0.0, {1.0}}, {1.0, 0.5, {1.0}});
  MlpParams theta = two_units(0.0, {1.0, 0.0, {1.0}}, {1.0, 0.5, {1.0}});
  theta.units.push_back({0.2, 0.25, {1.0}});
  const ReparamDecomposition dec = decompose(theta, truth, tol);
  CHECK(!dec.warnings.empty());
}

TEST_CASE("phi0_reference layout") {
  const MlpParams truth = one_unit(0.7, 2.0, 0.5, 1.1);
  const auto phi0 = phi0_reference(truth, {2}, 2);
  CHECK(phi0 == std::vector<double>{0.7, 0.5, 0.5, 1.1, 1.1, 0.0});

  // k = k0 with singleton clusters reproduces theta0 with zeroed s slots.
  Rng rng(5);
  MlpParams t2 = random_theta(rng, 2, 2);
  t2.units[0].b = -2.0;
  t2.units[1].b = 2.0;
  const auto p2 = phi0_reference(t2, {1, 2}, 2);
  std::vector<double> want{t2.beta,
                           t2.units[0].b, t2.units[1].b,
                           t2.units[0].w[0], t2.units[0].w[1],
                           t2.units[1].w[0], t2.units[1].w[1],
                           0.0, 0.0};
  CHECK(p2 == want);

  // Slot count matches the decomposition's identifiable block.
  const ReparamDecomposition dec = decompose(t2, t2, 0.05);
  CHECK(static_cast<int>(p2.size()) == dec.phi_dim());

  CHECK_THROWS_AS(phi0_reference(truth, {0}, 2), InvalidInputError);
  CHECK_THROWS_AS(phi0_reference(truth, {3}, 2), InvalidInputError);
}

TEST_CASE("varying psi with phi at the reference keeps the ratio at one") {
  const MlpParams truth = one_unit(0.4, 1.6, 0.3, 1.2);
  Rng rng(11);
  const NoiseModel noise(0.36);
  for (int rep = 0; rep < 10; ++rep) {
    ReparamDecomposition dec;
    dec.k0 = 1;
    dec.k = 3;
    dec.d = 1;
    dec.t = {2};
    dec.perm = {0, 1, 2};
    dec.a0 = {1.6};
    // psi: random mixing proportions and a far-away silent unit.
    const double q1 = rng.uniform(-1.0, 2.0);
    dec.q = {q1, 1.0 - q1};
    dec.extra.push_back({0.0, rng.uniform(-5.0, 5.0), {rng.uniform(-5.0, 5.0)}});
    dec.b = {0.0, 0.0};
    dec.w = {{0.0}, {0.0}};
    dec.s = {0.0};
    dec.set_phi(phi0_reference(truth, dec.t, dec.k));

    for (int zs = 0; zs < 20; ++zs) {
      const auto x = random_x(rng, 1, 2.0);
      const double y = rng.uniform(-2.0, 2.0);
      const ExpansionPoint pt = expansion_at(dec, truth, kTanh, noise, x, y);
      CHECK(pt.first == 0.0);
      CHECK(pt.second == 0.0);
      CHECK(pt.ratio_exact == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("expansion along a pure bias perturbation matches the closed form") {
  const MlpParams truth = one_unit(0.2, 1.4, 0.6, 0.9);
  const NoiseModel noise(0.25);
  Rng rng(13);
  const ReparamDecomposition base = decompose(truth, truth, 0.05);

  for (double h : {1e-1, 1e-2, 1e-3}) {
    ReparamDecomposition dec = base;
    auto phi = phi0_reference(truth, base.t, base.k);
    phi[0] += h;  // beta slot
    dec.set_phi(phi);
    for (int zs = 0; zs < 20; ++zs) {
      const auto x = random_x(rng, 1, 2.0);
      const double y = rng.uniform(-2.0, 2.0);
      const ExpansionPoint pt = expansion_at(dec, truth, kTanh, noise, x, y);
      const double e = (y - forward(truth, kTanh, x)) / noise.sigma2;
      CHECK(pt.first == doctest::Approx(e * h).epsilon(1e-12));
      CHECK(pt.second == doctest::Approx((e * e - 1.0 / noise.sigma2) * h * h).epsilon(1e-10));
      // Closed-form ratio for a bias shift: exp(e h - h^2 / (2 sigma2)).
      const double want = std::exp(e * h - h * h / (2.0 * noise.sigma2));
      CHECK(pt.ratio_exact == doctest::Approx(want).epsilon(1e-12));
      // Quadratic Taylor error is cubic in h.
      CHECK(std::abs(pt.ratio_exact - 1.0 - pt.first - 0.5 * pt.second) <=
            10.0 * std::abs(h * h * h) * (1.0 + std::abs(e) * (1 + e * e)));
    }
  }
}

TEST_CASE("expansion remainder over D shrinks along random perturbation paths") {
  const MlpParams truth = one_unit(0.1, 1.8, 0.4, 1.3);
  const NoiseModel noise(0.25);
  Rng rng(17);

  // Chart: both units matched to the single reference unit, fixed psi.
  ReparamDecomposition dec;
  dec.k0 = 1;
  dec.k = 2;
  dec.d = 1;
  dec.t = {2};
  dec.perm = {0, 1};
  dec.a0 = {1.8};
  dec.q = {0.35, 0.65};
  dec.b = {0.4, 0.4};
  dec.w = {{1.3}, {1.3}};
  dec.s = {0.0};
  const auto phi0 = phi0_reference(truth, dec.t, dec.k);

  MonteCarloQuadrature quad;
  quad.samples = 20000;
  quad.input = InputDistribution::standard_normal(1);

  std::vector<double> dir(phi0.size());
  double nrm = 0.0;
  for (auto& v : dir) {
    v = rng.uniform(-1.0, 1.0);
    nrm += v * v;
  }
  nrm = std::sqrt(nrm);
  for (auto& v : dir) v /= nrm;

  const double sigma = std::sqrt(noise.sigma2);
  double prev_metric = 1e300;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    auto phi = phi0;
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] += h * dir[i];
    ReparamDecomposition moved = dec;
    moved.set_phi(phi);
    const double D = expansion_l2_distance(moved, truth, kTanh, noise, quad);
    const double mean_rem = kernels::mc_mean(0xABCDull, 2000, 1, [&](Rng& r2, double* x) {
      quad.input.sample(r2, x);
      const double y = forward(truth, kTanh, {x, 1}) + sigma * r2.normal();
      const ExpansionPoint pt = expansion_at(moved, truth, kTanh, noise, {x, 1}, y);
      return std::abs(pt.ratio_exact - 1.0 - pt.first - 0.5 * pt.second);
    });
    const double metric = mean_rem / D;
    CHECK(metric < prev_metric);
    prev_metric = metric;
  }
  CHECK(prev_metric < 0.05);
}

TEST_CASE("first-order term has mean zero under the true model") {
  const MlpParams truth = one_unit(0.0, 1.5, 0.7, 1.0);
  const NoiseModel noise(0.49);
  Rng rng(19);

  ReparamDecomposition dec = decompose(truth, truth, 0.05);
  auto phi = phi0_reference(truth, dec.t, dec.k);
  Rng dirrng(23);
  for (auto& v : phi) v += 0.05 * dirrng.uniform(-1.0, 1.0);
  dec.set_phi(phi);

  const double sigma = std::sqrt(noise.sigma2);
  const std::int64_t N = 100000;
  const double mean = kernels::mc_mean(0x5151ull, N, 1, [&](Rng& r2, double* x) {
    InputDistribution::standard_normal(1).sample(r2, x);
    const double y = forward(truth, kTanh, {x, 1}) + sigma * r2.normal();
    return expansion_at(dec, truth, kTanh, noise, {x, 1}, y).first;
  });
  const double mean_sq = kernels::mc_mean(0x5151ull, N, 1, [&](Rng& r2, double* x) {
    InputDistribution::standard_normal(1).sample(r2, x);
    const double y = forward(truth, kTanh, {x, 1}) + sigma * r2.normal();
    const double f = expansion_at(dec, truth, kTanh, noise, {x, 1}, y).first;
    return f * f;
  });
  const double se = std::sqrt((mean_sq - mean * mean) / static_cast<double>(N));
  CHECK(std::abs(mean) <= 4.0 * se);
}

TEST_CASE("expansion_terms bundles the pointwise terms with the distance") {
  const MlpParams truth = one_unit(0.2, 1.4, 0.6, 0.9);
  const NoiseModel noise(0.25);
  ReparamDecomposition dec = decompose(truth, truth, 0.05);
  auto phi = phi0_reference(truth, dec.t, dec.k);
  phi[0] += 0.05;
  dec.set_phi(phi);
  MonteCarloQuadrature quad;
  quad.samples = 20000;
  quad.input = InputDistribution::standard_normal(1);
  const std::vector<double> x{0.3};
  const ExpansionTerms terms = expansion_terms(dec, truth, kTanh, noise, x, 0.9, quad);
  const ExpansionPoint pt = expansion_at(dec, truth, kTanh, noise, x, 0.9);
  CHECK(terms.first == pt.first);
  CHECK(terms.second == pt.second);
  CHECK(terms.ratio_exact == pt.ratio_exact);
  CHECK(terms.D == doctest::Approx(0.05 / std::sqrt(noise.sigma2)).epsilon(0.05));
}

#include <doctest.h>

#include <cmath>

#include "mlpsel/selection.hpp"
#include "mlpsel/simulate.hpp"
#include "test_util.hpp"

using namespace mlpsel;

namespace {
const TransferFunction kTanh(Transfer::tanh);

MlpParams one_unit(double beta, double a, double b, double w) {
  MlpParams p;
  p.beta = beta;
  p.units.push_back({a, b, {w}});
  return p;
}
}  // namespace

TEST_CASE("bic penalty values") {
  // dim = 4, ln n = 2 at n = e^2.
  CHECK(penalty_value(Penalty::bic(), 1, std::exp(2.0), 1) == doctest::Approx(4.0).epsilon(1e-12));
  // dim = 11 at k = 2, d = 3.
  CHECK(penalty_value(Penalty::bic(), 2, 100.0, 3) ==
        doctest::Approx(5.5 * std::log(100.0)).epsilon(1e-12));
  CHECK(penalty_value(Penalty::bic(), 2, 100.0, 3) == doctest::Approx(25.3284).epsilon(1e-4));
  CHECK_THROWS_AS(penalty_value(Penalty::bic(), 1, 0.0, 1), InvalidInputError);
  CHECK_THROWS_AS(penalty_value(Penalty::bic(), 0, 10.0, 1), InvalidInputError);
}

TEST_CASE("bic p_n/n decays along the sample-size sequence") {
  const Penalty bic = Penalty::bic();
  double prev = penalty_value(bic, 2, 100.0, 1) / 100.0;
  for (double n : {1e3, 1e4, 1e5, 1e6}) {
    const double cur = penalty_value(bic, 2, n, 1) / n;
    CHECK(cur < prev);
    prev = cur;
  }
  // Overall decay across four decades: ratio (ln 1e6 / 1e6) / (ln 1e2 / 1e2).
  const double first = penalty_value(bic, 2, 100.0, 1) / 100.0;
  const double last = penalty_value(bic, 2, 1e6, 1) / 1e6;
  CHECK(last < 1e-3 * first);
}

TEST_CASE("penalty growth checker: bic passes, aic fails the gap condition") {
  const std::vector<std::int64_t> grid{100, 1000, 10000, 100000};
  const H4Report bic = check_h4(Penalty::bic(), 10, grid, 1);
  CHECK(bic.pass());

  const H4Report aic = check_h4(Penalty::aic(), 10, grid, 1);
  CHECK(aic.increasing_in_k);
  CHECK_FALSE(aic.gaps_increasing);
  CHECK(!aic.counterexample_ii.empty());
  CHECK(aic.ratio_decreasing);

  // p_n(k) = k * sqrt(n) via the table kind.
  std::map<std::pair<int, std::int64_t>, double> table;
  for (int k = 1; k <= 10; ++k)
    for (auto n : grid) table[{k, n}] = k * std::sqrt(static_cast<double>(n));
  const H4Report custom = check_h4(Penalty::custom(table), 10, grid, 1);
  CHECK(custom.pass());

  // power(c, alpha): c * dim_k * n^alpha also passes.
  CHECK(check_h4(Penalty::power(0.5, 0.5), 10, grid, 1).pass());

  CHECK_THROWS_AS(check_h4(Penalty::bic(), 10, {100, 100}, 1), InvalidInputError);
}

TEST_CASE("selection on data from a one-unit network") {
  const MlpParams truth = one_unit(0.0, 2.0, 1.0, 1.5);
  const Dataset data = generate_dataset(truth, kTanh, NoiseModel(0.09),
                                        InputDistribution::standard_normal(1), 600, 77);
  FitConfig cfg;
  cfg.restarts = 8;
  cfg.seed = 4;
  const SelectionResult sel =
      select_architecture(data, 3, Penalty::bic(), kTanh, NoiseModel(0.09), cfg);
  CHECK(sel.per_k.size() == 3);
  CHECK(sel.k_hat == 1);
  // T_n rows are consistent and the maximized likelihood is nondecreasing.
  for (const auto& row : sel.per_k) {
    const double pen = penalty_value(Penalty::bic(), row.k, static_cast<double>(data.n()), 1);
    CHECK(row.t_n == doctest::Approx(row.loglik - pen).epsilon(1e-12));
  }
  CHECK(sel.per_k[1].loglik >= sel.per_k[0].loglik - 1e-6);
  CHECK(sel.per_k[2].loglik >= sel.per_k[1].loglik - 1e-6);
}

TEST_CASE("zero penalty selects the largest candidate when likelihood improves") {
  const MlpParams truth = one_unit(0.0, 2.0, 0.8, 1.3);
  const Dataset data = generate_dataset(truth, kTanh, NoiseModel(0.25),
                                        InputDistribution::standard_normal(1), 400, 13);
  FitConfig cfg;
  cfg.restarts = 8;
  cfg.seed = 6;
  const SelectionResult sel =
      select_architecture(data, 3, Penalty::power(0.0, 0.5), kTanh, NoiseModel(0.25), cfg);
  CHECK(sel.per_k[1].t_n >= sel.per_k[0].t_n - 1e-9);
  CHECK(sel.per_k[2].t_n >= sel.per_k[1].t_n - 1e-9);
  if (sel.per_k[2].t_n > sel.per_k[1].t_n + 1e-9 && sel.per_k[1].t_n > sel.per_k[0].t_n + 1e-9)
    CHECK(sel.k_hat == 3);
  CHECK(sel.tn_increasing_at_max == (sel.per_k[2].t_n > sel.per_k[1].t_n));
}

TEST_CASE("single observation: every candidate ties and parsimony wins") {
  Dataset data(1);
  data.add(std::vector<double>{0.4}, 1.3);
  FitConfig cfg;
  cfg.restarts = 5;
  cfg.seed = 12;
  const SelectionResult sel =
      select_architecture(data, 3, Penalty::bic(), kTanh, NoiseModel(1.0), cfg);
  CHECK(sel.k_hat == 1);
}

TEST_CASE("adding a constant to every penalty leaves the choice unchanged") {
  const MlpParams truth = one_unit(0.2, 1.5, 0.4, 1.0);
  const Dataset data = generate_dataset(truth, kTanh, NoiseModel(0.16),
                                        InputDistribution::standard_normal(1), 300, 31);
  FitConfig cfg;
  cfg.restarts = 6;
  cfg.seed = 8;
  const NoiseModel noise(0.16);

  std::map<std::pair<int, std::int64_t>, double> base, shifted;
  for (int k = 1; k <= 3; ++k) {
    const double p = penalty_value(Penalty::bic(), k, static_cast<double>(data.n()), 1);
    base[{k, data.n()}] = p;
    shifted[{k, data.n()}] = p + 7.25;
  }
  const SelectionResult a =
      select_architecture(data, 3, Penalty::custom(base), kTanh, noise, cfg);
  const SelectionResult b =
      select_architecture(data, 3, Penalty::custom(shifted), kTanh, noise, cfg);
  CHECK(a.k_hat == b.k_hat);
}

TEST_CASE("parallel per-k mode returns a valid result") {
  const MlpParams truth = one_unit(0.0, 1.8, 0.6, 1.2);
  const Dataset data = generate_dataset(truth, kTanh, NoiseModel(0.09),
                                        InputDistribution::standard_normal(1), 300, 41);
  FitConfig cfg;
  cfg.restarts = 6;
  cfg.seed = 10;
  const SelectionResult sel = select_architecture(data, 3, Penalty::bic(), kTanh,
                                                  NoiseModel(0.09), cfg, SpaceBounds{}, true);
  CHECK(sel.per_k.size() == 3);
  CHECK(sel.k_hat >= 1);
  CHECK(sel.k_hat <= 3);
}

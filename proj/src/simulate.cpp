#include "mlpsel/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlpsel {

Dataset generate_dataset(const MlpParams& theta0, const TransferFunction& phi,
                         const NoiseModel& noise, const InputDistribution& input, std::int64_t n,
                         std::uint64_t seed) {
  theta0.validate();
  if (n < 1) throw InvalidInputError("generate_dataset: n must be >= 1");
  if (input.d != theta0.d()) throw ShapeError("generate_dataset: input dimension mismatch");

  const int d = theta0.d();
  const double sigma = std::sqrt(noise.sigma2);
  Dataset ds(d);
  ds.reserve(n);
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::int64_t t = 0; t < n; ++t) {
    input.sample(rng, x.data());
    double y = forward(theta0, phi, x);
    if (sigma > 0.0) y += sigma * rng.normal();
    ds.add(x, y);
  }
  GenerationMeta meta;
  meta.theta0 = theta0;
  meta.transfer = phi.kind();
  meta.sigma2 = noise.sigma2;
  meta.input_tag = input.tag();
  meta.seed = seed;
  ds.meta = std::move(meta);
  return ds;
}

void ExperimentPlan::validate() const {
  theta0.validate();
  if (n_grid.empty()) throw InvalidInputError("plan: n_grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw InvalidInputError("plan: n must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw InvalidInputError("plan: n_grid must be increasing");
  }
  if (replications < 1) throw InvalidInputError("plan: replications must be >= 1");
  if (M < 1) throw InvalidInputError("plan: M must be >= 1");
  if (theta0.k() > M) throw InvalidInputError("plan: true unit count exceeds M");
  if (input.d != theta0.d()) throw InvalidInputError("plan: input dimension mismatch");
  fit_cfg.validate();
}

ConsistencyTable consistency_experiment(const ExperimentPlan& plan) {
  plan.validate();
  const TransferFunction phi(plan.transfer);
  const NoiseModel eval_noise = plan.eval_noise();
  const int n_count = static_cast<int>(plan.n_grid.size());
  const int reps = plan.replications;

  ConsistencyTable table;
  table.k0 = plan.theta0.k();
  table.cells.resize(static_cast<std::size_t>(n_count) * reps);

  const std::int64_t total = static_cast<std::int64_t>(n_count) * reps;
  // Largest n first so the expensive cells do not straggle at the end; the
  // output layout is unchanged.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t cr = 0; cr < total; ++cr) {
    const std::int64_t c = total - 1 - cr;
    const int ni = static_cast<int>(c / reps);
    const int rep = static_cast<int>(c % reps);
    const std::int64_t n = plan.n_grid[static_cast<std::size_t>(ni)];
    ConsistencyCell cell;
    cell.n = n;
    cell.rep = rep;
    cell.seed = seed_mix({plan.master_seed, static_cast<std::uint64_t>(n),
                          static_cast<std::uint64_t>(rep)});
    try {
      const Dataset data =
          generate_dataset(plan.theta0, phi, plan.noise, plan.input, n, cell.seed);
      FitConfig cfg = plan.fit_cfg;
      cfg.seed = seed_mix({cell.seed, 0xF17ull});
      const SelectionResult sel =
          select_architecture(data, plan.M, plan.penalty, phi, eval_noise, cfg, plan.space);
      cell.k_hat = sel.k_hat;
    } catch (const Error& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    table.cells[static_cast<std::size_t>(c)] = std::move(cell);
  }

  for (int ni = 0; ni < n_count; ++ni) {
    ConsistencySummaryRow row;
    row.n = plan.n_grid[static_cast<std::size_t>(ni)];
    row.k_hat_counts.assign(static_cast<std::size_t>(plan.M), 0);
    std::int64_t valid = 0, hits = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& cell = table.cells[static_cast<std::size_t>(ni) * reps + rep];
      if (cell.failed) {
        ++row.failures;
        continue;
      }
      ++valid;
      if (cell.k_hat >= 1 && cell.k_hat <= plan.M)
        ++row.k_hat_counts[static_cast<std::size_t>(cell.k_hat - 1)];
      if (cell.k_hat == table.k0) ++hits;
    }
    row.freq_true = valid > 0 ? static_cast<double>(hits) / static_cast<double>(valid) : 0.0;
    row.invalid = row.failures * 10 > reps;  // more than 10% failed
    table.per_n.push_back(std::move(row));
  }
  return table;
}

namespace {

// Deterministic nearest-rank empirical quantile on a copy.
double quantile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(p * static_cast<double>(v.size()))) - 1));
  return v[std::min(idx, v.size() - 1)];
}

}  // namespace

const char* condition_name(int condition) { return condition == 0 ? "bounded" : "loose"; }

LrsTable lrs_tightness_experiment(const ExperimentPlan& plan, int k_over) {
  plan.validate();
  const int k0 = plan.theta0.k();
  if (k_over < k0) throw InvalidInputError("lrs experiment: k_over must be >= the true unit count");
  const TransferFunction phi(plan.transfer);
  const NoiseModel eval_noise = plan.eval_noise();
  const int n_count = static_cast<int>(plan.n_grid.size());
  const int reps = plan.replications;

  LrsTable table;
  table.k0 = k0;
  table.k_over = k_over;
  table.cells.resize(static_cast<std::size_t>(n_count) * reps * 2);

  const std::int64_t total = static_cast<std::int64_t>(n_count) * reps;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t cr = 0; cr < total; ++cr) {
    const std::int64_t c = total - 1 - cr;
    const int ni = static_cast<int>(c / reps);
    const int rep = static_cast<int>(c % reps);
    const std::int64_t n = plan.n_grid[static_cast<std::size_t>(ni)];
    const std::uint64_t seed = seed_mix({plan.master_seed, static_cast<std::uint64_t>(n),
                                         static_cast<std::uint64_t>(rep)});
    for (int cond = 0; cond < 2; ++cond) {
      LrsCell cell;
      cell.n = n;
      cell.rep = rep;
      cell.condition = cond;
      try {
        const Dataset data = generate_dataset(plan.theta0, phi, plan.noise, plan.input, n, seed);
        SpaceBounds bounds = plan.space;
        if (cond == 1) bounds.box_bound *= plan.lrs_loose_factor;
        FitConfig cfg = plan.fit_cfg;
        cfg.seed = seed_mix({seed, static_cast<std::uint64_t>(cond), 0x1B5ull});

        ParamSpace space0(k0, data.d(), bounds.box_bound, bounds.eta);
        const FitResult fit0 = fit_mle(space0, phi, eval_noise, data, cfg);

        if (k_over == k0) {
          // Same candidate set, same maximization: the statistic is zero by
          // definition, no second fit to run.
          cell.lrs_raw = 0.0;
          cell.lrs = 0.0;
        } else {
          ParamSpace space_over(k_over, data.d(), bounds.box_bound, bounds.eta);
          std::vector<MlpParams> warm{embed_with_zero_units(fit0.theta_hat, space_over)};
          const FitResult fit_over = fit_mle(space_over, phi, eval_noise, data, cfg, warm);
          cell.lrs_raw = 2.0 * (fit_over.loglik - fit0.loglik);
          cell.lrs = std::max(0.0, cell.lrs_raw);
        }
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      table.cells[static_cast<std::size_t>((c * 2) + cond)] = std::move(cell);
    }
  }

  for (int cond = 0; cond < 2; ++cond) {
    for (int ni = 0; ni < n_count; ++ni) {
      LrsSummaryRow row;
      row.n = plan.n_grid[static_cast<std::size_t>(ni)];
      row.condition = cond;
      std::vector<double> values;
      row.min_raw = std::numeric_limits<double>::infinity();
      for (int rep = 0; rep < reps; ++rep) {
        const auto& cell =
            table.cells[(static_cast<std::size_t>(ni) * reps + rep) * 2 + static_cast<std::size_t>(cond)];
        if (cell.failed) {
          ++row.failures;
          continue;
        }
        values.push_back(cell.lrs);
        row.min_raw = std::min(row.min_raw, cell.lrs_raw);
        if (cell.lrs_raw < 0.0) ++row.clamped;
      }
      row.median = quantile(values, 0.5);
      row.q90 = quantile(values, 0.9);
      row.invalid = row.failures * 10 > reps;
      if (values.empty()) row.min_raw = 0.0;
      table.per_n.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace mlpsel

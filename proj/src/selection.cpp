#include "mlpsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mlpsel {

std::string Penalty::name() const {
  switch (kind) {
    case Kind::bic:
      return "bic";
    case Kind::aic:
      return "aic";
    case Kind::power: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "power(c=%g,alpha=%g)", c, alpha);
      return buf;
    }
    case Kind::custom_table:
      return "custom_table";
  }
  return "?";
}

double penalty_value(const Penalty& pen, int k, double n, int d) {
  if (k < 1) throw InvalidInputError("penalty_value: k must be >= 1");
  if (!(n >= 1.0)) throw InvalidInputError("penalty_value: n must be >= 1");
  if (d < 1) throw InvalidInputError("penalty_value: d must be >= 1");
  const double dim = 2.0 * k + 1.0 + static_cast<double>(k) * d;
  switch (pen.kind) {
    case Penalty::Kind::bic:
      return 0.5 * dim * std::log(n);
    case Penalty::Kind::aic:
      return dim;
    case Penalty::Kind::power:
      return pen.c * dim * std::pow(n, pen.alpha);
    case Penalty::Kind::custom_table: {
      auto it = pen.table.find({k, static_cast<std::int64_t>(n)});
      if (it == pen.table.end())
        throw InvalidInputError("penalty table has no entry for (k=" + std::to_string(k) +
                                ", n=" + std::to_string(static_cast<std::int64_t>(n)) + ")");
      return it->second;
    }
  }
  throw InvalidInputError("penalty_value: unknown kind");
}

namespace {

std::string cx(int k1, int k2, std::int64_t n1, std::int64_t n2, double v1, double v2) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "k1=%d k2=%d n1=%lld n2=%lld values %.10g -> %.10g", k1, k2,
                static_cast<long long>(n1), static_cast<long long>(n2), v1, v2);
  return buf;
}

}  // namespace

H4Report check_h4(const Penalty& pen, int k_max, const std::vector<std::int64_t>& n_grid, int d) {
  if (k_max < 2) throw InvalidInputError("check_h4: k_max must be >= 2");
  if (n_grid.size() < 2) throw InvalidInputError("check_h4: n_grid needs at least two points");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw InvalidInputError("check_h4: n_grid must be increasing");

  H4Report rep;
  // (i) strictly increasing in k.
  for (std::int64_t n : n_grid) {
    for (int k = 1; k + 1 <= k_max && rep.increasing_in_k; ++k) {
      const double p1 = penalty_value(pen, k, static_cast<double>(n), d);
      const double p2 = penalty_value(pen, k + 1, static_cast<double>(n), d);
      if (!(p2 > p1)) {
        rep.increasing_in_k = false;
        rep.counterexample_i = cx(k + 1, k, n, n, p1, p2);
      }
    }
  }
  // (ii) gaps p_n(k1) - p_n(k2), k1 > k2, increasing along the n grid.
  for (int k2 = 1; k2 <= k_max && rep.gaps_increasing; ++k2) {
    for (int k1 = k2 + 1; k1 <= k_max && rep.gaps_increasing; ++k1) {
      for (std::size_t i = 1; i < n_grid.size(); ++i) {
        const double gap_prev = penalty_value(pen, k1, static_cast<double>(n_grid[i - 1]), d) -
                                penalty_value(pen, k2, static_cast<double>(n_grid[i - 1]), d);
        const double gap_next = penalty_value(pen, k1, static_cast<double>(n_grid[i]), d) -
                                penalty_value(pen, k2, static_cast<double>(n_grid[i]), d);
        if (!(gap_next > gap_prev)) {
          rep.gaps_increasing = false;
          rep.counterexample_ii = cx(k1, k2, n_grid[i - 1], n_grid[i], gap_prev, gap_next);
          break;
        }
      }
    }
  }
  // (iii) p_n(k)/n decreasing along the n grid.
  for (int k = 1; k <= k_max && rep.ratio_decreasing; ++k) {
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
      const double r_prev =
          penalty_value(pen, k, static_cast<double>(n_grid[i - 1]), d) / n_grid[i - 1];
      const double r_next = penalty_value(pen, k, static_cast<double>(n_grid[i]), d) / n_grid[i];
      if (!(r_next < r_prev)) {
        rep.ratio_decreasing = false;
        rep.counterexample_iii = cx(k, k, n_grid[i - 1], n_grid[i], r_prev, r_next);
        break;
      }
    }
  }
  return rep;
}

SelectionResult select_architecture(const Dataset& data, int M, const Penalty& pen,
                                    const TransferFunction& phi, const NoiseModel& noise,
                                    const FitConfig& cfg, const SpaceBounds& bounds,
                                    bool parallel_fits) {
  if (M < 1) throw InvalidInputError("select_architecture: M must be >= 1");
  if (data.n() < 1) throw InvalidInputError("select_architecture: dataset must be nonempty");

  SelectionResult res;
  res.per_k.reserve(static_cast<std::size_t>(M));
  res.fits.reserve(static_cast<std::size_t>(M));

  if (parallel_fits) {
    res.fits.resize(static_cast<std::size_t>(M));
    std::vector<std::string> errors(static_cast<std::size_t>(M));
#pragma omp parallel for schedule(dynamic)
    for (int k = 1; k <= M; ++k) {
      try {
        ParamSpace space(k, data.d(), bounds.box_bound, bounds.eta);
        res.fits[static_cast<std::size_t>(k - 1)] = fit_mle(space, phi, noise, data, cfg);
      } catch (const Error& e) {
        errors[static_cast<std::size_t>(k - 1)] = e.what();
      }
    }
    for (int k = 1; k <= M; ++k)
      if (!errors[static_cast<std::size_t>(k - 1)].empty())
        throw OptimizationError("fit failed at k=" + std::to_string(k) + ": " +
                                errors[static_cast<std::size_t>(k - 1)]);
  } else {
    for (int k = 1; k <= M; ++k) {
      ParamSpace space(k, data.d(), bounds.box_bound, bounds.eta);
      std::vector<MlpParams> warm;
      if (k > 1)
        warm.push_back(
            embed_with_zero_units(res.fits[static_cast<std::size_t>(k - 2)].theta_hat, space));
      try {
        res.fits.push_back(fit_mle(space, phi, noise, data, cfg, warm));
      } catch (const Error& e) {
        throw OptimizationError("fit failed at k=" + std::to_string(k) + ": " + e.what());
      }
    }
  }

  for (int k = 1; k <= M; ++k) {
    const auto& fit = res.fits[static_cast<std::size_t>(k - 1)];
    SelectionRow row;
    row.k = k;
    row.loglik = fit.loglik;
    row.penalty = penalty_value(pen, k, static_cast<double>(data.n()), data.d());
    row.t_n = row.loglik - row.penalty;
    res.per_k.push_back(row);
    for (const auto& w : fit.warnings) res.warnings.push_back("k=" + std::to_string(k) + ": " + w);
  }

  // Argmax with near-ties (within 1e-9, optimizer-noise scale) resolved
  // toward the smallest k: the penalty gap vanishes at n = 1 (log 1 = 0) and
  // exact float ties essentially never happen.
  double t_max = res.per_k.front().t_n;
  for (const auto& row : res.per_k) t_max = std::max(t_max, row.t_n);
  res.k_hat = M;
  for (int k = M; k >= 1; --k)
    if (res.per_k[static_cast<std::size_t>(k - 1)].t_n >= t_max - 1e-9) res.k_hat = k;

  if (M >= 2) {
    res.tn_increasing_at_max =
        res.per_k[static_cast<std::size_t>(M - 1)].t_n > res.per_k[static_cast<std::size_t>(M - 2)].t_n;
    if (res.tn_increasing_at_max)
      res.warnings.push_back("T_n is still increasing at k=M; M may be too small");
  }
  return res;
}

}  // namespace mlpsel

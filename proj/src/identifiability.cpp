#include "mlpsel/identifiability.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "mlpsel/kernels.hpp"

namespace mlpsel {

namespace {

bool wants_flip(const HiddenUnit& u) {
  if (u.b < 0.0) return true;
  if (u.b > 0.0) return false;
  for (double wj : u.w) {
    if (wj < 0.0) return true;
    if (wj > 0.0) return false;
  }
  return false;
}

bool unit_less(const HiddenUnit& l, const HiddenUnit& r) {
  if (l.b != r.b) return l.b < r.b;
  if (l.w != r.w) return l.w < r.w;  // lexicographic
  return l.a < r.a;
}

}  // namespace

MlpParams canonicalize(const MlpParams& theta, const TransferFunction& phi) {
  theta.validate();
  MlpParams out = theta;
  for (auto& u : out.units) {
    if (!wants_flip(u)) continue;
    if (phi.kind() == Transfer::logistic) out.beta += u.a;
    u.a = -u.a;
    u.b = -u.b;
    for (double& wj : u.w) wj = -wj;
  }
  std::sort(out.units.begin(), out.units.end(), unit_less);
  return out;
}

MomentReport moment_diagnostic(std::span<const double> xs_flat, std::int64_t n, int d) {
  if (n < 1) throw InvalidInputError("moment_diagnostic: empty sample");
  if (d < 1 || static_cast<std::int64_t>(xs_flat.size()) != n * d)
    throw ShapeError("moment_diagnostic: bad sample shape");

  auto mean_norm6 = [&](std::int64_t begin, std::int64_t end) {
    if (end <= begin) return 0.0;
    double acc = 0.0;
    for (std::int64_t t = begin; t < end; ++t) {
      double sq = 0.0;
      for (int j = 0; j < d; ++j) {
        const double v = xs_flat[static_cast<std::size_t>(t * d + j)];
        sq += v * v;
      }
      acc += sq * sq * sq;
    }
    return acc / static_cast<double>(end - begin);
  };

  MomentReport rep;
  rep.sixth_moment = mean_norm6(0, n);
  const std::int64_t half = n / 2;
  rep.first_half = mean_norm6(0, half);
  rep.second_half = mean_norm6(half, n);
  if (rep.first_half == rep.second_half) {
    rep.stable = true;
  } else if (rep.first_half == 0.0 || rep.second_half == 0.0) {
    rep.stable = false;
  } else {
    const double ratio = rep.second_half / rep.first_half;
    rep.stable = ratio >= 0.5 && ratio <= 2.0;
  }
  return rep;
}

MomentReport moment_diagnostic(const Dataset& data) {
  return moment_diagnostic(data.xs_flat(), data.n(), data.d());
}

namespace {

// Fills the derivative-family values for one x into v (size m).
void gram_eval(const MlpParams& theta0, const TransferFunction& phi, const double* x, double* v) {
  const int k0 = theta0.k();
  const int d = theta0.d();
  int pos = 0;
  for (int i = 0; i < k0; ++i) {
    const auto& u = theta0.units[static_cast<std::size_t>(i)];
    double z = u.b;
    for (int j = 0; j < d; ++j) z += u.w[static_cast<std::size_t>(j)] * x[j];
    const double p1 = phi.d1(z);
    const double p2 = phi.d2(z);
    for (int l = 0; l < d; ++l)
      for (int m = l; m < d; ++m) v[pos++] = x[l] * x[m] * p2;
    v[pos++] = p2;
    for (int l = 0; l < d; ++l) v[pos++] = x[l] * p1;
    v[pos++] = p1;
  }
}

double min_eig_normalized(const Matrix& sums, double count, int m, std::vector<double>& diag) {
  diag.resize(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) diag[static_cast<std::size_t>(p)] = sums(p, p) / count;
  Eigen::MatrixXd g(m, m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      const double den = std::sqrt(diag[static_cast<std::size_t>(p)] * diag[static_cast<std::size_t>(q)]);
      g(p, q) = (sums(p, q) / count) / den;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

GramReport gram_test_h3(const MlpParams& theta0, const TransferFunction& phi,
                        const InputDistribution& input, std::int64_t mc_samples,
                        std::uint64_t seed) {
  theta0.validate();
  if (input.d != theta0.d()) throw ShapeError("gram_test_h3: input distribution dimension mismatch");
  if (mc_samples < 10000) throw InvalidInputError("gram_test_h3: need at least 1e4 samples");

  const int d = theta0.d();
  const int m = gram_function_count(theta0.k(), d);
  const std::int64_t nblocks = (mc_samples + kernels::kBlock - 1) / kernels::kBlock;

  // Per-block partial sums of v v^T, kept for the jackknife.
  std::vector<Matrix> partials(static_cast<std::size_t>(nblocks), Matrix(m, m));
#pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    Rng rng(seed_mix({seed, static_cast<std::uint64_t>(blk)}));
    std::vector<double> x(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(m));
    Matrix& part = partials[static_cast<std::size_t>(blk)];
    const std::int64_t begin = blk * kernels::kBlock;
    const std::int64_t end = std::min(begin + kernels::kBlock, mc_samples);
    for (std::int64_t t = begin; t < end; ++t) {
      input.sample(rng, x.data());
      gram_eval(theta0, phi, x.data(), v.data());
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) part(p, q) += v[static_cast<std::size_t>(p)] * v[static_cast<std::size_t>(q)];
    }
  }

  // Fixed-order pairwise reduction entry by entry.
  Matrix total(m, m);
  {
    std::vector<double> col(static_cast<std::size_t>(nblocks));
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        for (std::int64_t b = 0; b < nblocks; ++b)
          col[static_cast<std::size_t>(b)] = partials[static_cast<std::size_t>(b)](p, q);
        total(p, q) = pairwise_sum(col);
      }
  }

  for (int p = 0; p < m; ++p) {
    const double norm = std::sqrt(total(p, p) / static_cast<double>(mc_samples));
    if (norm < 1e-12)
      throw DegenerateFunctionError("gram_test_h3: family member " + std::to_string(p) +
                                    " has (numerically) zero norm");
  }

  GramReport rep;
  rep.function_count = m;
  rep.mc_samples = mc_samples;
  rep.seed = seed;
  std::vector<double> diag;
  rep.min_eigenvalue = min_eig_normalized(total, static_cast<double>(mc_samples), m, diag);

  // Normalized Gram matrix for the report.
  rep.matrix = Matrix(m, m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      rep.matrix(p, q) = (total(p, q) / static_cast<double>(mc_samples)) /
                         std::sqrt(diag[static_cast<std::size_t>(p)] * diag[static_cast<std::size_t>(q)]);

  // Delete-one-block jackknife on the minimum eigenvalue.
  if (nblocks > 1) {
    std::vector<double> loo(static_cast<std::size_t>(nblocks));
    Matrix reduced(m, m);
#pragma omp parallel for schedule(static) firstprivate(reduced)
    for (std::int64_t b = 0; b < nblocks; ++b) {
      const std::int64_t begin = b * kernels::kBlock;
      const std::int64_t len = std::min(begin + kernels::kBlock, mc_samples) - begin;
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q)
          reduced(p, q) = total(p, q) - partials[static_cast<std::size_t>(b)](p, q);
      std::vector<double> dg;
      loo[static_cast<std::size_t>(b)] =
          min_eig_normalized(reduced, static_cast<double>(mc_samples - len), m, dg);
    }
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(nblocks);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    rep.min_eig_se = std::sqrt(ss * static_cast<double>(nblocks - 1) / static_cast<double>(nblocks));
  }
  return rep;
}

}  // namespace mlpsel

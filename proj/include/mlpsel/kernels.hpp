#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mlpsel/dataset.hpp"
#include "mlpsel/mlp.hpp"
#include "mlpsel/numerics.hpp"
#include "mlpsel/rng.hpp"
#include "mlpsel/transfer.hpp"

// Data-parallel kernels. Every kernel partitions its index range into fixed
// blocks of kBlock elements, accumulates each block in index order, and
// reduces the per-block partials with a fixed-order pairwise sum. The block
// structure does not depend on the thread count, so the OpenMP versions are
// bit-identical to the serial reference implementations in
// mlpsel::kernels::serial (asserted by the test suite and compared by the
// bench target).
//
// Monte-Carlo kernels key the random stream of block b by seed_mix({seed, b}),
// never by thread id, for the same reason.

namespace mlpsel::kernels {

inline constexpr std::int64_t kBlock = 256;

struct RssGrad {
  double rss = 0.0;
  std::vector<double> grad;     // gradient of RSS in the flat order
  std::vector<double> gn_diag;  // Gauss-Newton diagonal: 2 * sum_t (dF_j)^2
};

// RSS, gradient, and the full Gauss-Newton matrix J^T J (packed lower
// triangle, row-major: entry (i, j <= i) at i(i+1)/2 + j).
struct RssGradGn {
  double rss = 0.0;
  std::vector<double> grad;
  std::vector<double> jtj;  // p(p+1)/2 entries
};

// Residual sum of squares of the network on the dataset.
double rss(std::span<const double> theta, int k, int d, const TransferFunction& phi,
           const Dataset& data);

// RSS plus its gradient and the Gauss-Newton diagonal, one pass.
RssGrad rss_grad(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                 const Dataset& data);

// RSS, gradient and packed J^T J, one pass; the optimizer's workhorse.
RssGradGn rss_grad_gn(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                      const Dataset& data);

namespace serial {
double rss(std::span<const double> theta, int k, int d, const TransferFunction& phi,
           const Dataset& data);
RssGrad rss_grad(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                 const Dataset& data);
RssGradGn rss_grad_gn(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                      const Dataset& data);
}  // namespace serial

namespace detail {

// Accumulates one block of RSS(+grad/diag) terms; shared by the serial and
// parallel variants so they agree bitwise.
void rss_block(std::span<const double> theta, int k, int d, const TransferFunction& phi,
               const Dataset& data, std::int64_t begin, std::int64_t end, double* out_rss);
void rss_grad_block(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                    const Dataset& data, std::int64_t begin, std::int64_t end, double* part,
                    std::vector<double>& phi_v, std::vector<double>& phi_g);
void rss_grad_gn_block(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                       const Dataset& data, std::int64_t begin, std::int64_t end, double* part,
                       std::vector<double>& jrow);

inline double reduce_blocks(std::span<const double> block_sums) { return pairwise_sum(block_sums); }

// Pairwise reduce column `c` of an nblocks x stride partial table.
inline double reduce_column(const std::vector<double>& partials, std::int64_t nblocks,
                            std::int64_t stride, std::int64_t c, std::vector<double>& tmp) {
  tmp.resize(static_cast<std::size_t>(nblocks));
  for (std::int64_t b = 0; b < nblocks; ++b)
    tmp[static_cast<std::size_t>(b)] = partials[static_cast<std::size_t>(b * stride + c)];
  return pairwise_sum(tmp);
}

}  // namespace detail

// Mean of f over n Monte-Carlo samples. f is called as f(rng, scratch) and
// must depend only on its arguments; scratch has scratch_dim doubles.
template <class F>
double mc_mean_impl(std::uint64_t seed, std::int64_t n, int scratch_dim, F&& f, bool parallel) {
  if (n < 1) throw InvalidInputError("Monte-Carlo sample count must be >= 1");
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> block_sums(static_cast<std::size_t>(nblocks));
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    Rng rng(seed_mix({seed, static_cast<std::uint64_t>(blk)}));
    std::vector<double> scratch(static_cast<std::size_t>(scratch_dim));
    const std::int64_t begin = blk * kBlock;
    const std::int64_t end = begin + kBlock < n ? begin + kBlock : n;
    double acc = 0.0;
    for (std::int64_t s = begin; s < end; ++s) acc += f(rng, scratch.data());
    block_sums[static_cast<std::size_t>(blk)] = acc;
  }
  return pairwise_sum(block_sums) / static_cast<double>(n);
}

template <class F>
double mc_mean(std::uint64_t seed, std::int64_t n, int scratch_dim, F&& f) {
  return mc_mean_impl(seed, n, scratch_dim, static_cast<F&&>(f), true);
}

// Vector-valued Monte-Carlo mean: f(rng, scratch, out) must add its sample
// contribution into out[0..dim).
template <class F>
std::vector<double> mc_mean_vec_impl(std::uint64_t seed, std::int64_t n, int dim, int scratch_dim,
                                     F&& f, bool parallel) {
  if (n < 1) throw InvalidInputError("Monte-Carlo sample count must be >= 1");
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partials(static_cast<std::size_t>(nblocks * dim), 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    Rng rng(seed_mix({seed, static_cast<std::uint64_t>(blk)}));
    std::vector<double> scratch(static_cast<std::size_t>(scratch_dim));
    double* part = partials.data() + static_cast<std::size_t>(blk * dim);
    const std::int64_t begin = blk * kBlock;
    const std::int64_t end = begin + kBlock < n ? begin + kBlock : n;
    for (std::int64_t s = begin; s < end; ++s) f(rng, scratch.data(), part);
  }
  std::vector<double> out(static_cast<std::size_t>(dim));
  std::vector<double> tmp;
  for (int c = 0; c < dim; ++c)
    out[static_cast<std::size_t>(c)] =
        detail::reduce_column(partials, nblocks, dim, c, tmp) / static_cast<double>(n);
  return out;
}

template <class F>
std::vector<double> mc_mean_vec(std::uint64_t seed, std::int64_t n, int dim, int scratch_dim,
                                F&& f) {
  return mc_mean_vec_impl(seed, n, dim, scratch_dim, static_cast<F&&>(f), true);
}

namespace serial {
template <class F>
double mc_mean(std::uint64_t seed, std::int64_t n, int scratch_dim, F&& f) {
  return mc_mean_impl(seed, n, scratch_dim, static_cast<F&&>(f), false);
}
template <class F>
std::vector<double> mc_mean_vec(std::uint64_t seed, std::int64_t n, int dim, int scratch_dim,
                                F&& f) {
  return mc_mean_vec_impl(seed, n, dim, scratch_dim, static_cast<F&&>(f), false);
}
}  // namespace serial

}  // namespace mlpsel::kernels

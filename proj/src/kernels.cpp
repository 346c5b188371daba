#include "mlpsel/kernels.hpp"

namespace mlpsel::kernels {

namespace detail {

void rss_block(std::span<const double> theta, int k, int d, const TransferFunction& phi,
               const Dataset& data, std::int64_t begin, std::int64_t end, double* out_rss) {
  const double beta = theta[0];
  const double* a = theta.data() + 1;
  const double* b = theta.data() + 1 + k;
  const double* w = theta.data() + 1 + 2 * k;
  const double* xs = data.xs_flat().data();
  const double* ys = data.ys().data();
  double acc = 0.0;
  for (std::int64_t t = begin; t < end; ++t) {
    const double* x = xs + static_cast<std::size_t>(t) * d;
    double f = beta;
    for (int i = 0; i < k; ++i) {
      double u = b[i];
      const double* wi = w + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) u += wi[j] * x[j];
      f += a[i] * phi.value(u);
    }
    const double r = ys[t] - f;
    acc += r * r;
  }
  *out_rss = acc;
}

void rss_grad_block(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                    const Dataset& data, std::int64_t begin, std::int64_t end, double* part,
                    std::vector<double>& phi_v, std::vector<double>& phi_g) {
  const int p = flat::dim(k, d);
  const double beta = theta[0];
  const double* a = theta.data() + 1;
  const double* b = theta.data() + 1 + k;
  const double* w = theta.data() + 1 + 2 * k;
  const double* xs = data.xs_flat().data();
  const double* ys = data.ys().data();
  double* grad = part + 1;
  double* diag = part + 1 + p;
  for (std::int64_t t = begin; t < end; ++t) {
    const double* x = xs + static_cast<std::size_t>(t) * d;
    double f = beta;
    for (int i = 0; i < k; ++i) {
      double u = b[i];
      const double* wi = w + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) u += wi[j] * x[j];
      phi.value_d1(u, phi_v[static_cast<std::size_t>(i)], phi_g[static_cast<std::size_t>(i)]);
      f += a[i] * phi_v[static_cast<std::size_t>(i)];
    }
    const double r = ys[t] - f;
    part[0] += r * r;
    const double c = -2.0 * r;
    grad[0] += c;  // d/dbeta
    diag[0] += 2.0;
    for (int i = 0; i < k; ++i) {
      const double dfa = phi_v[static_cast<std::size_t>(i)];
      const double dfb = a[i] * phi_g[static_cast<std::size_t>(i)];
      grad[1 + i] += c * dfa;
      diag[1 + i] += 2.0 * dfa * dfa;
      grad[1 + k + i] += c * dfb;
      diag[1 + k + i] += 2.0 * dfb * dfb;
      double* gw = grad + 1 + 2 * k + static_cast<std::size_t>(i) * d;
      double* dw = diag + 1 + 2 * k + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) {
        const double dfw = dfb * x[j];
        gw[j] += c * dfw;
        dw[j] += 2.0 * dfw * dfw;
      }
    }
  }
}

void rss_grad_gn_block(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                       const Dataset& data, std::int64_t begin, std::int64_t end, double* part,
                       std::vector<double>& jrow) {
  const int p = flat::dim(k, d);
  const double beta = theta[0];
  const double* a = theta.data() + 1;
  const double* b = theta.data() + 1 + k;
  const double* w = theta.data() + 1 + 2 * k;
  const double* xs = data.xs_flat().data();
  const double* ys = data.ys().data();
  double* grad = part + 1;
  double* jtj = part + 1 + p;
  for (std::int64_t t = begin; t < end; ++t) {
    const double* x = xs + static_cast<std::size_t>(t) * d;
    double f = beta;
    jrow[0] = 1.0;
    for (int i = 0; i < k; ++i) {
      double u = b[i];
      const double* wi = w + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) u += wi[j] * x[j];
      double v, g;
      phi.value_d1(u, v, g);
      f += a[i] * v;
      jrow[static_cast<std::size_t>(1 + i)] = v;
      const double ag = a[i] * g;
      jrow[static_cast<std::size_t>(1 + k + i)] = ag;
      for (int j = 0; j < d; ++j) jrow[static_cast<std::size_t>(1 + 2 * k + i * d + j)] = ag * x[j];
    }
    const double r = ys[t] - f;
    part[0] += r * r;
    const double c = -2.0 * r;
    std::size_t pos = 0;
    for (int i = 0; i < p; ++i) {
      const double ji = jrow[static_cast<std::size_t>(i)];
      grad[i] += c * ji;
      for (int j = 0; j <= i; ++j) jtj[pos++] += ji * jrow[static_cast<std::size_t>(j)];
    }
  }
}

}  // namespace detail

namespace {

double rss_impl(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                const Dataset& data, bool parallel) {
  const std::int64_t n = data.n();
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> block_sums(static_cast<std::size_t>(nblocks));
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    const std::int64_t begin = blk * kBlock;
    const std::int64_t end = begin + kBlock < n ? begin + kBlock : n;
    detail::rss_block(theta, k, d, phi, data, begin, end,
                      &block_sums[static_cast<std::size_t>(blk)]);
  }
  return pairwise_sum(block_sums);
}

RssGrad rss_grad_impl(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                      const Dataset& data, bool parallel) {
  const std::int64_t n = data.n();
  const int p = flat::dim(k, d);
  const std::int64_t stride = 1 + 2 * static_cast<std::int64_t>(p);
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partials(static_cast<std::size_t>(nblocks * stride), 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    std::vector<double> phi_v(static_cast<std::size_t>(k)), phi_g(static_cast<std::size_t>(k));
    const std::int64_t begin = blk * kBlock;
    const std::int64_t end = begin + kBlock < n ? begin + kBlock : n;
    detail::rss_grad_block(theta, k, d, phi, data, begin, end,
                           partials.data() + static_cast<std::size_t>(blk * stride), phi_v, phi_g);
  }
  RssGrad out;
  out.grad.resize(static_cast<std::size_t>(p));
  out.gn_diag.resize(static_cast<std::size_t>(p));
  std::vector<double> tmp;
  out.rss = detail::reduce_column(partials, nblocks, stride, 0, tmp);
  for (int j = 0; j < p; ++j) {
    out.grad[static_cast<std::size_t>(j)] = detail::reduce_column(partials, nblocks, stride, 1 + j, tmp);
    out.gn_diag[static_cast<std::size_t>(j)] =
        detail::reduce_column(partials, nblocks, stride, 1 + p + j, tmp);
  }
  return out;
}

RssGradGn rss_grad_gn_impl(std::span<const double> theta, int k, int d,
                           const TransferFunction& phi, const Dataset& data, bool parallel) {
  const std::int64_t n = data.n();
  const int p = flat::dim(k, d);
  const int tri = p * (p + 1) / 2;
  const std::int64_t stride = 1 + p + tri;
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partials(static_cast<std::size_t>(nblocks * stride), 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    std::vector<double> jrow(static_cast<std::size_t>(p));
    const std::int64_t begin = blk * kBlock;
    const std::int64_t end = begin + kBlock < n ? begin + kBlock : n;
    detail::rss_grad_gn_block(theta, k, d, phi, data, begin, end,
                              partials.data() + static_cast<std::size_t>(blk * stride), jrow);
  }
  RssGradGn out;
  out.grad.resize(static_cast<std::size_t>(p));
  out.jtj.resize(static_cast<std::size_t>(tri));
  std::vector<double> tmp;
  out.rss = detail::reduce_column(partials, nblocks, stride, 0, tmp);
  for (int j = 0; j < p; ++j)
    out.grad[static_cast<std::size_t>(j)] = detail::reduce_column(partials, nblocks, stride, 1 + j, tmp);
  for (int e = 0; e < tri; ++e)
    out.jtj[static_cast<std::size_t>(e)] =
        detail::reduce_column(partials, nblocks, stride, 1 + p + e, tmp);
  return out;
}

}  // namespace

double rss(std::span<const double> theta, int k, int d, const TransferFunction& phi,
           const Dataset& data) {
  return rss_impl(theta, k, d, phi, data, true);
}

RssGradGn rss_grad_gn(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                      const Dataset& data) {
  return rss_grad_gn_impl(theta, k, d, phi, data, true);
}

RssGrad rss_grad(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                 const Dataset& data) {
  return rss_grad_impl(theta, k, d, phi, data, true);
}

namespace serial {

double rss(std::span<const double> theta, int k, int d, const TransferFunction& phi,
           const Dataset& data) {
  return rss_impl(theta, k, d, phi, data, false);
}

RssGrad rss_grad(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                 const Dataset& data) {
  return rss_grad_impl(theta, k, d, phi, data, false);
}

RssGradGn rss_grad_gn(std::span<const double> theta, int k, int d, const TransferFunction& phi,
                      const Dataset& data) {
  return rss_grad_gn_impl(theta, k, d, phi, data, false);
}

}  // namespace serial

}  // namespace mlpsel::kernels

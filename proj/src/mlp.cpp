#include "mlpsel/mlp.hpp"

#include <string>

namespace mlpsel {

void MlpParams::validate() const {
  if (units.empty()) throw ShapeError("network needs at least one hidden unit");
  const std::size_t d0 = units.front().w.size();
  if (d0 == 0) throw ShapeError("input dimension must be >= 1");
  for (const auto& u : units) {
    if (u.w.size() != d0)
      throw ShapeError("all hidden units must share the same input dimension");
  }
}

std::vector<double> MlpParams::to_flat() const {
  validate();
  const int kk = k();
  const int dd = d();
  std::vector<double> f(static_cast<std::size_t>(flat::dim(kk, dd)));
  f[flat::idx_beta()] = beta;
  for (int i = 0; i < kk; ++i) {
    f[flat::idx_a(kk, i)] = units[i].a;
    f[flat::idx_b(kk, i)] = units[i].b;
    for (int j = 0; j < dd; ++j) f[flat::idx_w(kk, dd, i, j)] = units[i].w[j];
  }
  return f;
}

MlpParams MlpParams::from_flat(std::span<const double> f, int k, int d) {
  if (k < 1 || d < 1) throw ShapeError("from_flat: need k >= 1 and d >= 1");
  if (static_cast<int>(f.size()) != flat::dim(k, d))
    throw ShapeError("from_flat: expected " + std::to_string(flat::dim(k, d)) +
                     " coordinates, got " + std::to_string(f.size()));
  MlpParams p;
  p.beta = f[flat::idx_beta()];
  p.units.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    auto& u = p.units[static_cast<std::size_t>(i)];
    u.a = f[flat::idx_a(k, i)];
    u.b = f[flat::idx_b(k, i)];
    u.w.assign(f.begin() + flat::idx_w(k, d, i, 0), f.begin() + flat::idx_w(k, d, i, 0) + d);
  }
  return p;
}

namespace flat {

double forward(std::span<const double> theta, int k, int d, const TransferFunction& phi,
               const double* x) {
  double acc = theta[idx_beta()];
  const double* a = theta.data() + 1;
  const double* b = theta.data() + 1 + k;
  const double* w = theta.data() + 1 + 2 * k;
  for (int i = 0; i < k; ++i) {
    double u = b[i];
    const double* wi = w + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) u += wi[j] * x[j];
    acc += a[i] * phi.value(u);
  }
  return acc;
}

}  // namespace flat

namespace {

void check_x(const MlpParams& theta, std::span<const double> x) {
  theta.validate();
  if (static_cast<int>(x.size()) != theta.d())
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(theta.d()));
}

}  // namespace

double forward(const MlpParams& theta, const TransferFunction& phi, std::span<const double> x) {
  check_x(theta, x);
  double acc = theta.beta;
  for (const auto& u : theta.units) {
    double z = u.b;
    for (std::size_t j = 0; j < u.w.size(); ++j) z += u.w[j] * x[j];
    acc += u.a * phi.value(z);
  }
  return acc;
}

std::vector<double> grad_params(const MlpParams& theta, const TransferFunction& phi,
                                std::span<const double> x) {
  check_x(theta, x);
  const int k = theta.k();
  const int d = theta.d();
  std::vector<double> g(static_cast<std::size_t>(flat::dim(k, d)), 0.0);
  g[flat::idx_beta()] = 1.0;
  for (int i = 0; i < k; ++i) {
    const auto& u = theta.units[static_cast<std::size_t>(i)];
    double z = u.b;
    for (int j = 0; j < d; ++j) z += u.w[j] * x[j];
    double v, dv;
    phi.value_d1(z, v, dv);
    g[flat::idx_a(k, i)] = v;
    g[flat::idx_b(k, i)] = u.a * dv;
    for (int j = 0; j < d; ++j) g[flat::idx_w(k, d, i, j)] = u.a * dv * x[j];
  }
  return g;
}

Matrix hessian_params(const MlpParams& theta, const TransferFunction& phi,
                      std::span<const double> x) {
  check_x(theta, x);
  const int k = theta.k();
  const int d = theta.d();
  const int p = flat::dim(k, d);
  Matrix h(p, p);
  // F is affine in beta and in each a_i, and units do not interact, so the
  // only nonzero blocks are per-unit (a_i,b_i,w_i) crosses and (b_i,w_i)
  // seconds.
  for (int i = 0; i < k; ++i) {
    const auto& u = theta.units[static_cast<std::size_t>(i)];
    double z = u.b;
    for (int j = 0; j < d; ++j) z += u.w[j] * x[j];
    const double p1 = phi.d1(z);
    const double p2 = phi.d2(z);
    const int ia = flat::idx_a(k, i);
    const int ib = flat::idx_b(k, i);
    h(ia, ib) = h(ib, ia) = p1;
    h(ib, ib) = u.a * p2;
    for (int j = 0; j < d; ++j) {
      const int iw = flat::idx_w(k, d, i, j);
      h(ia, iw) = h(iw, ia) = p1 * x[j];
      h(ib, iw) = h(iw, ib) = u.a * p2 * x[j];
      for (int l = 0; l <= j; ++l) {
        const int il = flat::idx_w(k, d, i, l);
        h(iw, il) = h(il, iw) = u.a * p2 * x[j] * x[l];
      }
    }
  }
  return h;
}

}  // namespace mlpsel

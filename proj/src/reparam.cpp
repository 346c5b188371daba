#include "mlpsel/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlpsel {

namespace {

double unit_dist(double b1, std::span<const double> w1, double b2, std::span<const double> w2) {
  double s = (b1 - b2) * (b1 - b2);
  for (std::size_t j = 0; j < w1.size(); ++j) s += (w1[j] - w2[j]) * (w1[j] - w2[j]);
  return std::sqrt(s);
}

}  // namespace

int ReparamDecomposition::cluster_of(int p) const {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (p < t[i]) return static_cast<int>(i);
  throw InvalidInputError("cluster_of: index is not a matched unit");
}

std::vector<double> ReparamDecomposition::phi_flat() const {
  const int m = matched();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(phi_dim()));
  out.push_back(beta);
  for (int p = 0; p < m; ++p) out.push_back(b[static_cast<std::size_t>(p)]);
  for (int p = 0; p < m; ++p)
    out.insert(out.end(), w[static_cast<std::size_t>(p)].begin(), w[static_cast<std::size_t>(p)].end());
  out.insert(out.end(), s.begin(), s.end());
  for (const auto& u : extra) out.push_back(u.a);
  return out;
}

void ReparamDecomposition::set_phi(std::span<const double> phi) {
  if (static_cast<int>(phi.size()) != phi_dim())
    throw InvalidDecompositionError("set_phi: expected " + std::to_string(phi_dim()) +
                                    " coordinates, got " + std::to_string(phi.size()));
  const int m = matched();
  std::size_t pos = 0;
  beta = phi[pos++];
  for (int p = 0; p < m; ++p) b[static_cast<std::size_t>(p)] = phi[pos++];
  for (int p = 0; p < m; ++p)
    for (int j = 0; j < d; ++j) w[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)] = phi[pos++];
  for (int i = 0; i < k0; ++i) s[static_cast<std::size_t>(i)] = phi[pos++];
  for (auto& u : extra) u.a = phi[pos++];
}

ReparamDecomposition decompose(const MlpParams& theta, const MlpParams& theta0,
                               double cluster_tol) {
  theta.validate();
  theta0.validate();
  if (theta.d() != theta0.d()) throw ShapeError("decompose: input dimensions differ");
  if (theta.k() < theta0.k())
    throw InvalidInputError("decompose: theta must have at least as many units as theta0");
  if (!(cluster_tol > 0.0)) throw InvalidInputError("decompose: cluster_tol must be > 0");

  const int k0 = theta0.k();
  const int k = theta.k();
  const int d = theta.d();

  for (int i = 0; i < k0; ++i)
    for (int j = i + 1; j < k0; ++j) {
      const auto& ui = theta0.units[static_cast<std::size_t>(i)];
      const auto& uj = theta0.units[static_cast<std::size_t>(j)];
      if (unit_dist(ui.b, ui.w, uj.b, uj.w) < 2.0 * cluster_tol)
        throw AmbiguousClusterError("reference units " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are closer than 2*cluster_tol");
    }

  ReparamDecomposition dec;
  dec.k0 = k0;
  dec.k = k;
  dec.d = d;

  std::vector<std::vector<int>> clusters(static_cast<std::size_t>(k0));
  std::vector<int> unmatched;
  for (int j = 0; j < k; ++j) {
    const auto& u = theta.units[static_cast<std::size_t>(j)];
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    int within_tol = 0;
    for (int i = 0; i < k0; ++i) {
      const auto& u0 = theta0.units[static_cast<std::size_t>(i)];
      const double dist = unit_dist(u.b, u.w, u0.b, u0.w);
      if (dist <= cluster_tol) ++within_tol;
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    if (best_dist <= cluster_tol) {
      clusters[static_cast<std::size_t>(best)].push_back(j);
      if (within_tol > 1)
        dec.warnings.push_back("unit " + std::to_string(j) +
                               " lies within cluster_tol of several reference units; assigned "
                               "to the nearest");
    } else {
      unmatched.push_back(j);
    }
  }

  dec.t.resize(static_cast<std::size_t>(k0));
  int cum = 0;
  for (int i = 0; i < k0; ++i) {
    if (clusters[static_cast<std::size_t>(i)].empty())
      throw InvalidDecompositionError("reference unit " + std::to_string(i) +
                                      " attracts no unit of theta within cluster_tol");
    cum += static_cast<int>(clusters[static_cast<std::size_t>(i)].size());
    dec.t[static_cast<std::size_t>(i)] = cum;
  }

  dec.beta = theta.beta;
  dec.a0.resize(static_cast<std::size_t>(k0));
  dec.s.resize(static_cast<std::size_t>(k0));
  for (int i = 0; i < k0; ++i) {
    dec.a0[static_cast<std::size_t>(i)] = theta0.units[static_cast<std::size_t>(i)].a;
    double sum_a = 0.0;
    for (int j : clusters[static_cast<std::size_t>(i)]) sum_a += theta.units[static_cast<std::size_t>(j)].a;
    dec.s[static_cast<std::size_t>(i)] = sum_a - dec.a0[static_cast<std::size_t>(i)];

    for (int j : clusters[static_cast<std::size_t>(i)]) {
      const auto& u = theta.units[static_cast<std::size_t>(j)];
      dec.perm.push_back(j);
      dec.b.push_back(u.b);
      dec.w.push_back(u.w);
      if (sum_a != 0.0) {
        dec.q.push_back(u.a / sum_a);
      } else if (u.a == 0.0) {
        dec.q.push_back(1.0 / static_cast<double>(clusters[static_cast<std::size_t>(i)].size()));
      } else {
        throw InvalidDecompositionError(
            "cluster " + std::to_string(i) +
            " has output weights cancelling to zero; the mixing proportions are undefined");
      }
    }
  }
  for (int j : unmatched) {
    dec.perm.push_back(j);
    dec.extra.push_back(theta.units[static_cast<std::size_t>(j)]);
  }

  // Coordinate count is conserved: the q's add one slot per matched unit and
  // the per-cluster sum constraints remove one per cluster.
  if (dec.phi_dim() + dec.psi_dim() != theta.dim() + k0)
    throw InvalidDecompositionError("decompose: dimension bookkeeping failed");
  return dec;
}

MlpParams reconstruct(const ReparamDecomposition& dec) {
  const int m = dec.matched();
  if (static_cast<int>(dec.q.size()) != m || static_cast<int>(dec.b.size()) != m ||
      static_cast<int>(dec.w.size()) != m || static_cast<int>(dec.s.size()) != dec.k0 ||
      static_cast<int>(dec.extra.size()) != dec.k - m ||
      static_cast<int>(dec.perm.size()) != dec.k)
    throw InvalidDecompositionError("reconstruct: inconsistent block sizes");
  for (int i = 0; i < dec.k0; ++i) {
    const int begin = i == 0 ? 0 : dec.t[static_cast<std::size_t>(i - 1)];
    const int end = dec.t[static_cast<std::size_t>(i)];
    double sum_q = 0.0;
    for (int p = begin; p < end; ++p) sum_q += dec.q[static_cast<std::size_t>(p)];
    if (std::abs(sum_q - 1.0) > 1e-12)
      throw InvalidDecompositionError("reconstruct: cluster " + std::to_string(i) +
                                      " mixing proportions sum to " + std::to_string(sum_q));
  }

  std::vector<HiddenUnit> permuted(static_cast<std::size_t>(dec.k));
  for (int i = 0; i < dec.k0; ++i) {
    const int begin = i == 0 ? 0 : dec.t[static_cast<std::size_t>(i - 1)];
    const int end = dec.t[static_cast<std::size_t>(i)];
    const double total = dec.s[static_cast<std::size_t>(i)] + dec.a0[static_cast<std::size_t>(i)];
    for (int p = begin; p < end; ++p) {
      HiddenUnit u;
      u.a = dec.q[static_cast<std::size_t>(p)] * total;
      u.b = dec.b[static_cast<std::size_t>(p)];
      u.w = dec.w[static_cast<std::size_t>(p)];
      permuted[static_cast<std::size_t>(p)] = std::move(u);
    }
  }
  for (int p = m; p < dec.k; ++p) permuted[static_cast<std::size_t>(p)] = dec.extra[static_cast<std::size_t>(p - m)];

  MlpParams out;
  out.beta = dec.beta;
  out.units.resize(static_cast<std::size_t>(dec.k));
  for (int p = 0; p < dec.k; ++p)
    out.units[static_cast<std::size_t>(dec.perm[static_cast<std::size_t>(p)])] = permuted[static_cast<std::size_t>(p)];
  return out;
}

std::vector<double> phi0_reference(const MlpParams& theta0, const std::vector<int>& t, int k) {
  theta0.validate();
  const int k0 = theta0.k();
  const int d = theta0.d();
  if (static_cast<int>(t.size()) != k0)
    throw InvalidInputError("phi0_reference: t must have one entry per reference unit");
  int prev = 0;
  for (int i = 0; i < k0; ++i) {
    if (t[static_cast<std::size_t>(i)] <= prev)
      throw InvalidInputError("phi0_reference: t must be strictly increasing from 0");
    prev = t[static_cast<std::size_t>(i)];
  }
  if (prev > k) throw InvalidInputError("phi0_reference: t exceeds the unit count");

  const int m = prev;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(1 + m * (1 + d) + k0 + (k - m)));
  out.push_back(theta0.beta);
  for (int i = 0; i < k0; ++i) {
    const int width = t[static_cast<std::size_t>(i)] - (i == 0 ? 0 : t[static_cast<std::size_t>(i - 1)]);
    for (int r = 0; r < width; ++r) out.push_back(theta0.units[static_cast<std::size_t>(i)].b);
  }
  for (int i = 0; i < k0; ++i) {
    const int width = t[static_cast<std::size_t>(i)] - (i == 0 ? 0 : t[static_cast<std::size_t>(i - 1)]);
    for (int r = 0; r < width; ++r)
      out.insert(out.end(), theta0.units[static_cast<std::size_t>(i)].w.begin(),
                 theta0.units[static_cast<std::size_t>(i)].w.end());
  }
  out.insert(out.end(), static_cast<std::size_t>(k0), 0.0);       // s slots
  out.insert(out.end(), static_cast<std::size_t>(k - m), 0.0);    // extra output weights
  return out;
}

ExpansionPoint expansion_at(const ReparamDecomposition& dec, const MlpParams& theta0,
                            const TransferFunction& phi, const NoiseModel& noise,
                            std::span<const double> x, double y) {
  if (!(noise.sigma2 > 0.0)) throw InvalidNoiseError("expansion needs sigma2 > 0");
  if (theta0.k() != dec.k0 || theta0.d() != dec.d)
    throw ShapeError("expansion_at: decomposition does not match theta0");
  if (static_cast<int>(x.size()) != dec.d) throw ShapeError("expansion_at: x has wrong dimension");

  const int k0 = dec.k0;
  // Reference-unit activations.
  double f0 = theta0.beta;
  std::vector<double> phi0(static_cast<std::size_t>(k0)), dphi0(static_cast<std::size_t>(k0)),
      ddphi0(static_cast<std::size_t>(k0));
  for (int i = 0; i < k0; ++i) {
    const auto& u0 = theta0.units[static_cast<std::size_t>(i)];
    double z = u0.b;
    for (int j = 0; j < dec.d; ++j) z += u0.w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    phi0[static_cast<std::size_t>(i)] = phi.value(z);
    dphi0[static_cast<std::size_t>(i)] = phi.d1(z);
    ddphi0[static_cast<std::size_t>(i)] = phi.d2(z);
    f0 += u0.a * phi0[static_cast<std::size_t>(i)];
  }
  const double e = (y - f0) / noise.sigma2;

  // First and second directional derivatives of the network output in phi.
  double g1 = dec.beta - theta0.beta;
  double g2 = 0.0;
  for (int i = 0; i < k0; ++i) {
    const int begin = i == 0 ? 0 : dec.t[static_cast<std::size_t>(i - 1)];
    const int end = dec.t[static_cast<std::size_t>(i)];
    const double a0i = dec.a0[static_cast<std::size_t>(i)];
    const auto& u0 = theta0.units[static_cast<std::size_t>(i)];
    g1 += dec.s[static_cast<std::size_t>(i)] * phi0[static_cast<std::size_t>(i)];
    double lin = 0.0;   // sum_j q_j * delta_j
    double quad = 0.0;  // sum_j q_j * delta_j^2
    for (int p = begin; p < end; ++p) {
      double delta = dec.b[static_cast<std::size_t>(p)] - u0.b;
      for (int j = 0; j < dec.d; ++j)
        delta += (dec.w[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)] -
                  u0.w[static_cast<std::size_t>(j)]) *
                 x[static_cast<std::size_t>(j)];
      const double qj = dec.q[static_cast<std::size_t>(p)];
      lin += qj * delta;
      quad += qj * delta * delta;
    }
    g1 += a0i * dphi0[static_cast<std::size_t>(i)] * lin;
    g2 += a0i * ddphi0[static_cast<std::size_t>(i)] * quad +
          2.0 * dec.s[static_cast<std::size_t>(i)] * dphi0[static_cast<std::size_t>(i)] * lin;
  }
  for (const auto& u : dec.extra) {
    double z = u.b;
    for (int j = 0; j < dec.d; ++j) z += u.w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    g1 += u.a * phi.value(z);
  }

  ExpansionPoint out;
  out.first = e * g1;
  out.second = (e * e - 1.0 / noise.sigma2) * g1 * g1 + e * g2;
  out.ratio_exact = density_ratio(reconstruct(dec), theta0, phi, noise, x, y);
  return out;
}

double expansion_l2_distance(const ReparamDecomposition& dec, const MlpParams& theta0,
                             const TransferFunction& phi, const NoiseModel& noise,
                             const MonteCarloQuadrature& quad) {
  return ratio_l2_norm(reconstruct(dec), theta0, phi, noise, quad);
}

ExpansionTerms expansion_terms(const ReparamDecomposition& dec, const MlpParams& theta0,
                               const TransferFunction& phi, const NoiseModel& noise,
                               std::span<const double> x, double y,
                               const MonteCarloQuadrature& quad) {
  const ExpansionPoint p = expansion_at(dec, theta0, phi, noise, x, y);
  ExpansionTerms out;
  out.first = p.first;
  out.second = p.second;
  out.ratio_exact = p.ratio_exact;
  out.D = expansion_l2_distance(dec, theta0, phi, noise, quad);
  return out;
}

}  // namespace mlpsel

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mlpsel/likelihood.hpp"
#include "mlpsel/mlp.hpp"
#include "mlpsel/sampling.hpp"

namespace mlpsel {

// Split of a k-unit parameter theta relative to a reference k0-unit network
// theta0 into an identifiable block phi and an unidentifiable block psi.
//
// Units of theta matched (within a tolerance on (b, w)) to reference unit i
// form contiguous cluster i after the stored permutation; unmatched units go
// last. Per cluster, s_i is the deviation of the total output weight from
// a0_i and q_j are the mixing proportions (summing to one per cluster):
//   phi = (beta, b_1..b_m, w_1..w_m, s_1..s_k0, a_{m+1}..a_k)   [m = t_k0]
//   psi = (q_1..q_m, b_{m+1}..b_k, w_{m+1}..w_k)
struct ReparamDecomposition {
  int k0 = 0, k = 0, d = 0;
  std::vector<int> t;     // cluster boundaries: cluster i holds permuted units [t_{i-1}, t_i)
  std::vector<int> perm;  // permuted position p holds original unit perm[p]

  double beta = 0.0;
  std::vector<double> b;                // matched units, permuted order
  std::vector<std::vector<double>> w;   // matched units
  std::vector<double> q;                // psi: mixing proportions
  std::vector<double> s;                // per-cluster total-weight deviation
  std::vector<double> a0;               // reference output weights (for reconstruction)
  std::vector<HiddenUnit> extra;        // unmatched units: a is phi, (b, w) is psi
  std::vector<std::string> warnings;

  int matched() const { return t.empty() ? 0 : t.back(); }
  int cluster_of(int p) const;  // cluster index of matched unit p

  int phi_dim() const { return 1 + matched() * (1 + d) + k0 + (k - matched()); }
  int psi_dim() const { return matched() + (k - matched()) * (1 + d); }

  // Identifiable block as a flat vector:
  //   (beta, b_1..b_m, w_1..w_m flattened, s_1..s_k0, extra a's).
  std::vector<double> phi_flat() const;
  void set_phi(std::span<const double> phi);
};

// Clusters theta's units around theta0's. Throws AmbiguousClusterError when
// two reference units are closer than 2*cluster_tol, and
// InvalidDecompositionError when a reference unit attracts no unit of theta
// (the split requires every cluster nonempty) or a cluster's output weights
// cancel exactly.
ReparamDecomposition decompose(const MlpParams& theta, const MlpParams& theta0,
                               double cluster_tol);

// Inverse map: a_j = q_j * (s_i + a0_i) inside cluster i, unmatched units
// verbatim, original unit order restored.
MlpParams reconstruct(const ReparamDecomposition& dec);

// The phi value that realizes the reference function for a given t:
//   (beta0, b0 blocks repeated per cluster width, w0 blocks likewise,
//    0 for the k0 s-slots, 0 for the k - t_k0 extra output weights).
std::vector<double> phi0_reference(const MlpParams& theta0, const std::vector<int>& t, int k);

// Likelihood-ratio expansion around phi0 with psi held fixed, evaluated at
// one observation z = (x, y):
//   ratio ~= 1 + first + second/2,
// first  = e(z) * g1, second = (e(z)^2 - 1/sigma2) * g1^2 + e(z) * g2, where
// g1/g2 are the first/second directional derivatives of the network output in
// phi and e(z) = (y - F_theta0(x)) / sigma2.
struct ExpansionPoint {
  double first = 0.0;
  double second = 0.0;
  double ratio_exact = 1.0;
};

ExpansionPoint expansion_at(const ReparamDecomposition& dec, const MlpParams& theta0,
                            const TransferFunction& phi, const NoiseModel& noise,
                            std::span<const double> x, double y);

// Monte-Carlo estimate of D = || f_(phi,psi)/f - 1 ||_2 under the true model.
double expansion_l2_distance(const ReparamDecomposition& dec, const MlpParams& theta0,
                             const TransferFunction& phi, const NoiseModel& noise,
                             const MonteCarloQuadrature& quad);

struct ExpansionTerms {
  double first = 0.0;
  double second = 0.0;
  double D = 0.0;
  double ratio_exact = 1.0;
};

ExpansionTerms expansion_terms(const ReparamDecomposition& dec, const MlpParams& theta0,
                               const TransferFunction& phi, const NoiseModel& noise,
                               std::span<const double> x, double y,
                               const MonteCarloQuadrature& quad);

}  // namespace mlpsel

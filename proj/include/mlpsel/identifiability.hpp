#pragma once

#include <cstdint>
#include <vector>

#include "mlpsel/dataset.hpp"
#include "mlpsel/mlp.hpp"
#include "mlpsel/numerics.hpp"
#include "mlpsel/sampling.hpp"

namespace mlpsel {

// Function-preserving normal form removing the known symmetries so fitted and
// reference networks can be compared coordinate-wise: units with b < 0 (tie:
// first nonzero weight coordinate < 0) are sign-flipped -- for tanh via
// oddness, for logistic via a*phi(z) = a - a*phi(-z) with the constant
// absorbed into beta -- then units are sorted lexicographically by (b, w, a).
MlpParams canonicalize(const MlpParams& theta, const TransferFunction& phi);

// Empirical sixth absolute moment (1/n) sum ||x_t||^6 with a crude stability
// flag: the first-half and second-half estimates must agree within a factor
// of two. Heavy-tailed inputs (infinite sixth moment) typically trip it.
struct MomentReport {
  double sixth_moment = 0.0;
  double first_half = 0.0;
  double second_half = 0.0;
  bool stable = true;
};

MomentReport moment_diagnostic(std::span<const double> xs_flat, std::int64_t n, int d);
MomentReport moment_diagnostic(const Dataset& data);

// Monte-Carlo Gram matrix of the per-unit derivative family
//   { x_l x_m phi''(b0_i + w0_i.x) } (l <= m),  phi''(b0_i + w0_i.x),
//   { x_m phi'(b0_i + w0_i.x) },                phi'(b0_i + w0_i.x)
// in L2(q): pairwise inner products estimated over x ~ input, each function
// normalized to unit estimated norm. A minimum eigenvalue clearly above zero
// supports linear independence of the family; duplicated units drive it to
// zero. min_eig_se is a delete-one-block jackknife standard error.
struct GramReport {
  Matrix matrix;
  double min_eigenvalue = 0.0;
  double min_eig_se = 0.0;
  int function_count = 0;
  std::int64_t mc_samples = 0;
  std::uint64_t seed = 0;
};

inline int gram_function_count(int k0, int d) { return k0 * (d * (d + 1) / 2 + 1 + d + 1); }

GramReport gram_test_h3(const MlpParams& theta0, const TransferFunction& phi,
                        const InputDistribution& input, std::int64_t mc_samples,
                        std::uint64_t seed);

}  // namespace mlpsel

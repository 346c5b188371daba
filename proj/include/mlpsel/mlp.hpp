#pragma once

#include <span>
#include <vector>

#include "mlpsel/errors.hpp"
#include "mlpsel/numerics.hpp"
#include "mlpsel/transfer.hpp"

namespace mlpsel {

// One hidden unit a * phi(b + w.x).
struct HiddenUnit {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> w;
};

// Full parameter vector of a k-unit one-hidden-layer network
//   F(x) = beta + sum_i a_i phi(b_i + w_i . x).
//
// The flat serialization order is fixed as
//   (beta, a_1..a_k, b_1..b_k, w_11..w_1d, ..., w_k1..w_kd)
// and shared by the optimizer, the reparameterization and the file format.
class MlpParams {
 public:
  double beta = 0.0;
  std::vector<HiddenUnit> units;

  MlpParams() = default;
  MlpParams(double beta_, std::vector<HiddenUnit> units_) : beta(beta_), units(std::move(units_)) {}

  int k() const { return static_cast<int>(units.size()); }
  int d() const { return units.empty() ? 0 : static_cast<int>(units.front().w.size()); }
  int dim() const { return 2 * k() + 1 + k() * d(); }

  // Throws ShapeError unless k >= 1 and all units share the same dimension.
  void validate() const;

  std::vector<double> to_flat() const;
  static MlpParams from_flat(std::span<const double> flat, int k, int d);
};

// Flat-layout offsets (used by the kernels and the optimizer, which work on
// raw vectors in the serialization order).
namespace flat {
inline int idx_beta() { return 0; }
inline int idx_a(int /*k*/, int i) { return 1 + i; }
inline int idx_b(int k, int i) { return 1 + k + i; }
inline int idx_w(int k, int d, int i, int j) { return 1 + 2 * k + i * d + j; }
inline int dim(int k, int d) { return 2 * k + 1 + k * d; }

double forward(std::span<const double> theta, int k, int d, const TransferFunction& phi,
               const double* x);
}  // namespace flat

// F_theta(x). Throws ShapeError on dimension mismatch.
double forward(const MlpParams& theta, const TransferFunction& phi, std::span<const double> x);

// dF/dtheta in the flat order (dimension 2k+1+kd).
std::vector<double> grad_params(const MlpParams& theta, const TransferFunction& phi,
                                std::span<const double> x);

// Symmetric matrix of second partials d2F/dtheta2 in the flat order.
Matrix hessian_params(const MlpParams& theta, const TransferFunction& phi,
                      std::span<const double> x);

}  // namespace mlpsel

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlpsel/dataset.hpp"
#include "mlpsel/likelihood.hpp"
#include "mlpsel/mlp.hpp"

namespace mlpsel {

// Compact parameter set for k units: every coordinate of (beta, a, b, w) in
// [-B, B] and ||w_i||_2 >= eta for every unit. eta removes the constant-unit
// degeneracy; the box keeps the set compact.
struct ParamSpace {
  int k = 1;
  int d = 1;
  double box_bound = 20.0;
  double eta = 0.1;

  ParamSpace() = default;
  ParamSpace(int k_, int d_, double box_bound_ = 20.0, double eta_ = 0.1);

  bool contains(const MlpParams& theta) const;
  bool contains_flat(std::span<const double> theta) const;
};

// Closest point of the space under the documented decision rule: clip every
// coordinate to [-B, B], then scale any w_i with ||w_i|| < eta radially up to
// norm eta (w_i = 0 maps to eta * e_1). Total function, idempotent on the set.
MlpParams project(const MlpParams& theta, const ParamSpace& space);
void project_flat(std::span<double> theta, const ParamSpace& space);

// Embeds a k-unit parameter into the (k+extra)-unit space by appending units
// with a = 0, b = 0, w = eta * e_1; the realized function is unchanged.
MlpParams embed_with_zero_units(const MlpParams& theta, const ParamSpace& target);

struct FitConfig {
  int restarts = 20;
  int max_iters = 5000;
  double grad_tol = 1e-8;
  double init_scale = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  MlpParams theta_hat;
  double loglik = 0.0;
  double rss = 0.0;
  int converged_restarts = 0;   // restarts that reached grad_tol
  int best_restart_index = 0;   // ties broken toward the lowest index
  std::vector<std::string> warnings;
};

// Maximum-likelihood fit over the space: multistart projected descent on the
// RSS with a Gauss-Newton diagonal scaling and a backtracking line search.
// Warm starts (projected into the space) are prepended to the restart list
// and share the deterministic best-by-lowest-index reduction.
//
// Throws OptimizationError if every start diverges to a non-finite loss.
FitResult fit_mle(const ParamSpace& space, const TransferFunction& phi, const NoiseModel& noise,
                  const Dataset& data, const FitConfig& cfg,
                  std::span<const MlpParams> warm_starts = {});

}  // namespace mlpsel

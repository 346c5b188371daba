#pragma once

#include <cstdint>
#include <span>

#include "mlpsel/dataset.hpp"
#include "mlpsel/mlp.hpp"
#include "mlpsel/sampling.hpp"
#include "mlpsel/transfer.hpp"

namespace mlpsel {

// Gaussian observation noise with known variance. sigma2 == 0 is allowed at
// construction (noiseless data generation in tests); every density evaluation
// requires sigma2 > 0 and throws InvalidNoiseError otherwise.
struct NoiseModel {
  double sigma2 = 1.0;

  NoiseModel() = default;
  explicit NoiseModel(double s2) : sigma2(s2) {
    if (!(s2 >= 0.0)) throw InvalidNoiseError("sigma2 must be finite and >= 0");
  }
};

// log f_theta(z) up to the additive log q(x) term, which does not depend on
// theta and is never evaluated:
//   -(1/2) log(2 pi sigma2) - (y - F_theta(x))^2 / (2 sigma2).
double log_density_term(const MlpParams& theta, const TransferFunction& phi,
                        const NoiseModel& noise, std::span<const double> x, double y);

// Sample log-likelihood l_n(theta) = sum_t log-density terms, computed as
//   -(n/2) log(2 pi sigma2) - RSS / (2 sigma2).
double log_likelihood(const MlpParams& theta, const TransferFunction& phi,
                      const NoiseModel& noise, const Dataset& data);

double log_likelihood_from_rss(double rss, std::int64_t n, const NoiseModel& noise);

// Residual sum of squares of theta on the data.
double rss_value(const MlpParams& theta, const TransferFunction& phi, const Dataset& data);

// Plug-in variance estimate RSS/n for data with unknown sigma2. Convenience
// only: the selection theory in this library treats sigma2 as known.
double sigma2_plugin(const MlpParams& theta, const TransferFunction& phi, const Dataset& data);

// f_theta / f_theta0 at z; the input-density factor cancels exactly.
double density_ratio(const MlpParams& theta, const MlpParams& theta0, const TransferFunction& phi,
                     const NoiseModel& noise, std::span<const double> x, double y);

// Monte-Carlo estimate of || f_theta/f_theta0 - 1 ||_2 in L2 of the true
// model (x ~ quad.input, y = F_theta0(x) + N(0, sigma2)); the standard error
// of the estimate is reported alongside it.
struct L2Estimate {
  double value = 0.0;
  double se = 0.0;
};

L2Estimate ratio_l2_norm_est(const MlpParams& theta, const MlpParams& theta0,
                             const TransferFunction& phi, const NoiseModel& noise,
                             const MonteCarloQuadrature& quad);
double ratio_l2_norm(const MlpParams& theta, const MlpParams& theta0, const TransferFunction& phi,
                     const NoiseModel& noise, const MonteCarloQuadrature& quad);

// z -> (f_theta/f(z) - 1) / ||f_theta/f - 1||_2 with the norm estimated by
// Monte Carlo at construction.
struct ScoreFunction {
  MlpParams theta;
  MlpParams theta0;
  TransferFunction phi;
  NoiseModel noise;
  double norm = 1.0;
  double norm_se = 0.0;

  double operator()(std::span<const double> x, double y) const;
};

// Throws DegenerateDirectionError when the estimated norm is below 1e-10,
// i.e. theta realizes the true regression function.
ScoreFunction normalized_score(const MlpParams& theta, const MlpParams& theta0,
                               const TransferFunction& phi, const NoiseModel& noise,
                               const MonteCarloQuadrature& quad);

}  // namespace mlpsel

#include "mlpsel/likelihood.hpp"

#include <cmath>
#include <numbers>

#include "mlpsel/kernels.hpp"

namespace mlpsel {

namespace {

void require_positive_sigma2(const NoiseModel& noise) {
  if (!(noise.sigma2 > 0.0)) throw InvalidNoiseError("density evaluation needs sigma2 > 0");
}

}  // namespace

double log_density_term(const MlpParams& theta, const TransferFunction& phi,
                        const NoiseModel& noise, std::span<const double> x, double y) {
  require_positive_sigma2(noise);
  const double r = y - forward(theta, phi, x);
  return -0.5 * std::log(2.0 * std::numbers::pi * noise.sigma2) -
         (r * r) / (2.0 * noise.sigma2);
}

double log_likelihood_from_rss(double rss, std::int64_t n, const NoiseModel& noise) {
  require_positive_sigma2(noise);
  return -(0.5 * static_cast<double>(n)) * std::log(2.0 * std::numbers::pi * noise.sigma2) -
         rss / (2.0 * noise.sigma2);
}

double rss_value(const MlpParams& theta, const TransferFunction& phi, const Dataset& data) {
  theta.validate();
  if (data.n() < 1) throw InvalidInputError("dataset must be nonempty");
  if (data.d() != theta.d()) throw ShapeError("dataset and network dimension mismatch");
  return kernels::rss(theta.to_flat(), theta.k(), theta.d(), phi, data);
}

double log_likelihood(const MlpParams& theta, const TransferFunction& phi,
                      const NoiseModel& noise, const Dataset& data) {
  require_positive_sigma2(noise);
  return log_likelihood_from_rss(rss_value(theta, phi, data), data.n(), noise);
}

double sigma2_plugin(const MlpParams& theta, const TransferFunction& phi, const Dataset& data) {
  return rss_value(theta, phi, data) / static_cast<double>(data.n());
}

double density_ratio(const MlpParams& theta, const MlpParams& theta0, const TransferFunction& phi,
                     const NoiseModel& noise, std::span<const double> x, double y) {
  if (theta.d() != theta0.d()) throw ShapeError("parameter vectors have different input dimensions");
  return std::exp(log_density_term(theta, phi, noise, x, y) -
                  log_density_term(theta0, phi, noise, x, y));
}

L2Estimate ratio_l2_norm_est(const MlpParams& theta, const MlpParams& theta0,
                             const TransferFunction& phi, const NoiseModel& noise,
                             const MonteCarloQuadrature& quad) {
  require_positive_sigma2(noise);
  theta.validate();
  theta0.validate();
  const int d = theta0.d();
  if (theta.d() != d) throw ShapeError("parameter vectors have different input dimensions");
  if (quad.input.d != d) throw ShapeError("quadrature input dimension mismatch");
  const double sigma = std::sqrt(noise.sigma2);
  const auto moments = kernels::mc_mean_vec(
      quad.seed, quad.samples, 2, d, [&](Rng& rng, double* x, double* out) {
        quad.input.sample(rng, x);
        const double y = forward(theta0, phi, {x, static_cast<std::size_t>(d)}) +
                         sigma * rng.normal();
        const double r =
            density_ratio(theta, theta0, phi, noise, {x, static_cast<std::size_t>(d)}, y) - 1.0;
        out[0] += r * r;
        out[1] += r * r * r * r;
      });
  L2Estimate est;
  const double mean_sq = moments[0];
  est.value = std::sqrt(mean_sq);
  const double var_sq =
      std::max(0.0, moments[1] - mean_sq * mean_sq) / static_cast<double>(quad.samples);
  // Delta method through the square root.
  est.se = est.value > 0.0 ? std::sqrt(var_sq) / (2.0 * est.value) : std::sqrt(std::sqrt(var_sq));
  return est;
}

double ratio_l2_norm(const MlpParams& theta, const MlpParams& theta0, const TransferFunction& phi,
                     const NoiseModel& noise, const MonteCarloQuadrature& quad) {
  return ratio_l2_norm_est(theta, theta0, phi, noise, quad).value;
}

double ScoreFunction::operator()(std::span<const double> x, double y) const {
  return (density_ratio(theta, theta0, phi, noise, x, y) - 1.0) / norm;
}

ScoreFunction normalized_score(const MlpParams& theta, const MlpParams& theta0,
                               const TransferFunction& phi, const NoiseModel& noise,
                               const MonteCarloQuadrature& quad) {
  const L2Estimate norm = ratio_l2_norm_est(theta, theta0, phi, noise, quad);
  if (norm.value < 1e-10)
    throw DegenerateDirectionError(
        "theta realizes the true regression function (estimated L2 norm " +
        std::to_string(norm.value) + "); the score direction is undefined");
  return ScoreFunction{theta, theta0, phi, noise, norm.value, norm.se};
}

}  // namespace mlpsel

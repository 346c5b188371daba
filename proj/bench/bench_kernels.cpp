// Timing comparison of the OpenMP kernels against the serial reference.
// Also asserts that both produce bit-identical results, which is the whole
// point of the blocked fixed-order reduction scheme.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mlpsel/kernels.hpp"
#include "mlpsel/simulate.hpp"

using namespace mlpsel;
using clock_type = std::chrono::steady_clock;

namespace {

const TransferFunction kTanh(Transfer::tanh);

template <class F>
double time_ms(F&& f, int reps) {
  f();  // warm up
  const auto t0 = clock_type::now();
  for (int r = 0; r < reps; ++r) f();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void row(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s %10.3f %10.3f %8.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, identical ? "bit-identical" : "MISMATCH");
  if (!identical) std::exit(1);
}

}  // namespace

int main() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("threads: %d\n", threads);
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  MlpParams theta0;
  theta0.beta = 0.2;
  theta0.units.push_back({1.5, 0.3, {1.1, -0.4}});
  theta0.units.push_back({-0.8, -0.9, {0.5, 0.7}});
  theta0.units.push_back({0.6, 1.2, {-0.3, 0.9}});
  const Dataset data = generate_dataset(theta0, kTanh, NoiseModel(0.25),
                                        InputDistribution::standard_normal(2), 200000, 99);
  const auto flat = theta0.to_flat();

  {
    double serial_val = 0.0, par_val = 0.0;
    const double ts = time_ms([&] { serial_val = kernels::serial::rss(flat, 3, 2, kTanh, data); }, 10);
    const double tp = time_ms([&] { par_val = kernels::rss(flat, 3, 2, kTanh, data); }, 10);
    row("rss (n=2e5, k=3, d=2)", ts, tp, serial_val == par_val);
  }
  {
    kernels::RssGrad serial_val, par_val;
    const double ts =
        time_ms([&] { serial_val = kernels::serial::rss_grad(flat, 3, 2, kTanh, data); }, 10);
    const double tp = time_ms([&] { par_val = kernels::rss_grad(flat, 3, 2, kTanh, data); }, 10);
    row("rss_grad (n=2e5, k=3, d=2)", ts, tp,
        serial_val.rss == par_val.rss && serial_val.grad == par_val.grad &&
            serial_val.gn_diag == par_val.gn_diag);
  }
  {
    auto payload = [&](Rng& rng, double* x) {
      InputDistribution::standard_normal(2).sample(rng, x);
      double z = 0.3 + 1.1 * x[0] - 0.4 * x[1];
      return std::tanh(z) * std::tanh(z);
    };
    double serial_val = 0.0, par_val = 0.0;
    const double ts =
        time_ms([&] { serial_val = kernels::serial::mc_mean(7, 2000000, 2, payload); }, 5);
    const double tp = time_ms([&] { par_val = kernels::mc_mean(7, 2000000, 2, payload); }, 5);
    row("mc_mean (n=2e6)", ts, tp, serial_val == par_val);
  }
  return 0;
}

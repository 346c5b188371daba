#pragma once

#include <cstdint>
#include <string>

#include "mlpsel/errors.hpp"
#include "mlpsel/rng.hpp"

namespace mlpsel {

// Input distribution q for the regressors. Both kinds have a finite sixth
// moment. standard_normal has strictly positive density on all of R^d;
// uniform is positive only on its box and is shipped as a convenience.
struct InputDistribution {
  enum class Kind { standard_normal, uniform };

  Kind kind = Kind::standard_normal;
  int d = 1;
  double lo = -1.0;
  double hi = 1.0;

  static InputDistribution standard_normal(int d) {
    if (d < 1) throw InvalidInputError("input dimension must be >= 1");
    InputDistribution q;
    q.kind = Kind::standard_normal;
    q.d = d;
    return q;
  }

  static InputDistribution uniform(double lo, double hi, int d) {
    if (d < 1) throw InvalidInputError("input dimension must be >= 1");
    if (!(lo < hi)) throw InvalidInputError("uniform input needs lo < hi");
    InputDistribution q;
    q.kind = Kind::uniform;
    q.d = d;
    q.lo = lo;
    q.hi = hi;
    return q;
  }

  void sample(Rng& rng, double* out) const {
    if (kind == Kind::standard_normal) {
      for (int j = 0; j < d; ++j) out[j] = rng.normal();
    } else {
      for (int j = 0; j < d; ++j) out[j] = rng.uniform(lo, hi);
    }
  }

  std::string tag() const {
    if (kind == Kind::standard_normal) return "standard_normal(d=" + std::to_string(d) + ")";
    return "uniform(" + std::to_string(lo) + "," + std::to_string(hi) + ",d=" + std::to_string(d) + ")";
  }
};

// Monte-Carlo quadrature settings for the L2(f lambda_{d+1}) norms: number of
// z draws from the true model, stream seed, and the input distribution the
// x coordinates are drawn from.
struct MonteCarloQuadrature {
  std::int64_t samples = 100000;
  std::uint64_t seed = 0x5EEDC0DEull;
  InputDistribution input;
};

}  // namespace mlpsel

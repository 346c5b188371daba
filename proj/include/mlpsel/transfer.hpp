#pragma once

#include <cmath>
#include <string>

#include "mlpsel/errors.hpp"

namespace mlpsel {

enum class Transfer { logistic, tanh };

// Bounded transfer function with closed-form derivatives up to third order.
// The derivatives are analytic on purpose: the likelihood-ratio expansion
// terms are products of phi, phi', phi'' and must not carry finite-difference
// noise.
class TransferFunction {
 public:
  explicit TransferFunction(Transfer kind) : kind_(kind) {}

  Transfer kind() const { return kind_; }

  double value(double z) const {
    if (kind_ == Transfer::tanh) return std::tanh(z);
    return 1.0 / (1.0 + std::exp(-z));
  }

  double d1(double z) const {
    if (kind_ == Transfer::tanh) {
      double t = std::tanh(z);
      return 1.0 - t * t;
    }
    double s = value(z);
    return s * (1.0 - s);
  }

  double d2(double z) const {
    if (kind_ == Transfer::tanh) {
      double t = std::tanh(z);
      return -2.0 * t * (1.0 - t * t);
    }
    double s = value(z);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  }

  double d3(double z) const {
    if (kind_ == Transfer::tanh) {
      double t = std::tanh(z);
      double u = 1.0 - t * t;
      return -2.0 * u * (1.0 - 3.0 * t * t);
    }
    double s = value(z);
    return s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
  }

  // value and d1 at once; the hot loops need both.
  void value_d1(double z, double& v, double& g) const {
    if (kind_ == Transfer::tanh) {
      double t = std::tanh(z);
      v = t;
      g = 1.0 - t * t;
    } else {
      double s = 1.0 / (1.0 + std::exp(-z));
      v = s;
      g = s * (1.0 - s);
    }
  }

  std::string name() const { return kind_ == Transfer::tanh ? "tanh" : "logistic"; }

  static TransferFunction parse(const std::string& s) {
    if (s == "tanh") return TransferFunction(Transfer::tanh);
    if (s == "logistic") return TransferFunction(Transfer::logistic);
    throw ConfigError("unknown transfer function '" + s + "' (expected tanh or logistic)");
  }

 private:
  Transfer kind_;
};

}  // namespace mlpsel

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlpsel/errors.hpp"
#include "mlpsel/mlp.hpp"

namespace mlpsel {

// Provenance of a simulated dataset; carried so experiments are replayable.
struct GenerationMeta {
  MlpParams theta0;
  Transfer transfer = Transfer::tanh;
  double sigma2 = 1.0;
  std::string input_tag;
  std::uint64_t seed = 0;
};

// n observations (x_t, y_t); x rows stored contiguously for the kernels.
class Dataset {
 public:
  std::optional<GenerationMeta> meta;

  explicit Dataset(int d) : d_(d) {
    if (d < 1) throw InvalidInputError("dataset dimension must be >= 1");
  }

  static Dataset from_rows(const std::vector<std::vector<double>>& xs,
                           const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw InvalidInputError("xs and ys must have equal length");
    if (xs.empty()) throw InvalidInputError("dataset must be nonempty");
    Dataset ds(static_cast<int>(xs.front().size()));
    for (std::size_t t = 0; t < xs.size(); ++t) ds.add(xs[t], ys[t]);
    return ds;
  }

  void add(std::span<const double> x, double y) {
    if (static_cast<int>(x.size()) != d_)
      throw ShapeError("row has dimension " + std::to_string(x.size()) + ", dataset expects " +
                       std::to_string(d_));
    xs_.insert(xs_.end(), x.begin(), x.end());
    ys_.push_back(y);
  }

  void reserve(std::int64_t n) {
    xs_.reserve(static_cast<std::size_t>(n) * d_);
    ys_.reserve(static_cast<std::size_t>(n));
  }

  std::int64_t n() const { return static_cast<std::int64_t>(ys_.size()); }
  int d() const { return d_; }

  std::span<const double> x(std::int64_t t) const {
    return {xs_.data() + static_cast<std::size_t>(t) * d_, static_cast<std::size_t>(d_)};
  }
  double y(std::int64_t t) const { return ys_[static_cast<std::size_t>(t)]; }

  std::span<const double> xs_flat() const { return xs_; }
  std::span<const double> ys() const { return ys_; }

 private:
  int d_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

}  // namespace mlpsel

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mlpsel {

// Fixed-order pairwise (binary tree) summation. The evaluation order depends
// only on the length of the input, which is what makes the parallel kernels
// reproducible across thread counts: per-block partials are computed
// independently and always reduced in this order.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

// Minimal dense row-major matrix; enough for Hessians and Gram matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double max_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < rows_; ++i)
      for (int j = i + 1; j < cols_; ++j) {
        double d = (*this)(i, j) - (*this)(j, i);
        if (d < 0) d = -d;
        if (d > m) m = d;
      }
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

}  // namespace mlpsel

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tsxfidel {

// Dense row-major matrix of doubles. A window X_t is stored with one row per
// feature j and one column per time slice l, so the flat index of cell (j, l)
// is j * cols + l and flat order equals lexicographic (j, l) order.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  double& at_flat(std::size_t i) { return values_[i]; }
  double at_flat(std::size_t i) const { return values_[i]; }

  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace tsxfidel

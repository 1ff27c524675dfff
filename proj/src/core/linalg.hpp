#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cml {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<double> column(std::size_t c) const;

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transposed() const;
  Matrix select_rows(std::span<const std::size_t> rows) const;
  Matrix left_cols(std::size_t count) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
// Largest absolute entry of a - b.
double max_abs_difference(const Matrix& a, const Matrix& b);
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

struct SvdResult {
  std::vector<double> singular_values;  // descending
  Matrix right_vectors;                 // p x p, column j pairs with value j
  int sweeps = 0;
};

// One-sided (Hestenes) Jacobi SVD. Only the singular values and right
// singular vectors are kept; the right vectors are a product of plane
// rotations and therefore orthogonal to working precision even when the
// input is rank deficient.
SvdResult jacobi_svd(const Matrix& a, int max_sweeps = 80);

}  // namespace cml

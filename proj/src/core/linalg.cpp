#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace cml {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw Error(ErrorCode::Shape, "ragged rows in matrix literal");
    }
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw Error(ErrorCode::Lookup, "matrix row out of range");
    std::copy_n(row(rows[i]).begin(), cols_, out.row(i).begin());
  }
  return out;
}

Matrix Matrix::left_cols(std::size_t count) const {
  count = std::min(count, cols_);
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(row(r).begin(), count, out.row(r).begin());
  }
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::Shape, "matrix product dimension mismatch");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (double v : m.data()) sum += v * v;
  return std::sqrt(sum);
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::Shape, "matrix shapes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

SvdResult jacobi_svd(const Matrix& a, int max_sweeps) {
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  // Work on columns stored contiguously.
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) cols[c][r] = a(r, c);
  }
  Matrix v = Matrix::identity(p);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  SvdResult result;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          alpha += cols[i][r] * cols[i][r];
          beta += cols[j][r] * cols[j][r];
          gamma += cols[i][r] * cols[j][r];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < n; ++r) {
          const double xi = cols[i][r];
          const double xj = cols[j][r];
          cols[i][r] = c * xi - s * xj;
          cols[j][r] = s * xi + c * xj;
        }
        for (std::size_t r = 0; r < p; ++r) {
          const double vi = v(r, i);
          const double vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    result.sweeps = sweep + 1;
    if (!rotated) break;
  }

  std::vector<double> sigma(p);
  for (std::size_t c = 0; c < p; ++c) {
    double sum = 0.0;
    for (double x : cols[c]) sum += x * x;
    sigma[c] = std::sqrt(sum);
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });
  result.singular_values.resize(p);
  result.right_vectors = Matrix(p, p);
  for (std::size_t k = 0; k < p; ++k) {
    result.singular_values[k] = sigma[order[k]];
    for (std::size_t r = 0; r < p; ++r) result.right_vectors(r, k) = v(r, order[k]);
  }
  return result;
}

}  // namespace cml

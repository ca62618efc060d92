#ifndef MAFF_MATRIX_HPP
#define MAFF_MATRIX_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace maff {

// Minimal dense row-major matrix of doubles; just enough linear algebra
// for basis construction and likelihood loops.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double &operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  // Pointer to the start of row i (contiguous, cols() entries).
  double *row(std::size_t i) { return data_.data() + i * cols_; }
  const double *row(std::size_t i) const { return data_.data() + i * cols_; }

  const std::vector<double> &data() const { return data_; }
  std::vector<double> &data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Thin QR factorization q = u r with orthonormal columns in u and r
// upper triangular (m x m).  Modified Gram-Schmidt with one
// reorthogonalization pass, which keeps u orthonormal even for the
// nearly collinear column sets natural-spline bases produce.
struct ThinQr {
  Matrix u;
  Matrix r;
};

inline ThinQr thin_qr(const Matrix &q) {
  const std::size_t k = q.rows();
  const std::size_t m = q.cols();
  ThinQr out{Matrix(k, m), Matrix(m, m)};
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> v(k);
    for (std::size_t i = 0; i < k; ++i) v[i] = q(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t c = 0; c < j; ++c) {
        double proj = 0.0;
        for (std::size_t i = 0; i < k; ++i) proj += out.u(i, c) * v[i];
        out.r(c, j) += proj;
        for (std::size_t i = 0; i < k; ++i) v[i] -= proj * out.u(i, c);
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    out.r(j, j) = norm;
    const double inv = norm > 0.0 ? 1.0 / norm : 0.0;
    for (std::size_t i = 0; i < k; ++i) out.u(i, j) = v[i] * inv;
  }
  return out;
}

// Solve r x = b for upper triangular r (back substitution).
inline std::vector<double> upper_solve(const Matrix &r,
                                       const std::vector<double> &b) {
  const std::size_t m = r.cols();
  std::vector<double> x(b);
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t j = i + 1; j < m; ++j) x[i] -= r(i, j) * x[j];
    x[i] /= r(i, i);
  }
  return x;
}

// Solve r^T x = b for upper triangular r (forward substitution).
inline std::vector<double> upper_transpose_solve(const Matrix &r,
                                                 const std::vector<double> &b) {
  const std::size_t m = r.cols();
  std::vector<double> x(b);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) x[i] -= r(j, i) * x[j];
    x[i] /= r(i, i);
  }
  return x;
}

// y = r x for upper triangular r.
inline std::vector<double> upper_apply(const Matrix &r,
                                       const std::vector<double> &x) {
  const std::size_t m = r.cols();
  std::vector<double> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) y[i] += r(i, j) * x[j];
  return y;
}

// y = r^T x for upper triangular r.
inline std::vector<double> upper_transpose_apply(const Matrix &r,
                                                 const std::vector<double> &x) {
  const std::size_t m = r.cols();
  std::vector<double> y(m, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i <= j; ++i) y[j] += r(i, j) * x[i];
  return y;
}

}  // namespace maff

#endif

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace soapool {

/// Dense row-major matrix. Only what the symmetric pipeline needs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
double frobenius_norm(const Matrix& m);

/// Symmetric dim x dim matrix. Writes go through set(), which updates both
/// triangles, so symmetry holds exactly at all times.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim);

  /// Throws kInvalidArgument unless m is square and exactly symmetric.
  static SymMatrix from_dense(const Matrix& m);
  /// Averages m with its transpose; m must be square.
  static SymMatrix symmetrize(const Matrix& m);
  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const noexcept { return dense_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return dense_(i, j); }
  void set(std::size_t i, std::size_t j, double v) {
    dense_(i, j) = v;
    dense_(j, i) = v;
  }

  double trace() const;
  const Matrix& dense() const noexcept { return dense_; }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  Matrix dense_;
};

struct NsConfig {
  int iterations = 5;
  double trace_epsilon = 1e-12;

  /// Throws kInvalidArgument outside 1 <= iterations <= 100, epsilon > 0.
  void validate() const;
};

/// m[i][j] for i <= j, row-major over (i, j). Length dim*(dim+1)/2.
std::vector<double> upper_tri_vec(const SymMatrix& m);
/// Inverse of upper_tri_vec. Throws if the length is not triangular.
SymMatrix from_upper_tri(std::span<const double> v);

constexpr std::size_t upper_tri_len(std::size_t dim) noexcept {
  return dim * (dim + 1) / 2;
}

struct SymEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

/// Cyclic Jacobi eigensolver. Throws kNumerical with the sweep count if
/// off-diagonal mass fails to vanish within max_sweeps.
SymEigen sym_eig(const SymMatrix& m, int max_sweeps = 100);

/// Eigenvalues at or above this are treated as PSD (and clamped to 0 if
/// negative).
inline constexpr double kPsdTolerance = 1e-10;

/// Principal square root through the eigendecomposition. Reference path only.
SymMatrix sqrt_eig(const SymMatrix& m);

/// Coupled Newton-Schulz square root with trace pre/post normalization:
///   A = m / (tr(m) + eps), Y0 = A, Z0 = I
///   Y <- Y (3I - ZY) / 2,  Z <- (3I - ZY) Z / 2   (T times)
///   result = sqrt(tr(m) + eps) * Y_T, symmetrized.
SymMatrix ns_sqrt(const SymMatrix& m, const NsConfig& cfg = {});

double relative_frobenius_error(const Matrix& approx, const Matrix& reference);

}  // namespace soapool

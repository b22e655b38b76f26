#include "soapool/symmat.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <sstream>

#include "soapool/error.hpp"

namespace soapool {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, "matrix product: inner dimensions differ");
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = &c(i, 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double relative_frobenius_error(const Matrix& approx, const Matrix& reference) {
  if (approx.rows() != reference.rows() || approx.cols() != reference.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "relative error: shape mismatch");
  }
  double diff = 0.0;
  double ref = 0.0;
  const auto a = approx.data();
  const auto r = reference.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - r[i]) * (a[i] - r[i]);
    ref += r[i] * r[i];
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

SymMatrix::SymMatrix(std::size_t dim) : dense_(dim, dim) {
  if (dim == 0) throw Error(ErrorKind::kInvalidArgument, "SymMatrix: dim must be >= 1");
}

SymMatrix SymMatrix::from_dense(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "SymMatrix: matrix is not square");
  }
  SymMatrix s(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) {
        std::ostringstream os;
        os << "SymMatrix: entry (" << i << "," << j << ") differs from its transpose";
        throw Error(ErrorKind::kInvalidArgument, os.str());
      }
      s.set(i, j, m(i, j));
    }
  }
  return s;
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kInvalidArgument, "SymMatrix: matrix is not square");
  }
  SymMatrix s(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return s;
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix s(dim);
  for (std::size_t i = 0; i < dim; ++i) s.set(i, i, 1.0);
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix s(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) s.set(i, i, diag[i]);
  return s;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += dense_(i, i);
  return t;
}

void NsConfig::validate() const {
  if (iterations < 1 || iterations > 100) {
    throw Error(ErrorKind::kInvalidArgument,
                "NsConfig: iterations must lie in [1, 100], got " +
                    std::to_string(iterations));
  }
  if (!(trace_epsilon > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "NsConfig: trace_epsilon must be > 0");
  }
}

std::vector<double> upper_tri_vec(const SymMatrix& m) {
  std::vector<double> v;
  v.reserve(upper_tri_len(m.dim()));
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = i; j < m.dim(); ++j) v.push_back(m(i, j));
  return v;
}

SymMatrix from_upper_tri(std::span<const double> v) {
  // Solve n(n+1)/2 == len.
  std::size_t n = 0;
  while (upper_tri_len(n) < v.size()) ++n;
  if (n == 0 || upper_tri_len(n) != v.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "from_upper_tri: length " + std::to_string(v.size()) +
                    " is not a triangular number");
  }
  SymMatrix m(n);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, v[idx++]);
  return m;
}

SymEigen sym_eig(const SymMatrix& m, int max_sweeps) {
  const std::size_t n = m.dim();
  Matrix a = m.dense();
  Matrix v = Matrix::identity(n);

  const double scale = std::max(frobenius_norm(a), std::numeric_limits<double>::min());
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= 1e-15 * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        // Rotation angle from the stable tangent formula.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps && off_norm() > 1e-15 * scale) {
    throw Error(ErrorKind::kNumerical, "sym_eig: Jacobi did not converge after " +
                                           std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

SymMatrix sqrt_eig(const SymMatrix& m) {
  const SymEigen eig = sym_eig(m);
  const std::size_t n = m.dim();
  std::vector<double> roots(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = eig.values[i];
    if (lambda < -kPsdTolerance) {
      std::ostringstream os;
      os << "sqrt_eig: matrix is not PSD (eigenvalue " << lambda << ")";
      throw Error(ErrorKind::kNotPsd, os.str());
    }
    roots[i] = std::sqrt(std::max(lambda, 0.0));
  }
  SymMatrix r(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += eig.vectors(i, k) * roots[k] * eig.vectors(j, k);
      r.set(i, j, s);
    }
  }
  return r;
}

SymMatrix ns_sqrt(const SymMatrix& m, const NsConfig& cfg) {
  cfg.validate();
  const std::size_t n = m.dim();
  const double tr = m.trace() + cfg.trace_epsilon;
  if (!(tr > 0.0)) {
    std::ostringstream os;
    os << "ns_sqrt: degenerate trace " << tr;
    throw Error(ErrorKind::kNumerical, os.str());
  }

  Matrix y = m.dense();
  for (double& v : y.data()) v /= tr;
  Matrix z = Matrix::identity(n);

  for (int t = 0; t < cfg.iterations; ++t) {
    Matrix w = z * y;
    for (double& v : w.data()) v = -0.5 * v;
    for (std::size_t i = 0; i < n; ++i) w(i, i) += 1.5;
    Matrix y_next = y * w;
    z = w * z;
    y = std::move(y_next);
    for (double v : y.data()) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kNumerical,
                    "ns_sqrt: NS divergence at step " + std::to_string(t));
      }
    }
  }

  const double post = std::sqrt(tr);
  for (double& v : y.data()) v *= post;
  return SymMatrix::symmetrize(y);
}

}  // namespace soapool

#include <gtest/gtest.h>

#include <cmath>

#include "soapool/error.hpp"
#include "soapool/oracles.hpp"
#include "soapool/rng.hpp"
#include "soapool/symmat.hpp"

using namespace soapool;

namespace {

double ns_error(const SymMatrix& m, int t) {
  NsConfig cfg;
  cfg.iterations = t;
  return relative_frobenius_error(ns_sqrt(m, cfg).dense(), sqrt_eig(m).dense());
}

// Scalar form of the coupled iteration on one eigenvalue: with Y and Z both
// functions of A, y_t z_t = p_t and p_{t+1} = p_t (3 - p_t)^2 / 4.
double scalar_ns(double lambda, double trace, int t) {
  const double a = lambda / trace;
  double y = a, z = 1.0;
  for (int i = 0; i < t; ++i) {
    const double w = 0.5 * (3.0 - z * y);
    y *= w;
    z *= w;
  }
  return std::sqrt(trace) * y;
}

}  // namespace

TEST(UpperTriVecTest, TwoByTwo) {
  Matrix d(2, 2);
  d(0, 0) = 1;
  d(0, 1) = d(1, 0) = 2;
  d(1, 1) = 3;
  EXPECT_EQ(upper_tri_vec(SymMatrix::from_dense(d)), (std::vector<double>{1, 2, 3}));
}

TEST(UpperTriVecTest, Lengths) {
  EXPECT_EQ(upper_tri_vec(SymMatrix::identity(256)).size(), 32896u);
  EXPECT_EQ(upper_tri_vec(SymMatrix::identity(16)).size(), 136u);
  EXPECT_EQ(upper_tri_len(256), 32896u);
}

TEST(UpperTriVecTest, RoundTripIsExact) {
  Pcg64 rng(5);
  for (std::size_t dim : {1u, 2u, 7u, 33u}) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i; j < dim; ++j) m.set(i, j, rng.normal());
    EXPECT_EQ(from_upper_tri(upper_tri_vec(m)), m);
  }
  const std::vector<double> bad{1, 2};
  EXPECT_THROW(from_upper_tri(bad), Error);
}

TEST(SymMatrixTest, FromDenseRejectsAsymmetric) {
  Matrix d(2, 2);
  d(0, 1) = 1.0;
  EXPECT_THROW(SymMatrix::from_dense(d), Error);
  EXPECT_THROW(SymMatrix::from_dense(Matrix(2, 3)), Error);
}

TEST(SymEigTest, IdentityAndDiagonal) {
  auto e = sym_eig(SymMatrix::identity(3));
  EXPECT_EQ(e.values, (std::vector<double>{1, 1, 1}));

  const std::vector<double> diag{1, 4};
  e = sym_eig(SymMatrix::diagonal(diag));
  EXPECT_EQ(e.values, (std::vector<double>{4, 1}));
  EXPECT_DOUBLE_EQ(std::abs(e.vectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(e.vectors(0, 1)), 1.0);
}

TEST(SymEigTest, ReconstructsRandomSpd) {
  Pcg64 rng(17);
  for (std::size_t dim : {2u, 8u, 24u, 64u}) {
    const auto m = oracle::random_spd(dim, 1e3, rng);
    const auto e = sym_eig(m);
    Matrix lam(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) lam(i, i) = e.values[i];
    const Matrix rec = e.vectors * lam * transpose(e.vectors);
    EXPECT_LT(relative_frobenius_error(rec, m.dense()), 1e-10) << dim;
    for (std::size_t i = 1; i < dim; ++i) EXPECT_GE(e.values[i - 1], e.values[i]);
    const Matrix qtq = transpose(e.vectors) * e.vectors;
    EXPECT_LT(relative_frobenius_error(qtq, Matrix::identity(dim)), 1e-12);
  }
}

TEST(SqrtEigTest, Examples) {
  EXPECT_LT(relative_frobenius_error(sqrt_eig(SymMatrix::identity(4)).dense(),
                                     Matrix::identity(4)),
            1e-15);
  const std::vector<double> d{4, 9};
  const auto r = sqrt_eig(SymMatrix::diagonal(d));
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(SqrtEigTest, SquaresBackToInput) {
  Pcg64 rng(23);
  // A^T A with A 6x6.
  Matrix a(6, 6);
  for (auto& v : a.data()) v = rng.normal();
  const auto m = SymMatrix::symmetrize(transpose(a) * a);
  auto r = sqrt_eig(m).dense();
  EXPECT_LT(relative_frobenius_error(r * r, m.dense()), 1e-8);
  for (std::size_t dim = 2; dim <= 64; dim *= 2) {
    const auto s = oracle::random_spd(dim, 1e3, rng);
    r = sqrt_eig(s).dense();
    EXPECT_LT(relative_frobenius_error(r * r, s.dense()), 1e-8) << dim;
  }
}

TEST(SqrtEigTest, RejectsNegativeEigenvalue) {
  const std::vector<double> d{1.0, -1e-3};
  try {
    sqrt_eig(SymMatrix::diagonal(d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotPsd);
    EXPECT_NE(std::string(e.what()).find("0.001"), std::string::npos) << e.what();
  }
  // Within tolerance: clamped to zero.
  const std::vector<double> ok{1.0, -1e-12};
  EXPECT_EQ(sqrt_eig(SymMatrix::diagonal(ok))(1, 1), 0.0);
}

TEST(NsSqrtTest, MatchesScalarRecurrenceOnDiagonal) {
  const std::vector<double> lam{5.0, 1.0, 0.25, 1e-2};
  double tr = 0;
  for (double v : lam) tr += v;
  for (int t : {1, 3, 5, 7}) {
    NsConfig cfg;
    cfg.iterations = t;
    const auto r = ns_sqrt(SymMatrix::diagonal(lam), cfg);
    for (std::size_t i = 0; i < lam.size(); ++i)
      EXPECT_NEAR(r(i, i), scalar_ns(lam[i], tr + cfg.trace_epsilon, t), 1e-13);
  }
}

TEST(NsSqrtTest, IdentityThree) {
  // Trace normalization puts every eigenvalue at 1/3.
  const auto r5 = ns_sqrt(SymMatrix::identity(3));
  EXPECT_NEAR(r5(0, 0), scalar_ns(1.0, 3.0 + 1e-12, 5), 1e-14);
  NsConfig cfg;
  cfg.iterations = 7;
  EXPECT_LT(relative_frobenius_error(ns_sqrt(SymMatrix::identity(3), cfg).dense(),
                                     Matrix::identity(3)),
            1e-10);
}

TEST(NsSqrtTest, ZeroMatrixStaysZero) {
  const auto r = ns_sqrt(SymMatrix(2));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(r(i, j), 0.0);
}

TEST(NsSqrtTest, ConvergesToEigOracle) {
  Pcg64 rng(31);
  for (std::size_t dim : {2u, 8u, 32u, 64u}) {
    const auto m = oracle::random_spd(dim, 1e3, rng);
    EXPECT_LT(ns_error(m, 20), 1e-10) << dim;
  }
}

TEST(NsSqrtTest, ErrorNonIncreasingInT) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Pcg64 rng(seed);
    const std::size_t dim = 2 + rng.below(31);
    const double cond = std::pow(10.0, 3.0 * rng.uniform());
    const auto m = oracle::random_spd(dim, cond, rng);
    double prev = ns_error(m, 1);
    for (int t = 2; t <= 10; ++t) {
      const double e = ns_error(m, t);
      // Past convergence both sides sit at the oracle's own rounding level.
      EXPECT_LE(e, prev + 1e-12) << "seed " << seed << " T " << t;
      prev = e;
    }
  }
}

TEST(NsSqrtTest, OutputSymmetricAndPsd) {
  Pcg64 rng(41);
  for (int i = 0; i < 10; ++i) {
    const auto m = oracle::random_spd(3 + rng.below(20), 1e3, rng);
    const auto r = ns_sqrt(m);
    const auto& d = r.dense();
    EXPECT_EQ(d, transpose(d));
    EXPECT_GE(sym_eig(r).values.back(), -1e-8);
  }
}

TEST(NsSqrtTest, Errors) {
  const std::vector<double> neg{-1.0, -2.0};
  try {
    ns_sqrt(SymMatrix::diagonal(neg));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("degenerate trace"), std::string::npos);
  }
  // Indefinite with tiny trace: normalized eigenvalues far outside (0, 3).
  const std::vector<double> indef{10.0, -9.9};
  NsConfig cfg;
  cfg.iterations = 100;
  try {
    ns_sqrt(SymMatrix::diagonal(indef), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_NE(std::string(e.what()).find("NS divergence"), std::string::npos) << e.what();
  }
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.iterations = 101;
  EXPECT_THROW(ns_sqrt(SymMatrix::identity(2), cfg), Error);
}

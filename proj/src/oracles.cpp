#include "soapool/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "soapool/error.hpp"

namespace soapool::oracle {

SymMatrix random_spd(std::size_t dim, double condition, Pcg64& rng) {
  Matrix q(dim, dim);
  for (double& v : q.data()) v = rng.normal();
  // Modified Gram-Schmidt on columns.
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double proj = 0.0;
      for (std::size_t r = 0; r < dim; ++r) proj += q(r, p) * q(r, c);
      for (std::size_t r = 0; r < dim; ++r) q(r, c) -= proj * q(r, p);
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < dim; ++r) norm += q(r, c) * q(r, c);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < dim; ++r) q(r, c) /= norm;
  }
  std::vector<double> lambda(dim);
  const double log_cond = std::log(condition);
  for (std::size_t i = 0; i < dim; ++i) lambda[i] = std::exp(rng.uniform() * log_cond);
  if (dim >= 2) {
    lambda.front() = 1.0;
    lambda.back() = condition;
  }
  Matrix m(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += q(i, k) * lambda[k] * q(j, k);
      m(i, j) = s;
    }
  return SymMatrix::symmetrize(m);
}

FeatureMatrix random_features(std::size_t d, std::size_t n, Pcg64& rng, double scale,
                              double offset) {
  std::vector<double> data(d * n);
  for (double& v : data) v = rng.normal() * scale + offset;
  return {d, n, std::move(data)};
}

SymMatrix covariance_outer_product(const FeatureMatrix& x) {
  const std::size_t d = x.channels();
  const std::size_t n = x.points();
  std::vector<double> mu(d, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < d; ++i) mu[i] += x(i, j) / static_cast<double>(n);
  Matrix acc(d, d);
  std::vector<double> centered(d);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < d; ++i) centered[i] = x(i, j) - mu[i];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) acc(a, b) += centered[a] * centered[b];
  }
  for (double& v : acc.data()) v /= static_cast<double>(n);
  return SymMatrix::symmetrize(acc);
}

double central_difference(const std::function<double(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "max_abs_diff: length mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool gradient_agrees(double analytic, double numeric, double rel, double abs,
                     double small) {
  const double err = std::abs(analytic - numeric);
  if (std::abs(numeric) < small) return err <= abs;
  return err <= rel * std::abs(numeric);
}

}  // namespace soapool::oracle

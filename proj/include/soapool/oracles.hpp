#pragma once

// Reference computations and random fixtures shared by the self-test and the
// test suites. Nothing here sits on a descriptor path; each routine takes a
// deliberately different route from the production code it checks.

#include <functional>
#include <span>
#include <vector>

#include "soapool/features.hpp"
#include "soapool/rng.hpp"
#include "soapool/symmat.hpp"

namespace soapool::oracle {

/// Q diag(lambda) Q^T with Q from Gram-Schmidt on a Gaussian matrix and
/// eigenvalues log-uniform in [1, condition] (both ends present when dim >= 2).
SymMatrix random_spd(std::size_t dim, double condition, Pcg64& rng);

/// Entries N(0, 1) * scale + offset.
FeatureMatrix random_features(std::size_t d, std::size_t n, Pcg64& rng,
                              double scale = 1.0, double offset = 0.0);

/// (1/N) sum_j (x_j - mu)(x_j - mu)^T via explicit per-point outer products.
SymMatrix covariance_outer_product(const FeatureMatrix& x);

/// Central difference (f(t + h) - f(t - h)) / 2h.
double central_difference(const std::function<double(double)>& f, double t, double h);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

/// |analytic - numeric| within rel * |numeric|, or within abs when
/// |numeric| < small.
bool gradient_agrees(double analytic, double numeric, double rel, double abs,
                     double small = 1e-2);

}  // namespace soapool::oracle

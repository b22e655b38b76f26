#include "soapool/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "soapool/aggregate.hpp"
#include "soapool/error.hpp"
#include "soapool/learn.hpp"
#include "soapool/oracles.hpp"
#include "soapool/retrieve.hpp"
#include "soapool/synth.hpp"

namespace soapool {
namespace {

class Suite {
 public:
  explicit Suite(std::string name) { result_.name = std::move(name); }

  /// check returns an empty string on success, else a description.
  void run_case(const std::function<std::string()>& check) {
    ++result_.total;
    std::string failure;
    try {
      failure = check();
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    if (failure.empty()) {
      ++result_.passed;
    } else if (result_.first_failure.empty()) {
      result_.first_failure = "case " + std::to_string(result_.total - 1) + ": " + failure;
    }
  }

  SuiteResult result() const { return result_; }

 private:
  SuiteResult result_;
};

std::vector<AggregatorSpec> invariant_specs(std::size_t d) {
  std::vector<AggregatorSpec> specs{SpocSpec{}, MacSpec{}, GemSpec{3.0}, CovSpec{},
                                    KernelSpec{1.0, {}}, CbpSpec{64, 7}};
  if (d % 2 == 0) {
    CpsParams p = CpsParams::uniform(2);
    p.raw_weights = {0.3, -0.2};
    specs.emplace_back(p);
  }
  return specs;
}

SuiteResult permutation_suite(const SelftestOptions& opts) {
  Suite suite("permutation_invariance");
  const int cases = opts.quick ? 20 : 100;
  for (int c = 0; c < cases; ++c) {
    suite.run_case([&]() -> std::string {
      Pcg64 rng(derive_seed({opts.seed, 101, static_cast<std::uint64_t>(c)}));
      const std::size_t d = 2 * (1 + rng.below(8));
      const std::size_t n = 1 + rng.below(80);
      const FeatureMatrix x = oracle::random_features(d, n, rng, 1.0, 0.5);
      const auto perm = random_permutation(n, rng);
      const FeatureMatrix xp = x.permute_columns(perm);
      for (const auto& spec : invariant_specs(d)) {
        const double diff =
            oracle::max_abs_diff(aggregate(x, spec).values, aggregate(xp, spec).values);
        if (!(diff <= 1e-12)) {
          std::ostringstream os;
          os << "method=" << method_name(method_of(spec)) << " d=" << d << " N=" << n
             << " max_abs_diff=" << diff;
          return os.str();
        }
      }
      const double cov_diff = oracle::max_abs_diff(upper_tri_vec(covariance(x)),
                                                   upper_tri_vec(covariance(xp)));
      if (!(cov_diff <= 1e-12)) return "covariance max_abs_diff=" + std::to_string(cov_diff);
      return {};
    });
  }
  return suite.result();
}

SuiteResult ns_oracle_suite(const SelftestOptions& opts) {
  Suite suite("ns_vs_eig_oracle");
  const NsConfig ns{opts.break_ns ? 1 : 20, 1e-12};
  const std::vector<std::size_t> dims =
      opts.quick ? std::vector<std::size_t>{2, 4, 8, 16} : std::vector<std::size_t>{2, 4, 8, 16, 32, 64};
  const int per_dim = opts.quick ? 3 : 5;
  for (std::size_t dim : dims) {
    for (int c = 0; c < per_dim; ++c) {
      suite.run_case([&]() -> std::string {
        Pcg64 rng(derive_seed({opts.seed, 202, dim, static_cast<std::uint64_t>(c)}));
        // Case 0 is the ill-conditioned fixture at the condition bound.
        const double cond = c == 0 ? 1e3 : std::exp(rng.uniform() * std::log(1e3));
        const SymMatrix m = oracle::random_spd(dim, cond, rng);
        const double err =
            relative_frobenius_error(ns_sqrt(m, ns).dense(), sqrt_eig(m).dense());
        if (!(err <= 1e-4)) {
          std::ostringstream os;
          os << "dim=" << dim << " cond=" << cond << " T=" << ns.iterations
             << " rel_err=" << err;
          return os.str();
        }
        return {};
      });
    }
  }
  return suite.result();
}

SuiteResult reduction_suite(const SelftestOptions& opts) {
  Suite suite("cps_k1_reduction");
  const int cases = opts.quick ? 10 : 50;
  for (int c = 0; c < cases; ++c) {
    suite.run_case([&]() -> std::string {
      Pcg64 rng(derive_seed({opts.seed, 303, static_cast<std::uint64_t>(c)}));
      const std::size_t d = 1 + rng.below(24);
      const std::size_t n = 1 + rng.below(100);
      const FeatureMatrix x = oracle::random_features(d, n, rng);
      CpsParams p = CpsParams::uniform(1);
      p.raw_weights = {rng.normal() * 3.0};
      if (cps(x, p).values != full_soa(x).values) {
        return "d=" + std::to_string(d) + " N=" + std::to_string(n) + " not bit-identical";
      }
      return {};
    });
  }
  return suite.result();
}

SuiteResult covariance_suite(const SelftestOptions& opts) {
  Suite suite("covariance_oracle");
  const int cases = opts.quick ? 20 : 100;
  for (int c = 0; c < cases; ++c) {
    suite.run_case([&]() -> std::string {
      Pcg64 rng(derive_seed({opts.seed, 404, static_cast<std::uint64_t>(c)}));
      const std::size_t d = 1 + rng.below(16);
      const std::size_t n = 2 + rng.below(99);
      const FeatureMatrix x = oracle::random_features(d, n, rng, 2.0, 1.0);
      const double err = relative_frobenius_error(
          covariance(x).dense(), oracle::covariance_outer_product(x).dense());
      if (!(err <= 1e-12)) {
        return "d=" + std::to_string(d) + " N=" + std::to_string(n) +
               " rel_err=" + std::to_string(err);
      }
      return {};
    });
  }
  return suite.result();
}

SuiteResult gradient_suite(const SelftestOptions& opts) {
  Suite suite("gradient_checks");
  const int cases = opts.quick ? 5 : 20;
  constexpr double h = 1e-5;
  for (int c = 0; c < cases; ++c) {
    suite.run_case([&]() -> std::string {
      Pcg64 rng(derive_seed({opts.seed, 505, static_cast<std::uint64_t>(c)}));
      const std::size_t k = 4;
      const FeatureMatrix x = oracle::random_features(16, 30, rng);
      CpsParams p = CpsParams::uniform(k);
      for (double& w : p.raw_weights) w = rng.normal();
      std::vector<double> upstream(descriptor_dim(Method::kCps, 16, k));
      for (double& u : upstream) u = rng.normal();
      const auto analytic = grad_cps_weights(x, p, upstream);
      for (std::size_t i = 0; i < k; ++i) {
        auto f = [&](double t) {
          CpsParams q = p;
          q.raw_weights[i] = t;
          const auto z = cps(x, q).values;
          double s = 0.0;
          for (std::size_t j = 0; j < z.size(); ++j) s += upstream[j] * z[j];
          return s;
        };
        const double numeric = oracle::central_difference(f, p.raw_weights[i], h);
        if (!oracle::gradient_agrees(analytic[i], numeric, 1e-6, 1e-8)) {
          std::ostringstream os;
          os << "cps weight " << i << " analytic=" << analytic[i] << " numeric=" << numeric;
          return os.str();
        }
      }
      return {};
    });
    suite.run_case([&]() -> std::string {
      Pcg64 rng(derive_seed({opts.seed, 506, static_cast<std::uint64_t>(c)}));
      const FeatureMatrix x = oracle::random_features(8, 30, rng, 1.0, 2.0);
      const double p = 1.5 + 4.0 * rng.uniform();
      std::vector<double> upstream(8);
      for (double& u : upstream) u = rng.normal();
      const double analytic = grad_gem_p(x, p, upstream);
      auto f = [&](double t) {
        const auto g = gem(x, t).values;
        double s = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) s += upstream[j] * g[j];
        return s;
      };
      const double numeric = oracle::central_difference(f, p, h);
      if (!oracle::gradient_agrees(analytic, numeric, 1e-6, 1e-8)) {
        std::ostringstream os;
        os << "gem p=" << p << " analytic=" << analytic << " numeric=" << numeric;
        return os.str();
      }
      return {};
    });
  }
  return suite.result();
}

SuiteResult roundtrip_suite(const SelftestOptions& opts) {
  Suite suite("file_round_trips");
  const int cases = opts.quick ? 3 : 10;
  for (int c = 0; c < cases; ++c) {
    Pcg64 rng(derive_seed({opts.seed, 606, static_cast<std::uint64_t>(c)}));
    suite.run_case([&]() -> std::string {
      const std::size_t dim = 1 + rng.below(40);
      PlaceDatabase db(dim, "cps@" + std::to_string(c));
      for (std::size_t r = 0; r < 25; ++r) {
        PlaceRecord rec{rng(), {rng.normal(), rng.normal(), rng.normal()}, {}};
        for (std::size_t i = 0; i < dim; ++i) rec.values.push_back(static_cast<float>(rng.normal()));
        db.insert(std::move(rec));
      }
      const auto bytes = encode_db(db);
      const PlaceDatabase back = decode_db(bytes);
      if (!(back == db) || encode_db(back) != bytes) return "CDB1 round trip differs";
      return {};
    });
    suite.run_case([&]() -> std::string {
      const FeatureMatrix x = oracle::random_features(1 + rng.below(10), 1 + rng.below(50), rng);
      if (decode_features(encode_features(x, FeatureDtype::kF64)) != x) {
        return "LFM1 f64 round trip differs";
      }
      const auto f32 = encode_features(x, FeatureDtype::kF32);
      if (encode_features(decode_features(f32), FeatureDtype::kF32) != f32) {
        return "LFM1 f32 round trip differs";
      }
      return {};
    });
    suite.run_case([&]() -> std::string {
      PointCloud cloud;
      cloud.points.resize(1 + rng.below(100));
      for (auto& p : cloud.points) p = {rng.normal(), rng.normal(), rng.normal()};
      if (decode_cloud(encode_cloud(cloud)) != cloud) return "LPC1 round trip differs";
      return {};
    });
  }
  return suite.result();
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& opts) {
  return {permutation_suite(opts), ns_oracle_suite(opts),  reduction_suite(opts),
          covariance_suite(opts),  gradient_suite(opts),   roundtrip_suite(opts)};
}

}  // namespace soapool

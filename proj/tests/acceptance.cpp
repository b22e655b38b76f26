// Acceptance suite: one [PASS]/[FAIL] line per criterion, each with the
// measured quantity and its wall time against the allowed budget. Exit
// status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "soapool/aggregate.hpp"
#include "soapool/bench.hpp"
#include "soapool/error.hpp"
#include "soapool/learn.hpp"
#include "soapool/oracles.hpp"
#include "soapool/retrieve.hpp"
#include "soapool/rng.hpp"
#include "soapool/synth.hpp"

using namespace soapool;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> body;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> normals(std::size_t n, Pcg64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// AC1
Outcome dimensions() {
  Pcg64 rng(1);
  const auto x = oracle::random_features(256, 64, rng);
  const std::size_t full = full_soa(x).dim();
  const std::size_t k2 = cps(x, CpsParams::uniform(2)).dim();
  const std::size_t k16 = cps(x, CpsParams::uniform(16)).dim();
  const bool closed = descriptor_dim(Method::kCov, 256) == 32896 &&
                      descriptor_dim(Method::kCps, 256, 2) == 8256 &&
                      descriptor_dim(Method::kCps, 256, 16) == 136;
  return {closed && full == 32896 && k2 == 8256 && k16 == 136,
          "full=" + std::to_string(full) + " k2=" + std::to_string(k2) +
              " k16=" + std::to_string(k16)};
}

// AC2
Outcome reduction_identity() {
  Pcg64 rng(2);
  int mismatches = 0;
  constexpr int cases = 100;
  for (int c = 0; c < cases; ++c) {
    const auto x = oracle::random_features(1 + rng.below(64), 1 + rng.below(200), rng,
                                           0.1 + 5 * rng.uniform(), rng.normal());
    auto params = CpsParams::uniform(1);
    params.raw_weights[0] = 10 * rng.normal();
    mismatches += cps(x, params).values != full_soa(x).values;
  }
  return {mismatches == 0, std::to_string(cases - mismatches) + "/" + std::to_string(cases) +
                               " bit-identical"};
}

double ns_rel_error(const SymMatrix& m, const SymMatrix& ref, int t) {
  NsConfig cfg;
  cfg.iterations = t;
  return relative_frobenius_error(ns_sqrt(m, cfg).dense(), ref.dense());
}

// AC3
Outcome ns_oracle() {
  Pcg64 rng(3);
  constexpr int cases = 100;
  int within = 0;
  double worst = 0;
  std::size_t worst_dim = 0;
  double worst_cond = 0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t dim = 2 + rng.below(63);
    const double cond = std::pow(10.0, 3.0 * rng.uniform());
    const auto m = oracle::random_spd(dim, cond, rng);
    const double e = ns_rel_error(m, sqrt_eig(m), 7);
    within += e <= 1e-4;
    if (e > worst) {
      worst = e;
      worst_dim = dim;
      worst_cond = cond;
    }
  }
  // Monotonicity. Once NS has converged both sides sit at the oracle's own
  // rounding level, so differences below 1e-12 are not counted as increases.
  int monotone = 0;
  constexpr int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    Pcg64 r(1000 + s);
    const auto m = oracle::random_spd(2 + r.below(63), std::pow(10.0, 3.0 * r.uniform()), r);
    const auto ref = sqrt_eig(m);
    bool ok = true;
    double prev = ns_rel_error(m, ref, 1);
    for (int t = 2; t <= 10; ++t) {
      const double e = ns_rel_error(m, ref, t);
      ok = ok && e <= prev + 1e-12;
      prev = e;
    }
    monotone += ok;
  }
  return {within == cases && monotone == seeds,
          "T=7 within 1e-4: " + std::to_string(within) + "/" + std::to_string(cases) +
              " (worst " + fmt(worst) + " at dim " + std::to_string(worst_dim) + ", cond " +
              fmt(worst_cond) + "); monotone T=1..10: " + std::to_string(monotone) + "/" +
              std::to_string(seeds)};
}

// AC4
Outcome permutation_invariance() {
  Pcg64 rng(4);
  constexpr int cases = 200;
  int ok_cases = 0;
  double worst = 0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t d = 2 * (1 + rng.below(12));
    const std::size_t n = 2 + rng.below(100);
    const auto x = oracle::random_features(d, n, rng, 0.5 + rng.uniform(), rng.normal());
    const auto px = x.permute_columns(random_permutation(n, rng));
    std::vector<std::size_t> divisors;
    for (std::size_t k = 1; k <= d; ++k)
      if (d % k == 0) divisors.push_back(k);
    auto cp = CpsParams::uniform(divisors[rng.below(divisors.size())]);
    cp.raw_weights = normals(cp.partition.k, rng);
    const std::vector<AggregatorSpec> specs{SpocSpec{}, MacSpec{}, GemSpec{1 + 7 * rng.uniform()},
                                            CovSpec{}, cp, CbpSpec{128, rng()},
                                            KernelSpec{0.5 + 2 * rng.uniform()}};
    double e = oracle::max_abs_diff(covariance(x).dense().data(), covariance(px).dense().data());
    for (const auto& s : specs)
      e = std::max(e, oracle::max_abs_diff(aggregate(x, s).values, aggregate(px, s).values));
    worst = std::max(worst, e);
    ok_cases += e <= 1e-12;
  }
  // Composition with the per-point backbone.
  int e2e_ok = 0;
  constexpr int clouds = 20;
  for (int c = 0; c < clouds; ++c) {
    PointCloud cloud;
    const std::size_t n = 10 + rng.below(200);
    for (std::size_t i = 0; i < n; ++i)
      cloud.points.push_back({rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(0, 4)});
    PointCloud permuted;
    for (auto i : random_permutation(n, rng)) permuted.points.push_back(cloud.points[i]);
    const ToyBackboneConfig bb{16, 1.0, rng()};
    const auto f = toy_backbone(cloud, bb), pf = toy_backbone(permuted, bb);
    const std::vector<AggregatorSpec> specs{SpocSpec{}, MacSpec{}, GemSpec{3.0}, CovSpec{},
                                            CpsParams::uniform(4), CbpSpec{256, 7},
                                            KernelSpec{}};
    double e = 0;
    for (const auto& s : specs)
      e = std::max(e, oracle::max_abs_diff(aggregate(f, s).values, aggregate(pf, s).values));
    worst = std::max(worst, e);
    e2e_ok += e <= 1e-12;
  }
  return {ok_cases == cases && e2e_ok == clouds,
          "fuzzed " + std::to_string(ok_cases) + "/" + std::to_string(cases) + ", backbone " +
              std::to_string(e2e_ok) + "/" + std::to_string(clouds) + ", max diff " + fmt(worst)};
}

// AC5
Outcome block_diagonal() {
  Pcg64 rng(5);
  constexpr int cases = 50;
  int recovered = 0, unaffected = 0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t k = 2 + rng.below(4);
    const std::size_t g = 1 + rng.below(8);
    const std::size_t d = k * g;
    const auto x = oracle::random_features(d, 2 + rng.below(80), rng);
    const std::size_t hot = rng.below(k);
    auto params = CpsParams::uniform(k);
    params.raw_weights[hot] = 1000.0;  // softmax rounds to the exact vertex
    const auto z = cps(x, params).values;
    recovered += z == upper_tri_vec(ns_sqrt(covariance(x.rows(hot * g, g))));

    // Cross-group entries of an injected covariance never reach z, for any
    // weights.
    auto random_w = CpsParams::uniform(k);
    random_w.raw_weights = normals(k, rng);
    const auto cov = covariance(x);
    const auto base = cps_from_covariance(cov, random_w).values;
    auto perturbed = cov;
    std::size_t i = rng.below(d), j = rng.below(d);
    while (i / g == j / g) {
      i = rng.below(d);
      j = rng.below(d);
    }
    perturbed.set(i, j, cov(i, j) + 1.0 + rng.uniform());
    unaffected += cps_from_covariance(perturbed, random_w).values == base;
  }
  return {recovered == cases && unaffected == cases,
          "one-hot recovery " + std::to_string(recovered) + "/" + std::to_string(cases) +
              ", zero delta under cross-group perturbation " + std::to_string(unaffected) + "/" +
              std::to_string(cases)};
}

// AC6
Outcome gradient_checks() {
  constexpr double h = 1e-5;
  Pcg64 rng(6);
  constexpr int cases = 50;
  int cps_ok = 0, gem_ok = 0;
  for (int c = 0; c < cases; ++c) {
    const auto x = oracle::random_features(16, 20 + rng.below(60), rng);
    auto params = CpsParams::uniform(4);
    params.raw_weights = normals(4, rng);
    const auto up = normals(descriptor_dim(Method::kCps, 16, 4), rng);
    const auto g = grad_cps_weights(x, params, up);
    bool ok = true;
    for (std::size_t i = 0; i < 4; ++i) {
      const double num = oracle::central_difference(
          [&](double t) {
            auto p = params;
            p.raw_weights[i] = t;
            return dot(up, cps(x, p).values);
          },
          params.raw_weights[i], h);
      ok = ok && oracle::gradient_agrees(g[i], num, 1e-6, 1e-8);
    }
    cps_ok += ok;
  }
  for (int c = 0; c < cases; ++c) {
    const std::size_t d = 8, n = 30;
    FeatureMatrix x(d, n);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < n; ++j) x.set(i, j, std::abs(rng.normal()) + 0.01);
    const auto up = normals(d, rng);
    const double p = 1.0 + 7.0 * rng.uniform();
    const double num = oracle::central_difference(
        [&](double t) { return dot(up, gem(x, t).values); }, p, h);
    gem_ok += oracle::gradient_agrees(grad_gem_p(x, p, up), num, 1e-6, 1e-8);
  }
  return {cps_ok == cases && gem_ok == cases,
          "cps " + std::to_string(cps_ok) + "/" + std::to_string(cases) + ", gem " +
              std::to_string(gem_ok) + "/" + std::to_string(cases)};
}

// AC7
Outcome covariance_oracle() {
  Pcg64 rng(7);
  constexpr int cases = 100;
  int ok = 0;
  double worst = 0;
  for (int c = 0; c < cases; ++c) {
    const auto x = oracle::random_features(1 + rng.below(16), 1 + rng.below(100), rng,
                                           0.1 + 3 * rng.uniform(), 2 * rng.normal());
    const auto got = covariance(x);
    const auto ref = oracle::covariance_outer_product(x);
    const double e = frobenius_norm(ref.dense()) == 0.0
                         ? frobenius_norm(got.dense())
                         : relative_frobenius_error(got.dense(), ref.dense());
    worst = std::max(worst, e);
    ok += e <= 1e-12;
  }
  return {ok == cases, std::to_string(ok) + "/" + std::to_string(cases) + ", worst " + fmt(worst)};
}

// AC8
Outcome cbp_expectation() {
  const FeatureMatrix x(8, 1, {0.9, -0.4, 0.3, 1.2, -0.7, 0.5, 0.1, -0.2});
  const FeatureMatrix y(8, 1, {1.0, -0.1, 0.6, 0.8, -0.5, 0.2, 0.4, 0.3});
  const double exact = std::pow(dot(x.data(), y.data()), 2);
  constexpr int seeds = 500;
  double mean = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto sk = make_sketch(static_cast<std::uint64_t>(s), 8, 64);
    mean += dot(cbp_ts(x, sk).values, cbp_ts(y, sk).values);
  }
  mean /= seeds;
  const double rel = std::abs(mean - exact) / exact;
  return {rel <= 0.10, "mean " + fmt(mean) + " vs exact " + fmt(exact) + " over " +
                           std::to_string(seeds) + " seeds, rel err " + fmt(rel)};
}

EvalReport evaluate_world(const SynthWorld& w, const ToyBackboneConfig& bb,
                          const AggregatorSpec& spec) {
  // Every traversal in one database, matched against itself: the
  // self-match rule drops each query's own record, leaving the other
  // traversals' scans of that place as positives.
  const auto db = merge(extract_all(w, bb, spec));
  return evaluate(db, db);
}

// AC9
Outcome end_to_end() {
  constexpr std::size_t places = 50, traversals = 3, points = 256;
  const ToyBackboneConfig bb{16, 1.0, 11};
  const auto world = gen_world(places, traversals, points, 0.0, 2024);
  const std::vector<AggregatorSpec> specs{SpocSpec{}, MacSpec{}, GemSpec{3.0},
                                          CovSpec{}, CpsParams::uniform(4), CbpSpec{1024, 3},
                                          KernelSpec{}};
  std::ostringstream detail;
  bool pass = true;
  for (const auto& s : specs) {
    const auto r = evaluate_world(world, bb, s);
    const bool ok = r.metric("R@1") == 1.0 && r.metric("MRR") == 1.0;
    pass = pass && ok;
    if (!ok)
      detail << method_name(method_of(s)) << " R@1=" << *r.metric("R@1")
             << " MRR=" << *r.metric("MRR") << "; ";
  }
  if (pass) detail << "noiseless R@1=MRR=1 for all 7 aggregators; ";

  detail << "cov R@1 over noise {0,0.05,0.1,0.5,2}:";
  double prev = 2.0;
  for (double sigma : {0.0, 0.05, 0.1, 0.5, 2.0}) {
    const auto r = evaluate_world(gen_world(places, traversals, points, sigma, 2024), bb, CovSpec{});
    const double r1 = *r.metric("R@1");
    const double slack = 1.0 / static_cast<double>(r.evaluable_queries);
    detail << ' ' << fmt(r1);
    if (r1 > prev + slack + 1e-12) pass = false;
    prev = r1;
  }
  return {pass, detail.str()};
}

// AC10
Outcome metric_arithmetic() {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* what) {
    if (!ok) bad.emplace_back(what);
  };
  check(recall_at_n({{1}, {2}, {3}}, {{1}, {2}, {3}}, 1) == 1.0, "all top-1");
  const RankedLists r4{{1, 8, 8, 8, 8}, {9, 2, 8, 8, 8}, {9, 8, 3, 8, 8}, {9, 8, 7, 6, 4}};
  check(recall_at_n(r4, {{1}, {2}, {3}, {4}}, 1) == 0.25, "ranks 1,2,3,5 n=1");
  check(one_percent_count(250) == 3, "1% of 250");
  check(one_percent_count(50) == 1, "1% of 50");
  check(recall_at_one_percent(r4, {{1}, {2}, {3}, {4}}, 250) ==
            recall_at_n(r4, {{1}, {2}, {3}, {4}}, 3),
        "1% equals recall_at_n");
  const RankedLists r3{{1, 9, 9, 9}, {9, 2, 9, 9}, {9, 9, 9, 3}};
  check(std::abs(mrr(r3, {{1}, {2}, {3}}) - 7.0 / 12.0) <= 1e-9, "mrr ranks 1,2,4");
  check(mrr({{1}, {2}}, {{1}, {2}}) == 1.0, "mrr all rank 1");
  check(mrr({{5}}, {{1}}) == 0.0, "mrr none retrieved");
  check(triplet_loss(Descriptor({0.0}, "t"), Descriptor({1.0}, "t"), Descriptor({3.0}, "t"), 0.5) ==
            0.0,
        "triplet scalar");
  try {
    recall_at_n({{1}}, {{}}, 1);
    bad.emplace_back("no valid queries");
  } catch (const Error& e) {
    check(e.kind() == ErrorKind::kNoValidQueries, "no valid queries kind");
  }
  std::string detail = "10 fixtures";
  for (const auto& b : bad) detail += "; failed: " + b;
  return {bad.empty(), detail};
}

ErrorKind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInvalidArgument;
}

// AC11
Outcome persistence() {
  Pcg64 rng(11);
  PlaceDatabase db(24, "cps@0123456789abcdef");
  for (PlaceId i = 0; i < 100; ++i) {
    std::vector<float> v(24);
    for (auto& f : v) f = static_cast<float>(rng.normal());
    db.insert({pack_record_id(i % 3, static_cast<std::uint32_t>(i)),
               {rng.uniform(0, 1000), rng.uniform(0, 1000), 0.0}, v});
  }
  const auto db_bytes = encode_db(db);
  const bool db_rt = decode_db(db_bytes) == db && encode_db(decode_db(db_bytes)) == db_bytes;
  const auto x = oracle::random_features(16, 33, rng);
  const auto f32 = encode_features(x, FeatureDtype::kF32);
  const auto f64 = encode_features(x, FeatureDtype::kF64);
  const bool lfm_rt = encode_features(decode_features(f32), FeatureDtype::kF32) == f32 &&
                      encode_features(decode_features(f64), FeatureDtype::kF64) == f64 &&
                      decode_features(f64) == x;

  int distinct = 0;
  for (const auto* bytes : {&db_bytes, &f32}) {
    const bool is_db = bytes == &db_bytes;
    auto decode = [&](const std::vector<std::uint8_t>& b) {
      if (is_db)
        decode_db(b);
      else
        decode_features(b);
    };
    auto magic = *bytes;
    magic[0] ^= 0xFF;
    auto version = *bytes;
    version[4] = 2;
    const std::vector<std::uint8_t> cut(bytes->begin(), bytes->end() - 7);
    distinct += error_kind([&] { decode(magic); }) == ErrorKind::kBadMagic;
    distinct += error_kind([&] { decode(version); }) == ErrorKind::kVersionMismatch;
    distinct += error_kind([&] { decode(cut); }) == ErrorKind::kTruncated;
  }
  return {db_rt && lfm_rt && distinct == 6,
          std::string("CDB1 round trip ") + (db_rt ? "exact" : "DIFFERS") + ", LFM1 round trip " +
              (lfm_rt ? "exact" : "DIFFERS") + ", corruption classes " +
              std::to_string(distinct) + "/6"};
}

// AC12
Outcome bench_ordering() {
  const double small = measure_distance_throughput(136, 12, 0.2);
  const double large = measure_distance_throughput(32896, 12, 0.2);
  return {small > large, "dim 136: " + fmt(small) + " evals/s, dim 32896: " + fmt(large) +
                             " evals/s"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "dimension reproduction", 1, dimensions},
      {"AC2", "cps k=1 reduction identity", 30, reduction_identity},
      {"AC3", "NS vs eig oracle", 60, ns_oracle},
      {"AC4", "permutation invariance", 60, permutation_invariance},
      {"AC5", "block-diagonal coverage", 60, block_diagonal},
      {"AC6", "gradient checks", 30, gradient_checks},
      {"AC7", "covariance oracle", 60, covariance_oracle},
      {"AC8", "CBP sketch expectation", 60, cbp_expectation},
      {"AC9", "end-to-end retrieval", 180, end_to_end},
      {"AC10", "metric arithmetic", 60, metric_arithmetic},
      {"AC11", "persistence", 60, persistence},
      {"AC12", "bench throughput ordering", 60, bench_ordering},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << c.id << ' ' << c.title << ": " << o.detail
              << " (" << fmt(secs) << " s, limit " << fmt(c.budget_s) << " s"
              << (in_time ? "" : ", OVER BUDGET") << ")\n";
  }
  std::cout << (criteria.size() - failed) << '/' << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

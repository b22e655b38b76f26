#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soapool/aggregate.hpp"

namespace soapool {

struct BenchConfig {
  std::size_t d = 256;
  std::vector<std::size_t> k_list{1, 2, 4, 8, 16};
  std::size_t n_points = 1024;
  int repeats = 3;
  std::size_t sketch_dim = 8192;
  std::uint64_t seed = 0;
  /// Minimum wall time spent measuring distance throughput per row.
  double min_measure_seconds = 0.05;
};

struct BenchRow {
  std::string method;
  std::size_t k = 1;
  std::size_t dim = 0;
  std::size_t bytes = 0;  // dim * 4, the on-disk descriptor size
  double agg_us_per_scan = 0.0;
  double dist_evals_per_s = 0.0;
};

/// Full-scan Euclidean distance evaluations per second at the given
/// descriptor dim, over a random float database.
double measure_distance_throughput(std::size_t dim, std::uint64_t seed,
                                   double min_seconds = 0.05);

/// One row per first-order method, cov, kernel, cbp, and one cps row per k.
std::vector<BenchRow> run_bench(const BenchConfig& cfg);

inline constexpr const char* kBenchCsvHeader =
    "method,k,dim,bytes,agg_us_per_scan,dist_evals_per_s";

std::string bench_table(const std::vector<BenchRow>& rows);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace soapool

#include "soapool/bench.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

#include "soapool/error.hpp"
#include "soapool/oracles.hpp"
#include "soapool/retrieve.hpp"

namespace soapool {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

double measure_distance_throughput(std::size_t dim, std::uint64_t seed, double min_seconds) {
  Pcg64 rng(derive_seed({seed, dim}));
  // Keep the database around 8 MB so every dim streams through memory.
  const std::size_t records = std::max<std::size_t>(16, (8u << 20) / (dim * sizeof(float)));
  PlaceDatabase db(dim, "bench");
  for (std::size_t r = 0; r < records; ++r) {
    PlaceRecord rec{r, {}, std::vector<float>(dim)};
    for (float& v : rec.values) v = static_cast<float>(rng.normal());
    db.insert(std::move(rec));
  }
  std::vector<double> query(dim);
  for (double& v : query) v = rng.normal();

  std::size_t evals = 0;
  volatile double sink = 0.0;
  const auto start = Clock::now();
  do {
    sink = sink + db.knn(query, 1).front().distance;
    evals += records;
  } while (seconds_since(start) < min_seconds);
  const double elapsed = seconds_since(start);
  return static_cast<double>(evals) / elapsed;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  if (cfg.d == 0 || cfg.n_points == 0 || cfg.repeats < 1) {
    throw Error(ErrorKind::kInvalidArgument, "bench: d, n-points and repeats must be >= 1");
  }
  Pcg64 rng(derive_seed({cfg.seed, cfg.d, cfg.n_points}));
  const FeatureMatrix x = oracle::random_features(cfg.d, cfg.n_points, rng);

  std::vector<std::pair<std::size_t, AggregatorSpec>> specs;
  specs.emplace_back(1, SpocSpec{});
  specs.emplace_back(1, MacSpec{});
  specs.emplace_back(1, GemSpec{});
  specs.emplace_back(1, CovSpec{});
  for (std::size_t k : cfg.k_list) specs.emplace_back(k, CpsParams::uniform(k));
  specs.emplace_back(1, CbpSpec{cfg.sketch_dim, cfg.seed});
  specs.emplace_back(1, KernelSpec{});

  std::vector<BenchRow> rows;
  for (const auto& [k, spec] : specs) {
    BenchRow row;
    row.method = std::string(method_name(method_of(spec)));
    row.k = k;
    row.dim = descriptor_dim(method_of(spec), cfg.d, k, cfg.sketch_dim);
    row.bytes = row.dim * sizeof(float);

    std::size_t produced = 0;
    const auto start = Clock::now();
    for (int r = 0; r < cfg.repeats; ++r) produced = aggregate(x, spec).dim();
    row.agg_us_per_scan = seconds_since(start) * 1e6 / cfg.repeats;
    if (produced != row.dim) {
      throw Error(ErrorKind::kNumerical, "bench: produced dim differs from descriptor_dim");
    }
    row.dist_evals_per_s =
        measure_distance_throughput(row.dim, cfg.seed, cfg.min_measure_seconds);
    rows.push_back(row);
  }
  return rows;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "method" << std::right << std::setw(5) << "k"
     << std::setw(9) << "dim" << std::setw(10) << "bytes" << std::setw(16) << "agg_us/scan"
     << std::setw(18) << "dist_evals/s" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << r.method << std::right << std::setw(5) << r.k
       << std::setw(9) << r.dim << std::setw(10) << r.bytes << std::setw(16) << std::fixed
       << std::setprecision(1) << r.agg_us_per_scan << std::setw(18) << std::scientific
       << std::setprecision(3) << r.dist_evals_per_s << '\n';
    os.unsetf(std::ios::floatfield);
  }
  return os.str();
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.method << ',' << r.k << ',' << r.dim << ',' << r.bytes << ','
       << std::setprecision(6) << r.agg_us_per_scan << ',' << r.dist_evals_per_s << '\n';
  }
  return os.str();
}

}  // namespace soapool

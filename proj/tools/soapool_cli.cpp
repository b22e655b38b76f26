// soapool: synthetic data generation, descriptor aggregation, database
// evaluation and the dimension/throughput benchmark.
//
// Exit codes: 0 success, 1 self-test failure, 2 invalid input or flags,
// 3 incomparable descriptor databases.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "soapool/aggregate.hpp"
#include "soapool/bench.hpp"
#include "soapool/binary_io.hpp"
#include "soapool/error.hpp"
#include "soapool/retrieve.hpp"
#include "soapool/selftest.hpp"
#include "soapool/synth.hpp"

namespace fs = std::filesystem;
using namespace soapool;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSelftest = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitIncomparable = 3;

struct MethodFlags {
  std::string method = "cps";
  double p = 3.0;
  std::size_t k = 2;
  int ns_iters = 5;
  std::size_t sketch_dim = 8192;
  double sigma = 1.0;
  std::vector<double> weights;
  std::uint64_t sketch_seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--method", method, "spoc|mac|gem|cov|cps|cbp|kernel")
        ->check(CLI::IsMember({"spoc", "mac", "gem", "cov", "cps", "cbp", "kernel"}))
        ->capture_default_str();
    app->add_option("--p", p, "GeM exponent (>= 1)")->capture_default_str();
    app->add_option("--k", k, "CPS partition count")->capture_default_str();
    app->add_option("--ns-iters", ns_iters, "Newton-Schulz iterations")->capture_default_str();
    app->add_option("--sketch-dim", sketch_dim, "CBP sketch dimension")->capture_default_str();
    app->add_option("--sigma", sigma, "RBF kernel width")->capture_default_str();
    app->add_option("--weights", weights, "CPS raw weight logits (default: zeros)")
        ->delimiter(',');
    app->add_option("--sketch-seed", sketch_seed, "CBP hash seed")->capture_default_str();
  }

  AggregatorSpec spec() const {
    const NsConfig ns{ns_iters, 1e-12};
    switch (parse_method(method)) {
      case Method::kSpoc: return SpocSpec{};
      case Method::kMac: return MacSpec{};
      case Method::kGem: return GemSpec{p};
      case Method::kCov: return CovSpec{ns};
      case Method::kCps: {
        CpsParams params = CpsParams::uniform(k, ns);
        if (!weights.empty()) params.raw_weights = weights;
        return params;
      }
      case Method::kCbp: return CbpSpec{sketch_dim, sketch_seed};
      case Method::kKernel: return KernelSpec{sigma, ns};
    }
    throw Error(ErrorKind::kInvalidArgument, "unknown method " + method);
  }
};

struct BackboneFlags {
  std::size_t channels = 16;
  double frequency_scale = 1.0;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--channels", channels, "toy backbone output channels (even)")
        ->capture_default_str();
    app->add_option("--freq-scale", frequency_scale, "toy backbone frequency scale")
        ->capture_default_str();
    app->add_option("--backbone-seed", seed, "toy backbone seed")->capture_default_str();
  }

  ToyBackboneConfig config() const { return {channels, frequency_scale, seed}; }
};

struct ManifestEntry {
  std::uint32_t traversal = 0;
  std::uint32_t place = 0;
  fs::path path;
  Position position{};
};

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest '" + manifest.string() + "'");
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string rel;
    if (!(ls >> e.traversal >> e.place >> rel >> e.position[0] >> e.position[1] >>
          e.position[2])) {
      throw Error(ErrorKind::kFormat,
                  "manifest line " + std::to_string(lineno) + " is malformed");
    }
    e.path = manifest.parent_path() / rel;
    entries.push_back(e);
  }
  return entries;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_gen_synth(std::size_t places, std::size_t traversals, std::size_t points,
                  double noise, std::uint64_t seed, const fs::path& out_dir) {
  const SynthWorld world = gen_world(places, traversals, points, noise, seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + out_dir.string() + "': " + ec.message());

  std::ostringstream manifest;
  manifest << "# traversal place path x y z\n";
  std::size_t files = 0;
  for (const auto& trav : world.traversals) {
    for (const auto& scan : trav.scans) {
      const std::string name =
          "t" + std::to_string(trav.id) + "_p" + std::to_string(scan.place_id) + ".lpc";
      save_cloud(scan.cloud, out_dir / name);
      const Position& pos = world.places[scan.place_id].position;
      manifest << trav.id << ' ' << scan.place_id << ' ' << name << ' '
               << format_double(pos[0]) << ' ' << format_double(pos[1]) << ' '
               << format_double(pos[2]) << '\n';
      ++files;
    }
  }
  const std::string text = manifest.str();
  write_file(out_dir / "manifest.txt",
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  std::cout << "clouds=" << files << "\nmanifest=" << (out_dir / "manifest.txt").string()
            << '\n';
  return kExitOk;
}

int cmd_features(const fs::path& cloud_path, const fs::path& out, const BackboneFlags& bb,
                 const std::string& dtype) {
  const FeatureMatrix x = toy_backbone(load_cloud(cloud_path), bb.config());
  save_features(x, out, dtype == "f64" ? FeatureDtype::kF64 : FeatureDtype::kF32);
  std::cout << "d=" << x.channels() << "\nN=" << x.points() << '\n';
  return kExitOk;
}

int cmd_aggregate(const fs::path& input, const MethodFlags& mf, const fs::path& out,
                  const fs::path& db_path, std::uint64_t id,
                  const std::vector<double>& pos) {
  const FeatureMatrix x = load_features(input);
  const Descriptor desc = aggregate(x, mf.spec());
  Position position{};
  for (std::size_t i = 0; i < pos.size() && i < 3; ++i) position[i] = pos[i];

  if (!db_path.empty()) {
    PlaceDatabase db = fs::exists(db_path) ? load_db(db_path)
                                           : PlaceDatabase(desc.dim(), desc.method_tag);
    db.insert(id, position, desc);
    save_db(db, db_path);
  } else {
    PlaceDatabase db(desc.dim(), desc.method_tag);
    db.insert(id, position, desc);
    save_db(db, out);
  }
  std::cout << "method_tag=" << desc.method_tag << "\ndim=" << desc.dim() << '\n';
  return kExitOk;
}

int cmd_build_db(const fs::path& manifest, const std::vector<std::uint32_t>& traversals,
                 const BackboneFlags& bb, const MethodFlags& mf, const fs::path& out) {
  const AggregatorSpec spec = mf.spec();
  std::optional<PlaceDatabase> db;
  for (const auto& e : read_manifest(manifest)) {
    if (std::find(traversals.begin(), traversals.end(), e.traversal) == traversals.end()) {
      continue;
    }
    const Descriptor desc = aggregate(toy_backbone(load_cloud(e.path), bb.config()), spec);
    if (!db) db.emplace(desc.dim(), desc.method_tag);
    db->insert(pack_record_id(e.traversal, e.place), e.position, desc);
  }
  if (!db) throw Error(ErrorKind::kInvalidArgument, "build-db: no manifest entries selected");
  save_db(*db, out);
  std::cout << "records=" << db->size() << "\nmethod_tag=" << db->method_tag()
            << "\ndim=" << db->dim() << '\n';
  return kExitOk;
}

int cmd_query(const fs::path& ref_path, const fs::path& query_path, std::size_t n) {
  const PlaceDatabase ref = load_db(ref_path);
  const PlaceDatabase queries = load_db(query_path);
  if (ref.method_tag() != queries.method_tag() || ref.dim() != queries.dim()) {
    throw Error(ErrorKind::kIncomparable, "incomparable descriptors: '" +
                                              queries.method_tag() + "' vs '" +
                                              ref.method_tag() + "'");
  }
  std::vector<double> q(ref.dim());
  for (const auto& rec : queries.records()) {
    std::copy(rec.values.begin(), rec.values.end(), q.begin());
    std::cout << rec.id << ':';
    for (const auto& nb : ref.knn(q, n)) std::cout << ' ' << nb.id << '/' << nb.distance;
    std::cout << '\n';
  }
  return kExitOk;
}

int cmd_eval(const fs::path& query_path, const fs::path& ref_path, const EvalProtocol& protocol,
             bool key_value) {
  const EvalReport report = evaluate(load_db(query_path), load_db(ref_path), protocol);
  std::cout << std::left << std::setw(10) << "metric" << "value\n";
  for (const auto& [name, value] : report.metrics) {
    std::cout << std::left << std::setw(10) << name << std::fixed << std::setprecision(4)
              << value << '\n';
  }
  std::cout << std::left << std::setw(10) << "queries" << report.evaluable_queries << '/'
            << report.query_count << '\n';
  if (key_value) {
    for (const auto& [name, value] : report.metrics) {
      std::cout << name << '=' << std::fixed << std::setprecision(4) << value << '\n';
    }
    std::cout << "evaluable_queries=" << report.evaluable_queries << '\n';
  }
  return kExitOk;
}

int cmd_bench(const BenchConfig& cfg, const fs::path& csv) {
  const auto rows = run_bench(cfg);
  std::cout << bench_table(rows);
  if (!csv.empty()) {
    const std::string text = bench_csv(rows);
    write_file(csv, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  return kExitOk;
}

int cmd_selftest(const SelftestOptions& opts) {
  bool ok = true;
  for (const auto& suite : run_selftest(opts)) {
    std::cout << (suite.ok() ? "PASS " : "FAIL ") << suite.name << ' ' << suite.passed << '/'
              << suite.total << '\n';
    if (!suite.ok()) {
      if (ok) std::cout << "counterexample: " << suite.name << ": " << suite.first_failure << '\n';
      ok = false;
    }
  }
  return ok ? kExitOk : kExitSelftest;
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::kIncomparable ? kExitIncomparable : kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Second-order descriptor aggregation and place retrieval toolkit"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->envname("SOAPOOL_SEED")->capture_default_str();
  };

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "write a synthetic world as LPC1 clouds + manifest");
  std::size_t places = 10, traversals = 2, points = 256;
  double noise = 0.0;
  fs::path out_dir = "synth";
  gen->add_option("--places", places)->check(CLI::Range(std::size_t{2}, std::size_t{1u << 20}))->capture_default_str();
  gen->add_option("--traversals", traversals)->check(CLI::Range(std::size_t{2}, std::size_t{1u << 16}))->capture_default_str();
  gen->add_option("--points", points)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--noise", noise)->check(CLI::NonNegativeNumber)->capture_default_str();
  gen->add_option("--out-dir", out_dir)->capture_default_str();
  add_seed(gen);

  // features
  auto* feat = app.add_subcommand("features", "run the toy backbone on an LPC1 cloud -> LFM1");
  fs::path cloud_in, feat_out;
  std::string dtype = "f32";
  BackboneFlags feat_bb;
  feat->add_option("--cloud", cloud_in)->required();
  feat->add_option("--out", feat_out)->required();
  feat->add_option("--dtype", dtype)->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();
  feat_bb.add_to(feat);

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "pool an LFM1 feature matrix into a descriptor");
  fs::path agg_in, agg_out = "descriptor.cdb", agg_db;
  std::uint64_t agg_id = 0;
  std::vector<double> agg_pos;
  MethodFlags agg_mf;
  agg->add_option("--input", agg_in, "LFM1 feature file")->required();
  agg->add_option("--out", agg_out, "one-record CDB1 output")->capture_default_str();
  agg->add_option("--db", agg_db, "append to this CDB1 database instead");
  agg->add_option("--id", agg_id, "record id")->capture_default_str();
  agg->add_option("--pos", agg_pos, "record position x,y,z")->delimiter(',')->expected(3);
  agg_mf.add_to(agg);

  // build-db
  auto* build = app.add_subcommand("build-db", "aggregate every manifest scan of some traversals");
  fs::path manifest, build_out;
  std::vector<std::uint32_t> build_trav{0};
  BackboneFlags build_bb;
  MethodFlags build_mf;
  build->add_option("--manifest", manifest)->required();
  build->add_option("--traversal", build_trav, "traversal ids to include")
      ->delimiter(',')
      ->capture_default_str();
  build->add_option("--out", build_out)->required();
  build_bb.add_to(build);
  build_mf.add_to(build);

  // query
  auto* query = app.add_subcommand("query", "exact kNN of every query record against a database");
  fs::path query_ref, query_db;
  std::size_t query_n = 5;
  query->add_option("--db", query_ref)->required();
  query->add_option("--query-db", query_db)->required();
  query->add_option("--n", query_n)->check(CLI::PositiveNumber)->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "retrieval metrics of a query database vs a reference");
  fs::path eval_q, eval_r;
  EvalProtocol protocol;
  protocol.report_one_percent = false;
  protocol.report_mrr = false;
  bool key_value = false, allow_self = false;
  eval->add_option("--query-db", eval_q)->required();
  eval->add_option("--ref-db", eval_r)->required();
  eval->add_option("--threshold", protocol.revisit_threshold_m, "revisit threshold (m)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--top-n", protocol.top_ns, "recall cut-offs")->delimiter(',');
  eval->add_flag("--one-percent", protocol.report_one_percent, "report R@1%");
  eval->add_flag("--mrr", protocol.report_mrr, "report MRR");
  eval->add_flag("--allow-self-match", allow_self, "keep reference records sharing the query id");
  eval->add_flag("--kv", key_value, "also print metric=value lines");

  // bench
  auto* bench = app.add_subcommand("bench", "descriptor dim / storage / throughput table");
  BenchConfig bench_cfg;
  bench_cfg.n_points = 512;
  fs::path bench_csv_path;
  bench->add_option("--d", bench_cfg.d)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--k-list", bench_cfg.k_list)->delimiter(',');
  bench->add_option("--n-points", bench_cfg.n_points)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--repeats", bench_cfg.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--sketch-dim", bench_cfg.sketch_dim)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--csv", bench_csv_path, "also write CSV here");
  add_seed(bench);

  // selftest
  auto* self = app.add_subcommand("selftest", "run the property suites");
  SelftestOptions st;
  self->add_flag("--quick", st.quick, "reduced case counts");
  self->add_flag("--break-ns", st.break_ns, "test hook: run the NS suite with T = 1");
  add_seed(self);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  for (const auto* sub : app.get_subcommands()) {
    std::cerr << "# resolved configuration: " << sub->get_name() << '\n'
              << sub->config_to_str(true, false);
  }

  try {
    if (*gen) return cmd_gen_synth(places, traversals, points, noise, seed, out_dir);
    if (*feat) return cmd_features(cloud_in, feat_out, feat_bb, dtype);
    if (*agg) return cmd_aggregate(agg_in, agg_mf, agg_out, agg_db, agg_id, agg_pos);
    if (*build) return cmd_build_db(manifest, build_trav, build_bb, build_mf, build_out);
    if (*query) return cmd_query(query_ref, query_db, query_n);
    if (*eval) {
      protocol.exclude_self_match = !allow_self;
      return cmd_eval(eval_q, eval_r, protocol, key_value);
    }
    if (*bench) {
      bench_cfg.seed = seed;
      return cmd_bench(bench_cfg, bench_csv_path);
    }
    if (*self) {
      st.seed = seed;
      return cmd_selftest(st);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

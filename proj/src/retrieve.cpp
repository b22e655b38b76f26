#include "soapool/retrieve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "soapool/binary_io.hpp"
#include "soapool/error.hpp"

namespace soapool {
namespace {

constexpr std::string_view kDbMagic = "CDB1";
constexpr std::uint16_t kDbVersion = 1;

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.id < b.id;
}

std::size_t evaluable(const RankedLists& results, const PositiveSets& truth) {
  if (results.size() != truth.size()) {
    std::ostringstream os;
    os << "metrics: " << results.size() << " result lists for " << truth.size()
       << " ground-truth sets";
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
  std::size_t count = 0;
  for (const auto& t : truth) count += t.empty() ? 0 : 1;
  if (count == 0) throw Error(ErrorKind::kNoValidQueries, "no valid queries");
  return count;
}

double distance3(const Position& a, const Position& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

PlaceDatabase::PlaceDatabase(std::size_t dim, std::string method_tag)
    : dim_(dim), method_tag_(std::move(method_tag)) {
  if (dim_ == 0) throw Error(ErrorKind::kInvalidArgument, "PlaceDatabase: dim must be >= 1");
}

void PlaceDatabase::insert(PlaceRecord record) {
  if (record.values.size() != dim_) {
    std::ostringstream os;
    os << "db_insert: record dim " << record.values.size() << " != database dim " << dim_;
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
  if (ids_.contains(record.id)) {
    throw Error(ErrorKind::kDuplicateId,
                "db_insert: duplicate id " + std::to_string(record.id));
  }
  for (float v : record.values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kNumerical, "db_insert: non-finite descriptor value");
    }
  }
  ids_.insert(record.id);
  records_.push_back(std::move(record));
}

void PlaceDatabase::insert(PlaceId id, const Position& position,
                           const Descriptor& descriptor) {
  if (descriptor.method_tag != method_tag_) {
    throw Error(ErrorKind::kIncomparable, "db_insert: descriptor tag '" +
                                              descriptor.method_tag +
                                              "' != database tag '" + method_tag_ + "'");
  }
  PlaceRecord record{id, position, {}};
  record.values.reserve(descriptor.dim());
  for (double v : descriptor.values) record.values.push_back(static_cast<float>(v));
  insert(std::move(record));
}

std::vector<Neighbor> PlaceDatabase::knn(std::span<const double> query, std::size_t n,
                                         std::optional<PlaceId> exclude) const {
  if (query.size() != dim_) {
    std::ostringstream os;
    os << "knn: query dim " << query.size() << " != database dim " << dim_;
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "knn: n must be >= 1");
  if (records_.empty()) throw Error(ErrorKind::kEmptyDatabase, "knn: empty database");

  std::vector<Neighbor> all;
  all.reserve(records_.size());
  for (const auto& r : records_) {
    if (exclude && r.id == *exclude) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double diff = static_cast<double>(r.values[i]) - query[i];
      s += diff * diff;
    }
    all.push_back({r.id, std::sqrt(s)});
  }
  const std::size_t keep = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    neighbor_less);
  all.resize(keep);
  return all;
}

std::vector<Neighbor> PlaceDatabase::knn(const Descriptor& query, std::size_t n,
                                         std::optional<PlaceId> exclude) const {
  return knn(std::span<const double>(query.values), n, exclude);
}

PlaceDatabase merge(std::span<const PlaceDatabase> dbs) {
  if (dbs.empty()) throw Error(ErrorKind::kInvalidArgument, "merge: no databases");
  PlaceDatabase out(dbs.front().dim(), dbs.front().method_tag());
  for (const auto& db : dbs) {
    if (db.dim() != out.dim() || db.method_tag() != out.method_tag()) {
      throw Error(ErrorKind::kIncomparable, "merge: databases differ in dim or method tag");
    }
    for (const auto& r : db.records()) out.insert(r);
  }
  return out;
}

double recall_at_n(const RankedLists& results, const PositiveSets& truth, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "recall_at_n: n must be >= 1");
  const std::size_t count = evaluable(results, truth);
  std::size_t hits = 0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    if (truth[q].empty()) continue;
    const std::size_t upto = std::min(n, results[q].size());
    for (std::size_t r = 0; r < upto; ++r) {
      if (truth[q].contains(results[q][r])) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(count);
}

std::size_t one_percent_count(std::size_t db_size) {
  if (db_size == 0) throw Error(ErrorKind::kInvalidArgument, "recall@1%: db_size must be >= 1");
  return std::max<std::size_t>(1, (db_size + 50) / 100);
}

double recall_at_one_percent(const RankedLists& results, const PositiveSets& truth,
                             std::size_t db_size) {
  return recall_at_n(results, truth, one_percent_count(db_size));
}

double mrr(const RankedLists& results, const PositiveSets& truth) {
  const std::size_t count = evaluable(results, truth);
  double total = 0.0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    if (truth[q].empty()) continue;
    for (std::size_t r = 0; r < results[q].size(); ++r) {
      if (truth[q].contains(results[q][r])) {
        total += 1.0 / static_cast<double>(r + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(count);
}

void EvalProtocol::validate() const {
  if (!(revisit_threshold_m > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "evaluate: revisit threshold must be > 0");
  }
  if (top_ns.empty()) throw Error(ErrorKind::kInvalidArgument, "evaluate: empty top_ns");
  for (std::size_t i = 0; i < top_ns.size(); ++i) {
    if (top_ns[i] == 0 || (i > 0 && top_ns[i] <= top_ns[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument,
                  "evaluate: top_ns must be positive and strictly ascending");
    }
  }
}

std::optional<double> EvalReport::metric(std::string_view name) const {
  for (const auto& [key, value] : metrics) {
    if (key == name) return value;
  }
  return std::nullopt;
}

EvalReport evaluate(const PlaceDatabase& queries, const PlaceDatabase& reference,
                    const EvalProtocol& protocol) {
  protocol.validate();
  if (queries.method_tag() != reference.method_tag() || queries.dim() != reference.dim()) {
    std::ostringstream os;
    os << "incomparable descriptors: query database '" << queries.method_tag() << "' (dim "
       << queries.dim() << ") vs reference database '" << reference.method_tag() << "' (dim "
       << reference.dim() << ")";
    throw Error(ErrorKind::kIncomparable, os.str());
  }
  if (reference.empty()) throw Error(ErrorKind::kEmptyDatabase, "evaluate: empty reference");

  std::size_t depth = protocol.top_ns.back();
  if (protocol.report_one_percent) {
    depth = std::max(depth, one_percent_count(reference.size()));
  }

  RankedLists results;
  PositiveSets truth;
  std::vector<double> query(queries.dim());
  for (const auto& q : queries.records()) {
    const std::optional<PlaceId> exclude =
        protocol.exclude_self_match ? std::optional<PlaceId>(q.id) : std::nullopt;
    std::unordered_set<PlaceId> positives;
    for (const auto& r : reference.records()) {
      if (exclude && r.id == *exclude) continue;
      if (distance3(q.position, r.position) <= protocol.revisit_threshold_m) {
        positives.insert(r.id);
      }
    }
    std::copy(q.values.begin(), q.values.end(), query.begin());
    std::vector<PlaceId> ranked;
    for (const auto& nb : reference.knn(query, depth, exclude)) ranked.push_back(nb.id);
    results.push_back(std::move(ranked));
    truth.push_back(std::move(positives));
  }

  EvalReport report;
  report.query_count = queries.size();
  report.evaluable_queries = evaluable(results, truth);
  for (std::size_t n : protocol.top_ns) {
    report.metrics.emplace_back("R@" + std::to_string(n), recall_at_n(results, truth, n));
  }
  if (protocol.report_one_percent) {
    report.metrics.emplace_back("R@1%",
                                recall_at_one_percent(results, truth, reference.size()));
  }
  if (protocol.report_mrr) report.metrics.emplace_back("MRR", mrr(results, truth));
  return report;
}

std::vector<std::uint8_t> encode_db(const PlaceDatabase& db) {
  if (db.method_tag().size() > 0xFFFF) {
    throw Error(ErrorKind::kInvalidArgument, "save_db: method tag longer than 65535 bytes");
  }
  ByteWriter w;
  w.bytes(kDbMagic);
  w.u16(kDbVersion);
  w.u32(static_cast<std::uint32_t>(db.dim()));
  w.u32(static_cast<std::uint32_t>(db.size()));
  w.u16(static_cast<std::uint16_t>(db.method_tag().size()));
  w.bytes(db.method_tag());
  for (const auto& r : db.records()) {
    w.u64(r.id);
    for (double c : r.position) w.f64(c);
    for (float v : r.values) w.f32(v);
  }
  w.crc();
  return w.buffer();
}

PlaceDatabase decode_db(std::span<const std::uint8_t> bytes) {
  ByteReader r = open_envelope(bytes, kDbMagic, kDbVersion, "CDB1");
  const std::size_t dim = r.u32();
  const std::size_t count = r.u32();
  const std::size_t tag_len = r.u16();
  const std::size_t record_bytes = 8 + 3 * 8 + 4 * dim;
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(count) * record_bytes + r.offset() + tag_len + 4;
  if (wide > bytes.size()) {
    std::ostringstream os;
    os << "CDB1: truncated payload (expected " << static_cast<unsigned long long>(wide)
       << " bytes, got " << bytes.size() << ")";
    throw Error(ErrorKind::kTruncated, os.str());
  }
  check_length_and_crc(bytes, static_cast<std::size_t>(wide), "CDB1");

  PlaceDatabase db(dim, r.bytes(tag_len));
  for (std::size_t i = 0; i < count; ++i) {
    PlaceRecord rec;
    rec.id = r.u64();
    for (double& c : rec.position) c = r.f64();
    rec.values.resize(dim);
    for (float& v : rec.values) v = r.f32();
    db.insert(std::move(rec));
  }
  return db;
}

void save_db(const PlaceDatabase& db, const std::filesystem::path& path) {
  write_file(path, encode_db(db));
}

PlaceDatabase load_db(const std::filesystem::path& path) {
  return decode_db(read_file(path));
}

}  // namespace soapool

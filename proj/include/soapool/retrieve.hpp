#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "soapool/aggregate.hpp"

namespace soapool {

using PlaceId = std::uint64_t;
using Position = std::array<double, 3>;

/// Descriptor values are held as 4-byte floats, the on-disk precision, so
/// a database compares equal to itself after a save/load round trip.
struct PlaceRecord {
  PlaceId id = 0;
  Position position{};
  std::vector<float> values;

  friend bool operator==(const PlaceRecord&, const PlaceRecord&) = default;
};

struct Neighbor {
  PlaceId id;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact-search descriptor database. Records keep insertion order.
///
/// Single writer, many readers: const members may be called concurrently on
/// an instance nobody is inserting into.
class PlaceDatabase {
 public:
  PlaceDatabase(std::size_t dim, std::string method_tag);

  std::size_t dim() const noexcept { return dim_; }
  const std::string& method_tag() const noexcept { return method_tag_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<PlaceRecord>& records() const noexcept { return records_; }
  bool contains(PlaceId id) const { return ids_.contains(id); }

  /// Throws kDimensionMismatch or kDuplicateId; the database is unchanged
  /// on failure.
  void insert(PlaceRecord record);
  /// Also checks that the descriptor's tag matches the database (kIncomparable).
  void insert(PlaceId id, const Position& position, const Descriptor& descriptor);

  /// Full-scan Euclidean kNN, ascending by (distance, id). Returns
  /// min(n, candidates) results. exclude drops one id from the candidates.
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t n,
                            std::optional<PlaceId> exclude = std::nullopt) const;
  std::vector<Neighbor> knn(const Descriptor& query, std::size_t n,
                            std::optional<PlaceId> exclude = std::nullopt) const;

  friend bool operator==(const PlaceDatabase& a, const PlaceDatabase& b) {
    return a.dim_ == b.dim_ && a.method_tag_ == b.method_tag_ && a.records_ == b.records_;
  }

 private:
  std::size_t dim_;
  std::string method_tag_;
  std::vector<PlaceRecord> records_;
  std::unordered_set<PlaceId> ids_;
};

PlaceDatabase merge(std::span<const PlaceDatabase> dbs);

/// Per-query ranked ids and per-query positive sets.
using RankedLists = std::vector<std::vector<PlaceId>>;
using PositiveSets = std::vector<std::unordered_set<PlaceId>>;

/// Fraction of queries with a positive among their first n results.
/// Queries with no positives are left out; kNoValidQueries if none remain.
double recall_at_n(const RankedLists& results, const PositiveSets& truth, std::size_t n);

/// max(1, round_half_up(db_size / 100)).
std::size_t one_percent_count(std::size_t db_size);
double recall_at_one_percent(const RankedLists& results, const PositiveSets& truth,
                             std::size_t db_size);

/// Mean of 1/rank of the first positive (0 when none is returned).
double mrr(const RankedLists& results, const PositiveSets& truth);

struct EvalProtocol {
  double revisit_threshold_m = 5.0;
  std::vector<std::size_t> top_ns{1, 5};
  bool report_one_percent = true;
  bool report_mrr = true;
  /// Drop the reference record whose id equals the query's id.
  bool exclude_self_match = true;

  void validate() const;
};

struct EvalReport {
  std::vector<std::pair<std::string, double>> metrics;  // "R@1", "R@1%", "MRR", ...
  std::size_t query_count = 0;
  std::size_t evaluable_queries = 0;

  std::optional<double> metric(std::string_view name) const;
};

/// Positives are reference records within revisit_threshold_m (3-D Euclidean)
/// of the query position. kIncomparable when dims or tags differ.
EvalReport evaluate(const PlaceDatabase& queries, const PlaceDatabase& reference,
                    const EvalProtocol& protocol = {});

/// CDB1 persistence. load_db distinguishes kIo, kBadMagic, kVersionMismatch,
/// kTruncated, kChecksum and kFormat.
std::vector<std::uint8_t> encode_db(const PlaceDatabase& db);
PlaceDatabase decode_db(std::span<const std::uint8_t> bytes);
void save_db(const PlaceDatabase& db, const std::filesystem::path& path);
PlaceDatabase load_db(const std::filesystem::path& path);

}  // namespace soapool

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "soapool/features.hpp"
#include "soapool/symmat.hpp"

namespace soapool {

/// Global place descriptor. method_tag is "<method>@<16 hex digit parameter
/// hash>", so descriptors built under different parameters never compare
/// equal by tag.
struct Descriptor {
  std::vector<double> values;
  std::string method_tag;

  Descriptor() = default;
  Descriptor(std::vector<double> v, std::string tag);

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

enum class Method { kSpoc, kMac, kGem, kCov, kCps, kCbp, kKernel };

std::string_view method_name(Method m) noexcept;
/// Accepts the CLI spellings: spoc, mac, gem, cov, cps, cbp, kernel.
Method parse_method(std::string_view name);

enum class PartitionMode { kStrict, kRagged };

struct PartitionConfig {
  std::size_t k = 1;
  PartitionMode mode = PartitionMode::kStrict;
};

struct CpsParams {
  PartitionConfig partition;
  std::vector<double> raw_weights;  // softmax logits, one per group
  NsConfig ns;

  /// Zero logits, i.e. uniform weights 1/k.
  static CpsParams uniform(std::size_t k, NsConfig ns = {});
};

struct SpocSpec {};
struct MacSpec {};
struct GemSpec {
  double p = 3.0;
};
struct CovSpec {
  NsConfig ns;
};
struct CbpSpec {
  std::size_t output_dim = 8192;
  std::uint64_t seed = 0;
};
struct KernelSpec {
  double sigma = 1.0;
  NsConfig ns;
};

using AggregatorSpec =
    std::variant<SpocSpec, MacSpec, GemSpec, CovSpec, CpsParams, CbpSpec, KernelSpec>;

Method method_of(const AggregatorSpec& spec) noexcept;
std::string method_tag(const AggregatorSpec& spec);

/// Count-sketch hashes and signs for the two Tensor Sketch projections.
struct SketchConfig {
  std::size_t output_dim = 0;
  std::vector<std::uint32_t> h1, h2;
  std::vector<int> s1, s2;  // each entry +1 or -1
  std::uint64_t seed = 0;
};

/// Deterministic in (seed, d, output_dim): a Pcg64 stream seeded with
/// derive_seed({seed, d, output_dim}) draws h1, s1, h2, s2 in that order.
SketchConfig make_sketch(std::uint64_t seed, std::size_t d, std::size_t output_dim);

/// Features are clamped below at this value before GeM exponentiation.
inline constexpr double kGemClampFloor = 1e-6;

Descriptor spoc(const FeatureMatrix& x);
Descriptor mac(const FeatureMatrix& x);
Descriptor gem(const FeatureMatrix& x, double p);

/// (1/N) Xc Xc^T with Xc the row-centered features. Zero when N == 1.
SymMatrix covariance(const FeatureMatrix& x);

Descriptor full_soa(const FeatureMatrix& x, const NsConfig& ns = {});

/// Contiguous channel groups in index order. Strict mode needs k | d.
/// Ragged mode gives the first k-1 groups ceil(d/k) rows and the last the
/// remainder, which must be non-empty.
std::vector<FeatureMatrix> partition(const FeatureMatrix& x, const PartitionConfig& cfg);

/// Row ranges [first, first + count) produced by partition() for d channels.
std::vector<std::pair<std::size_t, std::size_t>> partition_ranges(
    std::size_t d, const PartitionConfig& cfg);

std::vector<double> softmax(std::span<const double> logits);

/// Per-group normalized covariance vectors c_i = vec_upper(ns_sqrt(C_i)).
std::vector<std::vector<double>> cps_group_vectors(const FeatureMatrix& x,
                                                   const CpsParams& params);
/// Same, but taking the group covariances from the diagonal blocks of a
/// full d x d covariance.
std::vector<std::vector<double>> cps_group_vectors(const SymMatrix& full_covariance,
                                                   const CpsParams& params);
/// z = sum_i softmax(raw_weights)_i c_i, summed in group order.
std::vector<double> combine_groups(const std::vector<std::vector<double>>& groups,
                                   std::span<const double> raw_weights);

Descriptor cps(const FeatureMatrix& x, const CpsParams& params);
Descriptor cps_from_covariance(const SymMatrix& full_covariance, const CpsParams& params);

Descriptor cbp_ts(const FeatureMatrix& x, const SketchConfig& sketch);

/// K[i][j] = exp(-|r_i - r_j|^2 / (2 sigma^2)) over centered channel rows.
SymMatrix rbf_kernel_matrix(const FeatureMatrix& x, double sigma);
Descriptor kernel_soa(const FeatureMatrix& x, double sigma, const NsConfig& ns = {});

/// Closed-form descriptor length. k is used by cps only, sketch_dim by cbp.
std::size_t descriptor_dim(Method method, std::size_t d, std::size_t k = 1,
                           std::size_t sketch_dim = 0);
std::size_t descriptor_dim(std::string_view method, std::size_t d, std::size_t k = 1,
                           std::size_t sketch_dim = 0);

Descriptor aggregate(const FeatureMatrix& x, const AggregatorSpec& spec);

}  // namespace soapool

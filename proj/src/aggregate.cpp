#include "soapool/aggregate.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "soapool/error.hpp"

namespace soapool {
namespace {

constexpr std::array<std::string_view, 7> kMethodNames = {
    "spoc", "mac", "gem", "cov", "cps", "cbp", "kernel"};

// FNV-1a over a canonical little-endian byte stream of the parameters.
class ParamHasher {
 public:
  void bytes(std::string_view s) {
    for (unsigned char c : s) mix(c);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void ns(const NsConfig& cfg) {
    u64(static_cast<std::uint64_t>(cfg.iterations));
    f64(cfg.trace_epsilon);
  }
  std::uint64_t value() const { return h_; }

 private:
  void mix(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001B3ULL;
  }
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

void require_same_length(const std::vector<std::vector<double>>& groups) {
  for (const auto& g : groups) {
    if (g.size() != groups.front().size()) {
      throw Error(ErrorKind::kPartitionMismatch, "cps requires equal groups");
    }
  }
}

void check_cps_params(std::size_t d, const CpsParams& params) {
  if (params.partition.mode != PartitionMode::kStrict) {
    throw Error(ErrorKind::kPartitionMismatch, "cps requires equal groups");
  }
  if (params.raw_weights.size() != params.partition.k) {
    std::ostringstream os;
    os << "cps: " << params.raw_weights.size() << " raw weights for k = "
       << params.partition.k << " groups";
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
  params.ns.validate();
  partition_ranges(d, params.partition);
}

}  // namespace

Descriptor::Descriptor(std::vector<double> v, std::string tag)
    : values(std::move(v)), method_tag(std::move(tag)) {
  for (double x : values) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::kNumerical, "Descriptor: non-finite value");
    }
  }
}

std::string_view method_name(Method m) noexcept {
  return kMethodNames[static_cast<std::size_t>(m)];
}

Method parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown method tag '" + std::string(name) + "'");
}

CpsParams CpsParams::uniform(std::size_t k, NsConfig ns) {
  return CpsParams{PartitionConfig{k, PartitionMode::kStrict},
                   std::vector<double>(k, 0.0), ns};
}

Method method_of(const AggregatorSpec& spec) noexcept {
  return static_cast<Method>(spec.index());
}

std::string method_tag(const AggregatorSpec& spec) {
  ParamHasher h;
  h.bytes(method_name(method_of(spec)));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GemSpec>) {
          h.f64(s.p);
        } else if constexpr (std::is_same_v<T, CovSpec>) {
          h.ns(s.ns);
        } else if constexpr (std::is_same_v<T, CpsParams>) {
          h.u64(s.partition.k);
          h.u64(static_cast<std::uint64_t>(s.partition.mode));
          h.u64(s.raw_weights.size());
          for (double w : s.raw_weights) h.f64(w);
          h.ns(s.ns);
        } else if constexpr (std::is_same_v<T, CbpSpec>) {
          h.u64(s.output_dim);
          h.u64(s.seed);
        } else if constexpr (std::is_same_v<T, KernelSpec>) {
          h.f64(s.sigma);
          h.ns(s.ns);
        }
      },
      spec);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h.value()));
  return std::string(method_name(method_of(spec))) + "@" + hex;
}

Descriptor spoc(const FeatureMatrix& x) {
  std::vector<double> out(x.channels());
  const double n = static_cast<double>(x.points());
  for (std::size_t i = 0; i < x.channels(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v;
    out[i] = s / n;
  }
  return {std::move(out), method_tag(SpocSpec{})};
}

Descriptor mac(const FeatureMatrix& x) {
  std::vector<double> out(x.channels());
  for (std::size_t i = 0; i < x.channels(); ++i) {
    const auto row = x.row(i);
    out[i] = *std::max_element(row.begin(), row.end());
  }
  return {std::move(out), method_tag(MacSpec{})};
}

Descriptor gem(const FeatureMatrix& x, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    std::ostringstream os;
    os << "gem: p must be >= 1, got " << p;
    throw Error(ErrorKind::kInvalidArgument, os.str());
  }
  std::vector<double> out(x.channels());
  const double n = static_cast<double>(x.points());
  for (std::size_t i = 0; i < x.channels(); ++i) {
    const auto row = x.row(i);
    // Factor out the row maximum so large p cannot overflow.
    double vmax = kGemClampFloor;
    for (double v : row) vmax = std::max(vmax, v);
    double s = 0.0;
    for (double v : row) s += std::pow(std::max(v, kGemClampFloor) / vmax, p);
    out[i] = vmax * std::pow(s / n, 1.0 / p);
  }
  return {std::move(out), method_tag(GemSpec{p})};
}

SymMatrix covariance(const FeatureMatrix& x) {
  const std::size_t d = x.channels();
  const std::size_t n = x.points();
  const double count = static_cast<double>(n);

  std::vector<double> centered(d * n);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = x.row(i);
    double s = 0.0;
    for (double v : row) s += v;
    const double mean = s / count;
    for (std::size_t j = 0; j < n; ++j) centered[i * n + j] = row[j] - mean;
  }

  SymMatrix c(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double* ra = centered.data() + a * n;
    for (std::size_t b = a; b < d; ++b) {
      const double* rb = centered.data() + b * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += ra[j] * rb[j];
      c.set(a, b, s / count);
    }
  }
  return c;
}

Descriptor full_soa(const FeatureMatrix& x, const NsConfig& ns) {
  return {upper_tri_vec(ns_sqrt(covariance(x), ns)), method_tag(CovSpec{ns})};
}

std::vector<std::pair<std::size_t, std::size_t>> partition_ranges(
    std::size_t d, const PartitionConfig& cfg) {
  const std::size_t k = cfg.k;
  if (k == 0) {
    throw Error(ErrorKind::kInvalidArgument, "partition: k must be >= 1");
  }
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(k);
  if (cfg.mode == PartitionMode::kStrict) {
    if (d % k != 0) {
      std::ostringstream os;
      os << "partition mismatch: d = " << d << " channels cannot be split into k = " << k
         << " equal groups";
      throw Error(ErrorKind::kPartitionMismatch, os.str());
    }
    const std::size_t size = d / k;
    for (std::size_t g = 0; g < k; ++g) ranges.emplace_back(g * size, size);
    return ranges;
  }
  const std::size_t size = (d + k - 1) / k;
  if (k > d || (k - 1) * size >= d) {
    std::ostringstream os;
    os << "partition mismatch: d = " << d << " channels leave no rows for the last of k = "
       << k << " ragged groups";
    throw Error(ErrorKind::kPartitionMismatch, os.str());
  }
  for (std::size_t g = 0; g + 1 < k; ++g) ranges.emplace_back(g * size, size);
  ranges.emplace_back((k - 1) * size, d - (k - 1) * size);
  return ranges;
}

std::vector<FeatureMatrix> partition(const FeatureMatrix& x, const PartitionConfig& cfg) {
  std::vector<FeatureMatrix> groups;
  for (const auto& [first, count] : partition_ranges(x.channels(), cfg)) {
    groups.push_back(x.rows(first, count));
  }
  return groups;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits[i] - top);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

std::vector<std::vector<double>> cps_group_vectors(const FeatureMatrix& x,
                                                   const CpsParams& params) {
  check_cps_params(x.channels(), params);
  std::vector<std::vector<double>> out;
  for (const auto& group : partition(x, params.partition)) {
    out.push_back(upper_tri_vec(ns_sqrt(covariance(group), params.ns)));
  }
  return out;
}

std::vector<std::vector<double>> cps_group_vectors(const SymMatrix& full_covariance,
                                                   const CpsParams& params) {
  check_cps_params(full_covariance.dim(), params);
  std::vector<std::vector<double>> out;
  for (const auto& [first, count] :
       partition_ranges(full_covariance.dim(), params.partition)) {
    SymMatrix block(count);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i; j < count; ++j)
        block.set(i, j, full_covariance(first + i, first + j));
    out.push_back(upper_tri_vec(ns_sqrt(block, params.ns)));
  }
  return out;
}

std::vector<double> combine_groups(const std::vector<std::vector<double>>& groups,
                                   std::span<const double> raw_weights) {
  if (groups.size() != raw_weights.size() || groups.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "combine_groups: weight count mismatch");
  }
  require_same_length(groups);
  const auto w = softmax(raw_weights);
  std::vector<double> z(groups.front().size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += w[g] * groups[g][i];
  return z;
}

Descriptor cps(const FeatureMatrix& x, const CpsParams& params) {
  return {combine_groups(cps_group_vectors(x, params), params.raw_weights),
          method_tag(params)};
}

Descriptor cps_from_covariance(const SymMatrix& full_covariance, const CpsParams& params) {
  return {combine_groups(cps_group_vectors(full_covariance, params), params.raw_weights),
          method_tag(params)};
}

SymMatrix rbf_kernel_matrix(const FeatureMatrix& x, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::kInvalidArgument, "kernel_soa: sigma must be > 0");
  }
  const std::size_t d = x.channels();
  const std::size_t n = x.points();
  std::vector<double> centered(d * n);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = x.row(i);
    double s = 0.0;
    for (double v : row) s += v;
    const double mean = s / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) centered[i * n + j] = row[j] - mean;
  }
  const double denom = 2.0 * sigma * sigma;
  SymMatrix k(d);
  for (std::size_t a = 0; a < d; ++a) {
    k.set(a, a, 1.0);
    for (std::size_t b = a + 1; b < d; ++b) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double diff = centered[a * n + j] - centered[b * n + j];
        dist2 += diff * diff;
      }
      k.set(a, b, std::exp(-dist2 / denom));
    }
  }
  return k;
}

Descriptor kernel_soa(const FeatureMatrix& x, double sigma, const NsConfig& ns) {
  return {upper_tri_vec(ns_sqrt(rbf_kernel_matrix(x, sigma), ns)),
          method_tag(KernelSpec{sigma, ns})};
}

std::size_t descriptor_dim(Method method, std::size_t d, std::size_t k,
                           std::size_t sketch_dim) {
  switch (method) {
    case Method::kSpoc:
    case Method::kMac:
    case Method::kGem:
      return d;
    case Method::kCov:
    case Method::kKernel:
      return upper_tri_len(d);
    case Method::kCps: {
      const auto ranges = partition_ranges(d, PartitionConfig{k, PartitionMode::kStrict});
      return upper_tri_len(ranges.front().second);
    }
    case Method::kCbp:
      if (sketch_dim == 0) {
        throw Error(ErrorKind::kInvalidArgument, "cbp: sketch dimension must be >= 1");
      }
      return sketch_dim;
  }
  throw Error(ErrorKind::kInvalidArgument, "descriptor_dim: unknown method");
}

std::size_t descriptor_dim(std::string_view method, std::size_t d, std::size_t k,
                           std::size_t sketch_dim) {
  return descriptor_dim(parse_method(method), d, k, sketch_dim);
}

Descriptor aggregate(const FeatureMatrix& x, const AggregatorSpec& spec) {
  return std::visit(
      [&](const auto& s) -> Descriptor {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SpocSpec>) {
          return spoc(x);
        } else if constexpr (std::is_same_v<T, MacSpec>) {
          return mac(x);
        } else if constexpr (std::is_same_v<T, GemSpec>) {
          return gem(x, s.p);
        } else if constexpr (std::is_same_v<T, CovSpec>) {
          return full_soa(x, s.ns);
        } else if constexpr (std::is_same_v<T, CpsParams>) {
          return cps(x, s);
        } else if constexpr (std::is_same_v<T, CbpSpec>) {
          return cbp_ts(x, make_sketch(s.seed, x.channels(), s.output_dim));
        } else {
          return kernel_soa(x, s.sigma, s.ns);
        }
      },
      spec);
}

}  // namespace soapool

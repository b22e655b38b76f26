#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "soapool/aggregate.hpp"
#include "soapool/features.hpp"
#include "soapool/retrieve.hpp"

namespace soapool {

struct PointCloud {
  std::vector<std::array<double, 3>> points;

  std::size_t size() const noexcept { return points.size(); }
  /// Throws kInvalidArgument when empty or non-finite.
  void validate() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

/// Random Fourier feature map: d/2 frequency vectors w_i ~ N(0, I) * scale
/// drawn from Pcg64(derive_seed({seed, d})); point q maps to
/// [sin<w_1,q>, cos<w_1,q>, sin<w_2,q>, ...].
struct ToyBackboneConfig {
  std::size_t out_channels = 16;
  double frequency_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

FeatureMatrix toy_backbone(const PointCloud& cloud, const ToyBackboneConfig& cfg);

/// Places are scattered over a kArenaSizeM x kArenaSizeM square with every
/// pair at least kMinPlaceSpacingM apart (4x the default revisit threshold).
inline constexpr double kArenaSizeM = 1000.0;
inline constexpr double kMinPlaceSpacingM = 20.0;

/// Record ids pack (traversal << 32) | place.
constexpr PlaceId pack_record_id(std::uint32_t traversal, std::uint32_t place) noexcept {
  return (static_cast<PlaceId>(traversal) << 32) | place;
}
constexpr std::uint32_t record_traversal(PlaceId id) noexcept {
  return static_cast<std::uint32_t>(id >> 32);
}
constexpr std::uint32_t record_place(PlaceId id) noexcept {
  return static_cast<std::uint32_t>(id & 0xFFFFFFFFu);
}

struct SynthPlace {
  std::uint32_t id = 0;
  Position position{};
  friend bool operator==(const SynthPlace&, const SynthPlace&) = default;
};

struct SynthScan {
  std::uint32_t place_id = 0;
  PointCloud cloud;
  friend bool operator==(const SynthScan&, const SynthScan&) = default;
};

struct SynthTraversal {
  std::uint32_t id = 0;
  std::vector<SynthScan> scans;
  friend bool operator==(const SynthTraversal&, const SynthTraversal&) = default;
};

struct SynthWorld {
  std::vector<SynthPlace> places;
  std::vector<SynthTraversal> traversals;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SynthWorld&, const SynthWorld&) = default;
};

/// Each place owns a base cloud (a handful of Gaussian blobs in a local
/// +-15 m frame). A traversal's scan of a place is that base cloud with
/// N(0, noise_sigma^2) jitter per coordinate, then randomly permuted.
SynthWorld gen_world(std::size_t num_places, std::size_t traversals,
                     std::size_t points_per_scan, double noise_sigma, std::uint64_t seed);

/// One database per traversal, in traversal order.
std::vector<PlaceDatabase> extract_all(const SynthWorld& world,
                                       const ToyBackboneConfig& backbone,
                                       const AggregatorSpec& spec);

enum class FeatureDtype : std::uint8_t { kF32 = 0, kF64 = 1 };

/// LFM1: "LFM1", u16 version 1, u32 d, u32 N, u8 dtype, channel-major payload, CRC32.
std::vector<std::uint8_t> encode_features(const FeatureMatrix& x, FeatureDtype dtype);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes);
void save_features(const FeatureMatrix& x, const std::filesystem::path& path,
                   FeatureDtype dtype = FeatureDtype::kF32);
FeatureMatrix load_features(const std::filesystem::path& path);

/// LPC1: "LPC1", u16 version 1, u32 N, N x 3 f64, CRC32.
std::vector<std::uint8_t> encode_cloud(const PointCloud& cloud);
PointCloud decode_cloud(std::span<const std::uint8_t> bytes);
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_cloud(const std::filesystem::path& path);

}  // namespace soapool

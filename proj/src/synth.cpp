#include "soapool/synth.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <numbers>
#include <sstream>

#include "soapool/binary_io.hpp"
#include "soapool/error.hpp"
#include "soapool/rng.hpp"

namespace soapool {
namespace {

constexpr std::string_view kFeatureMagic = "LFM1";
constexpr std::string_view kCloudMagic = "LPC1";
constexpr std::uint16_t kFormatVersion = 1;

// Stream tags for derive_seed so every random quantity has its own stream.
enum : std::uint64_t { kStreamPlaces = 1, kStreamBaseCloud = 2, kStreamScan = 3 };

constexpr double kLocalExtentM = 15.0;

PointCloud base_cloud(std::uint64_t seed, std::uint32_t place, std::size_t points) {
  Pcg64 rng(derive_seed({seed, kStreamBaseCloud, place}));
  struct Blob {
    std::array<double, 3> center;
    std::array<double, 3> spread;
  };
  const std::size_t blobs = 4 + rng.below(5);
  std::vector<Blob> shape(blobs);
  for (auto& b : shape) {
    b.center = {rng.uniform(-kLocalExtentM, kLocalExtentM),
                rng.uniform(-kLocalExtentM, kLocalExtentM), rng.uniform(0.0, 4.0)};
    for (double& s : b.spread) s = rng.uniform(0.3, 2.0);
  }
  PointCloud cloud;
  cloud.points.resize(points);
  for (auto& p : cloud.points) {
    const Blob& b = shape[rng.below(blobs)];
    for (int a = 0; a < 3; ++a) p[a] = b.center[a] + b.spread[a] * rng.normal();
  }
  return cloud;
}

std::vector<SynthPlace> scatter_places(std::size_t num_places, std::uint64_t seed) {
  // Hexagonal packing bounds how many spaced places can fit at all.
  const double hex_cell = kMinPlaceSpacingM * kMinPlaceSpacingM * std::sqrt(3.0) / 2.0;
  const auto packing_bound = static_cast<std::size_t>(kArenaSizeM * kArenaSizeM / hex_cell);
  auto sizing_error = [&] {
    std::ostringstream os;
    os << "gen_world: cannot place " << num_places << " places " << kMinPlaceSpacingM
       << " m apart in a " << kArenaSizeM << " m arena";
    return Error(ErrorKind::kInvalidArgument, os.str());
  };
  if (num_places > packing_bound) throw sizing_error();

  // Uniform grid with cell == spacing: only the 3x3 neighbourhood can conflict.
  const auto cells = static_cast<std::size_t>(std::ceil(kArenaSizeM / kMinPlaceSpacingM));
  std::vector<std::vector<std::size_t>> grid(cells * cells);
  auto cell_of = [&](double v) {
    return std::min(cells - 1, static_cast<std::size_t>(v / kMinPlaceSpacingM));
  };

  Pcg64 rng(derive_seed({seed, kStreamPlaces}));
  std::vector<SynthPlace> places;
  const std::size_t max_attempts = 100000 + 200 * num_places;
  for (std::size_t attempt = 0; places.size() < num_places; ++attempt) {
    if (attempt >= max_attempts) throw sizing_error();
    const double x = rng.uniform(0.0, kArenaSizeM);
    const double y = rng.uniform(0.0, kArenaSizeM);
    const std::size_t cx = cell_of(x);
    const std::size_t cy = cell_of(y);
    bool ok = true;
    for (std::size_t gx = cx == 0 ? 0 : cx - 1; ok && gx <= std::min(cells - 1, cx + 1); ++gx) {
      for (std::size_t gy = cy == 0 ? 0 : cy - 1; ok && gy <= std::min(cells - 1, cy + 1);
           ++gy) {
        for (std::size_t idx : grid[gx * cells + gy]) {
          const double dx = places[idx].position[0] - x;
          const double dy = places[idx].position[1] - y;
          if (std::sqrt(dx * dx + dy * dy) < kMinPlaceSpacingM) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) continue;
    grid[cx * cells + cy].push_back(places.size());
    places.push_back({static_cast<std::uint32_t>(places.size()), {x, y, 0.0}});
  }
  return places;
}

}  // namespace

void PointCloud::validate() const {
  if (points.empty()) throw Error(ErrorKind::kInvalidArgument, "PointCloud: no points");
  for (const auto& p : points) {
    for (double c : p) {
      if (!std::isfinite(c)) {
        throw Error(ErrorKind::kInvalidArgument, "PointCloud: non-finite coordinate");
      }
    }
  }
}

void ToyBackboneConfig::validate() const {
  if (out_channels == 0 || out_channels % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "toy_backbone: out_channels must be even and >= 2, got " +
                    std::to_string(out_channels));
  }
  if (!(frequency_scale > 0.0) || !std::isfinite(frequency_scale)) {
    throw Error(ErrorKind::kInvalidArgument, "toy_backbone: frequency_scale must be > 0");
  }
}

FeatureMatrix toy_backbone(const PointCloud& cloud, const ToyBackboneConfig& cfg) {
  cfg.validate();
  cloud.validate();
  const std::size_t pairs = cfg.out_channels / 2;
  Pcg64 rng(derive_seed({cfg.seed, cfg.out_channels}));
  std::vector<std::array<double, 3>> freqs(pairs);
  for (auto& w : freqs)
    for (double& c : w) c = rng.normal() * cfg.frequency_scale;

  const std::size_t n = cloud.size();
  std::vector<double> data(cfg.out_channels * n);
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& w = freqs[i];
    for (std::size_t j = 0; j < n; ++j) {
      const auto& q = cloud.points[j];
      const double phase = w[0] * q[0] + w[1] * q[1] + w[2] * q[2];
      data[(2 * i) * n + j] = std::sin(phase);
      data[(2 * i + 1) * n + j] = std::cos(phase);
    }
  }
  return {cfg.out_channels, n, std::move(data)};
}

SynthWorld gen_world(std::size_t num_places, std::size_t traversals,
                     std::size_t points_per_scan, double noise_sigma, std::uint64_t seed) {
  if (num_places < 2) throw Error(ErrorKind::kInvalidArgument, "gen_world: need >= 2 places");
  if (traversals < 2) {
    throw Error(ErrorKind::kInvalidArgument, "gen_world: need >= 2 traversals");
  }
  if (points_per_scan == 0) {
    throw Error(ErrorKind::kInvalidArgument, "gen_world: need >= 1 point per scan");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorKind::kInvalidArgument, "gen_world: noise_sigma must be >= 0");
  }

  SynthWorld world;
  world.noise_sigma = noise_sigma;
  world.seed = seed;
  world.places = scatter_places(num_places, seed);

  std::vector<PointCloud> bases;
  bases.reserve(num_places);
  for (const auto& p : world.places) bases.push_back(base_cloud(seed, p.id, points_per_scan));

  for (std::size_t t = 0; t < traversals; ++t) {
    SynthTraversal trav{static_cast<std::uint32_t>(t), {}};
    for (const auto& place : world.places) {
      Pcg64 rng(derive_seed({seed, kStreamScan, t, place.id}));
      const PointCloud& base = bases[place.id];
      PointCloud scan;
      scan.points.resize(base.size());
      const auto perm = random_permutation(base.size(), rng);
      for (std::size_t j = 0; j < base.size(); ++j) {
        scan.points[j] = base.points[perm[j]];
        if (noise_sigma > 0.0) {
          for (double& c : scan.points[j]) c += noise_sigma * rng.normal();
        }
      }
      trav.scans.push_back({place.id, std::move(scan)});
    }
    world.traversals.push_back(std::move(trav));
  }
  return world;
}

std::vector<PlaceDatabase> extract_all(const SynthWorld& world,
                                       const ToyBackboneConfig& backbone,
                                       const AggregatorSpec& spec) {
  std::vector<PlaceDatabase> out;
  for (const auto& trav : world.traversals) {
    std::optional<PlaceDatabase> db;
    for (const auto& scan : trav.scans) {
      const Descriptor desc = aggregate(toy_backbone(scan.cloud, backbone), spec);
      if (!db) db.emplace(desc.dim(), desc.method_tag);
      db->insert(pack_record_id(trav.id, scan.place_id),
                 world.places.at(scan.place_id).position, desc);
    }
    if (!db) throw Error(ErrorKind::kInvalidArgument, "extract_all: traversal with no scans");
    out.push_back(std::move(*db));
  }
  return out;
}

std::vector<std::uint8_t> encode_features(const FeatureMatrix& x, FeatureDtype dtype) {
  ByteWriter w;
  w.bytes(kFeatureMagic);
  w.u16(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(x.channels()));
  w.u32(static_cast<std::uint32_t>(x.points()));
  w.u8(static_cast<std::uint8_t>(dtype));
  for (double v : x.data()) {
    if (dtype == FeatureDtype::kF32) {
      w.f32(static_cast<float>(v));
    } else {
      w.f64(v);
    }
  }
  w.crc();
  return w.buffer();
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader r = open_envelope(bytes, kFeatureMagic, kFormatVersion, "LFM1");
  const std::size_t d = r.u32();
  const std::size_t n = r.u32();
  const std::uint8_t dtype = r.u8();
  if (dtype > 1) {
    throw Error(ErrorKind::kFormat, "LFM1: unknown dtype " + std::to_string(dtype));
  }
  const std::size_t width = dtype == 0 ? 4 : 8;
  check_length_and_crc(bytes, r.offset() + d * n * width + 4, "LFM1");
  std::vector<double> data(d * n);
  for (double& v : data) v = dtype == 0 ? static_cast<double>(r.f32()) : r.f64();
  return {d, n, std::move(data)};
}

void save_features(const FeatureMatrix& x, const std::filesystem::path& path,
                   FeatureDtype dtype) {
  write_file(path, encode_features(x, dtype));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  return decode_features(read_file(path));
}

std::vector<std::uint8_t> encode_cloud(const PointCloud& cloud) {
  ByteWriter w;
  w.bytes(kCloudMagic);
  w.u16(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(cloud.size()));
  for (const auto& p : cloud.points)
    for (double c : p) w.f64(c);
  w.crc();
  return w.buffer();
}

PointCloud decode_cloud(std::span<const std::uint8_t> bytes) {
  ByteReader r = open_envelope(bytes, kCloudMagic, kFormatVersion, "LPC1");
  const std::size_t n = r.u32();
  check_length_and_crc(bytes, r.offset() + n * 24 + 4, "LPC1");
  PointCloud cloud;
  cloud.points.resize(n);
  for (auto& p : cloud.points)
    for (double& c : p) c = r.f64();
  return cloud;
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  write_file(path, encode_cloud(cloud));
}

PointCloud load_cloud(const std::filesystem::path& path) {
  return decode_cloud(read_file(path));
}

}  // namespace soapool

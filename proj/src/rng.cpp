#include "soapool/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace soapool {
namespace {

constexpr unsigned __int128 kMultiplier =
    (static_cast<unsigned __int128>(0x2360ED051FC65DA4ULL) << 64) |
    0x4385DF649FCCF645ULL;

unsigned __int128 make128(std::uint64_t hi, std::uint64_t lo) {
  return (static_cast<unsigned __int128>(hi) << 64) | lo;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

Pcg64::Pcg64(std::uint64_t seed, std::uint64_t stream) {
  const auto init_state =
      make128(splitmix64(seed), splitmix64(seed ^ 0xDA3E39CB94B95BDBULL));
  inc_ = make128(splitmix64(stream), splitmix64(~stream)) | 1u;
  state_ = 0;
  (*this)();
  state_ += init_state;
  (*this)();
}

Pcg64::result_type Pcg64::operator()() {
  state_ = state_ * kMultiplier + inc_;
  const auto hi = static_cast<std::uint64_t>(state_ >> 64);
  const auto lo = static_cast<std::uint64_t>(state_);
  const auto rot = static_cast<unsigned>(hi >> 58);
  const std::uint64_t xored = hi ^ lo;
  return (xored >> rot) | (xored << ((64u - rot) & 63u));
}

double Pcg64::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Pcg64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Pcg64::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Pcg64::below(std::uint64_t bound) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  auto m = static_cast<unsigned __int128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<unsigned __int128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::vector<std::size_t> random_permutation(std::size_t n, Pcg64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(perm), rng);
  return perm;
}

}  // namespace soapool

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

#include "soapool/aggregate.hpp"
#include "soapool/error.hpp"
#include "soapool/rng.hpp"

namespace soapool {
namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n)
      : data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))), n_(n) {
    if (data_ == nullptr) throw std::bad_alloc();
    std::fill_n(reinterpret_cast<double*>(data_), 2 * n_, 0.0);
  }
  ~FftwBuffer() { fftw_free(data_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* get() noexcept { return data_; }
  void clear() { std::fill_n(reinterpret_cast<double*>(data_), 2 * n_, 0.0); }

 private:
  fftw_complex* data_;
  std::size_t n_;
};

class FftwPlan {
 public:
  FftwPlan(std::size_t n, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
    if (plan_ == nullptr) {
      throw Error(ErrorKind::kNumerical, "cbp_ts: FFTW planning failed");
    }
  }
  ~FftwPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  void run() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

SketchConfig make_sketch(std::uint64_t seed, std::size_t d, std::size_t output_dim) {
  if (d == 0 || output_dim == 0 || output_dim > 0xFFFFFFFFu) {
    throw Error(ErrorKind::kInvalidArgument, "make_sketch: d and D must be >= 1");
  }
  Pcg64 rng(derive_seed({seed, d, output_dim}));
  SketchConfig cfg;
  cfg.output_dim = output_dim;
  cfg.seed = seed;
  auto draw = [&](std::vector<std::uint32_t>& h, std::vector<int>& s) {
    h.resize(d);
    s.resize(d);
    for (auto& v : h) v = static_cast<std::uint32_t>(rng.below(output_dim));
    for (auto& v : s) v = (rng() & 1u) ? 1 : -1;
  };
  draw(cfg.h1, cfg.s1);
  draw(cfg.h2, cfg.s2);
  return cfg;
}

Descriptor cbp_ts(const FeatureMatrix& x, const SketchConfig& sketch) {
  const std::size_t d = x.channels();
  const std::size_t n = x.points();
  const std::size_t dim = sketch.output_dim;
  if (dim == 0) throw Error(ErrorKind::kInvalidArgument, "cbp_ts: D must be >= 1");
  if (sketch.h1.size() != d || sketch.h2.size() != d || sketch.s1.size() != d ||
      sketch.s2.size() != d) {
    std::ostringstream os;
    os << "cbp_ts: sketch built for " << sketch.h1.size() << " channels, input has " << d;
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }

  FftwBuffer a(dim), b(dim), fa(dim), fb(dim), acc(dim), out(dim);
  const FftwPlan forward_a(dim, a.get(), fa.get(), FFTW_FORWARD);
  const FftwPlan forward_b(dim, b.get(), fb.get(), FFTW_FORWARD);
  const FftwPlan inverse(dim, acc.get(), out.get(), FFTW_BACKWARD);

  auto* acc_c = reinterpret_cast<std::complex<double>*>(acc.get());
  auto* fa_c = reinterpret_cast<std::complex<double>*>(fa.get());
  auto* fb_c = reinterpret_cast<std::complex<double>*>(fb.get());

  for (std::size_t j = 0; j < n; ++j) {
    a.clear();
    b.clear();
    for (std::size_t i = 0; i < d; ++i) {
      const double v = x(i, j);
      a.get()[sketch.h1[i]][0] += sketch.s1[i] * v;
      b.get()[sketch.h2[i]][0] += sketch.s2[i] * v;
    }
    forward_a.run();
    forward_b.run();
    // The inverse transform is linear, so products are summed in the
    // frequency domain and inverted once.
    for (std::size_t f = 0; f < dim; ++f) acc_c[f] += fa_c[f] * fb_c[f];
  }
  inverse.run();

  const double scale = 1.0 / (static_cast<double>(dim) * static_cast<double>(n));
  std::vector<double> values(dim);
  double max_re = 0.0;
  double max_im = 0.0;
  for (std::size_t f = 0; f < dim; ++f) {
    const double re = out.get()[f][0] * scale;
    const double im = out.get()[f][1] * scale;
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw Error(ErrorKind::kNumerical, "cbp_ts: sketch overflow");
    }
    values[f] = re;
    max_re = std::max(max_re, std::abs(re));
    max_im = std::max(max_im, std::abs(im));
  }
  if (max_im > 1e-8 * std::max(1.0, max_re)) {
    std::ostringstream os;
    os << "cbp_ts: imaginary residual " << max_im << " exceeds tolerance";
    throw Error(ErrorKind::kNumerical, os.str());
  }
  return {std::move(values), method_tag(CbpSpec{dim, sketch.seed})};
}

}  // namespace soapool

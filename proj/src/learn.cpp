#include "soapool/learn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "soapool/error.hpp"

namespace soapool {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct TripletGrad {
  double loss = 0.0;
  std::vector<double> anchor, positive, negative;
};

TripletGrad triplet_loss_grad(std::span<const double> a, std::span<const double> p,
                              std::span<const double> n, double margin) {
  const std::size_t dim = a.size();
  TripletGrad g{0.0, std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0),
                std::vector<double>(dim, 0.0)};
  const double dp = distance(a, p);
  const double dn = distance(a, n);
  g.loss = std::max(0.0, dp - dn + margin);
  if (g.loss <= 0.0) return g;
  // d|u| / du = u / |u|, taken as zero at u = 0.
  for (std::size_t i = 0; i < dim; ++i) {
    const double up = dp > 0.0 ? (a[i] - p[i]) / dp : 0.0;
    const double un = dn > 0.0 ? (a[i] - n[i]) / dn : 0.0;
    g.anchor[i] = up - un;
    g.positive[i] = -up;
    g.negative[i] = un;
  }
  return g;
}

void check_triplet_dims(const Descriptor& a, const Descriptor& p, const Descriptor& n) {
  if (a.dim() != p.dim() || a.dim() != n.dim()) {
    std::ostringstream os;
    os << "triplet_loss: dims " << a.dim() << ", " << p.dim() << ", " << n.dim();
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
}

void check_finite_loss(double loss, int epoch) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorKind::kNumerical,
                "fit: non-finite loss at epoch " + std::to_string(epoch));
  }
}

FitResult fit_cps(std::span<const Triplet> triplets, CpsParams params,
                  const FitConfig& cfg) {
  using Groups = std::vector<std::vector<double>>;
  struct Cached {
    Groups a, p, n;
  };
  std::vector<Cached> cache;
  cache.reserve(triplets.size());
  for (const auto& t : triplets) {
    cache.push_back({cps_group_vectors(t.anchor.get(), params),
                     cps_group_vectors(t.positive.get(), params),
                     cps_group_vectors(t.negative.get(), params)});
  }

  FitResult result{params, {}};
  const double count = static_cast<double>(triplets.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    std::vector<double> grad(params.raw_weights.size(), 0.0);
    for (const auto& c : cache) {
      const auto za = combine_groups(c.a, params.raw_weights);
      const auto zp = combine_groups(c.p, params.raw_weights);
      const auto zn = combine_groups(c.n, params.raw_weights);
      const auto g = triplet_loss_grad(za, zp, zn, cfg.margin);
      loss += g.loss;
      if (g.loss <= 0.0) continue;
      const auto ga = grad_cps_weights(c.a, params.raw_weights, g.anchor);
      const auto gp = grad_cps_weights(c.p, params.raw_weights, g.positive);
      const auto gn = grad_cps_weights(c.n, params.raw_weights, g.negative);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += ga[i] + gp[i] + gn[i];
    }
    loss /= count;
    check_finite_loss(loss, epoch);
    result.loss_trace.push_back(loss);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      params.raw_weights[i] -= cfg.learning_rate * grad[i] / count;
    }
  }
  result.spec = params;
  return result;
}

FitResult fit_gem(std::span<const Triplet> triplets, GemSpec spec, const FitConfig& cfg) {
  FitResult result{spec, {}};
  const double count = static_cast<double>(triplets.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    double grad = 0.0;
    for (const auto& t : triplets) {
      const auto za = gem(t.anchor.get(), spec.p);
      const auto zp = gem(t.positive.get(), spec.p);
      const auto zn = gem(t.negative.get(), spec.p);
      const auto g = triplet_loss_grad(za.values, zp.values, zn.values, cfg.margin);
      loss += g.loss;
      if (g.loss <= 0.0) continue;
      grad += grad_gem_p(t.anchor.get(), spec.p, g.anchor) +
              grad_gem_p(t.positive.get(), spec.p, g.positive) +
              grad_gem_p(t.negative.get(), spec.p, g.negative);
    }
    loss /= count;
    check_finite_loss(loss, epoch);
    result.loss_trace.push_back(loss);
    spec.p = std::max(1.0, spec.p - cfg.learning_rate * grad / count);
  }
  result.spec = spec;
  return result;
}

}  // namespace

void FitConfig::validate() const {
  if (!(margin > 0.0)) throw Error(ErrorKind::kInvalidArgument, "fit: margin must be > 0");
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "fit: learning_rate must be > 0");
  }
  if (epochs < 0) throw Error(ErrorKind::kInvalidArgument, "fit: epochs must be >= 0");
}

std::vector<double> grad_cps_weights(const std::vector<std::vector<double>>& groups,
                                     std::span<const double> raw_weights,
                                     std::span<const double> upstream) {
  if (groups.size() != raw_weights.size() || groups.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "grad_cps_weights: weight count mismatch");
  }
  for (const auto& g : groups) {
    if (g.size() != upstream.size()) {
      std::ostringstream os;
      os << "grad_cps_weights: upstream length " << upstream.size()
         << " != descriptor dim " << g.size();
      throw Error(ErrorKind::kDimensionMismatch, os.str());
    }
  }
  const auto w = softmax(raw_weights);
  std::vector<double> proj(groups.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    proj[i] = dot(upstream, groups[i]);
    mean += w[i] * proj[i];
  }
  // Softmax Jacobian: dw_i/dr_j = w_i (delta_ij - w_j).
  std::vector<double> grad(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) grad[j] = w[j] * (proj[j] - mean);
  return grad;
}

std::vector<double> grad_cps_weights(const FeatureMatrix& x, const CpsParams& params,
                                     std::span<const double> upstream) {
  return grad_cps_weights(cps_group_vectors(x, params), params.raw_weights, upstream);
}

double grad_gem_p(const FeatureMatrix& x, double p, std::span<const double> upstream) {
  if (!(p >= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "grad_gem_p: p must be >= 1");
  }
  if (upstream.size() != x.channels()) {
    throw Error(ErrorKind::kDimensionMismatch, "grad_gem_p: upstream length != d");
  }
  const double n = static_cast<double>(x.points());
  double total = 0.0;
  for (std::size_t i = 0; i < x.channels(); ++i) {
    const auto row = x.row(i);
    double vmax = kGemClampFloor;
    for (double v : row) vmax = std::max(vmax, v);
    // With s = v / vmax the ln(vmax) terms cancel:
    //   dg/dp = g (-ln M'/p^2 + sum s^p ln s / (p sum s^p)),  M' = mean s^p.
    double sum_pow = 0.0;
    double sum_pow_log = 0.0;
    for (double v : row) {
      const double s = std::max(v, kGemClampFloor) / vmax;
      const double sp = std::pow(s, p);
      sum_pow += sp;
      sum_pow_log += sp * std::log(s);
    }
    const double mean_pow = sum_pow / n;
    const double g = vmax * std::pow(mean_pow, 1.0 / p);
    const double dg = g * (-std::log(mean_pow) / (p * p) + sum_pow_log / (p * sum_pow));
    total += upstream[i] * dg;
  }
  return total;
}

double triplet_loss(const Descriptor& a, const Descriptor& p, const Descriptor& n,
                    double margin) {
  check_triplet_dims(a, p, n);
  return std::max(0.0, distance(a.values, p.values) - distance(a.values, n.values) + margin);
}

FitResult fit(std::span<const Triplet> triplets, const AggregatorSpec& spec,
              const FitConfig& cfg) {
  cfg.validate();
  if (triplets.empty()) throw Error(ErrorKind::kInvalidArgument, "fit: no triplets");
  const std::size_t d = triplets.front().anchor.get().channels();
  for (const auto& t : triplets) {
    if (t.anchor.get().channels() != d || t.positive.get().channels() != d ||
        t.negative.get().channels() != d) {
      throw Error(ErrorKind::kDimensionMismatch, "fit: triplets differ in channel count");
    }
  }
  if (const auto* g = std::get_if<GemSpec>(&spec)) return fit_gem(triplets, *g, cfg);
  if (const auto* c = std::get_if<CpsParams>(&spec)) return fit_cps(triplets, *c, cfg);
  throw Error(ErrorKind::kInvalidArgument,
              "fit: only gem and cps specs have learnable scalars");
}

}  // namespace soapool

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "soapool/aggregate.hpp"

namespace soapool {

struct Triplet {
  std::reference_wrapper<const FeatureMatrix> anchor;
  std::reference_wrapper<const FeatureMatrix> positive;
  std::reference_wrapper<const FeatureMatrix> negative;
};

struct FitConfig {
  double margin = 0.5;
  double learning_rate = 0.01;
  int epochs = 200;
  // Descent is full-batch and deterministic; the seed only travels with
  // the configuration so a run can be reproduced from its printout.
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  AggregatorSpec spec;
  std::vector<double> loss_trace;  // mean loss per epoch, before that epoch's step
};

/// d<upstream, z>/d raw_weights where z = sum softmax(raw)_i c_i. The group
/// vectors c_i do not depend on the weights, so this is exact.
std::vector<double> grad_cps_weights(const FeatureMatrix& x, const CpsParams& params,
                                     std::span<const double> upstream);
std::vector<double> grad_cps_weights(const std::vector<std::vector<double>>& groups,
                                     std::span<const double> raw_weights,
                                     std::span<const double> upstream);

/// d<upstream, gem(x, p)>/dp in closed form.
double grad_gem_p(const FeatureMatrix& x, double p, std::span<const double> upstream);

/// max(0, |a - p| - |a - n| + margin).
double triplet_loss(const Descriptor& a, const Descriptor& p, const Descriptor& n,
                    double margin);

/// Plain gradient descent on the learnable scalars of a gem (p) or cps
/// (raw weights) spec. p is projected back onto p >= 1 after each step.
FitResult fit(std::span<const Triplet> triplets, const AggregatorSpec& spec,
              const FitConfig& cfg);

}  // namespace soapool

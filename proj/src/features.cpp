#include "soapool/features.hpp"

#include <cmath>
#include <sstream>

#include "soapool/error.hpp"

namespace soapool {

FeatureMatrix::FeatureMatrix(std::size_t channels, std::size_t points,
                             std::vector<double> data)
    : channels_(channels), points_(points), data_(std::move(data)) {
  if (channels_ == 0 || points_ == 0) {
    throw Error(ErrorKind::kInvalidArgument, "FeatureMatrix: d and N must be >= 1");
  }
  if (data_.size() != channels_ * points_) {
    std::ostringstream os;
    os << "FeatureMatrix: expected " << channels_ * points_ << " values, got "
       << data_.size();
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      std::ostringstream os;
      os << "FeatureMatrix: non-finite entry at channel " << i / points_ << ", point "
         << i % points_;
      throw Error(ErrorKind::kInvalidArgument, os.str());
    }
  }
}

FeatureMatrix::FeatureMatrix(std::size_t channels, std::size_t points)
    : FeatureMatrix(channels, points, std::vector<double>(channels * points, 0.0)) {}

void FeatureMatrix::set(std::size_t channel, std::size_t point, double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::kInvalidArgument, "FeatureMatrix: non-finite value");
  }
  data_[channel * points_ + point] = value;
}

FeatureMatrix FeatureMatrix::rows(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > channels_) {
    throw Error(ErrorKind::kInvalidArgument, "FeatureMatrix::rows: range out of bounds");
  }
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(first * points_),
                          data_.begin() +
                              static_cast<std::ptrdiff_t>((first + count) * points_));
  return {count, points_, std::move(out)};
}

FeatureMatrix FeatureMatrix::permute_columns(std::span<const std::size_t> perm) const {
  if (perm.size() != points_) {
    throw Error(ErrorKind::kDimensionMismatch, "permute_columns: permutation length");
  }
  for (std::size_t j : perm) {
    if (j >= points_) {
      throw Error(ErrorKind::kInvalidArgument, "permute_columns: index out of range");
    }
  }
  std::vector<double> out(data_.size());
  for (std::size_t c = 0; c < channels_; ++c)
    for (std::size_t j = 0; j < points_; ++j)
      out[c * points_ + j] = data_[c * points_ + perm[j]];
  return {channels_, points_, std::move(out)};
}

}  // namespace soapool

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace soapool {

/// d x N local feature matrix, channel-major: row i holds channel i across
/// all N points. Construction rejects empty shapes and non-finite entries.
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t channels, std::size_t points, std::vector<double> data);
  FeatureMatrix(std::size_t channels, std::size_t points);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t points() const noexcept { return points_; }

  double operator()(std::size_t channel, std::size_t point) const {
    return data_[channel * points_ + point];
  }
  void set(std::size_t channel, std::size_t point, double value);

  std::span<const double> row(std::size_t channel) const {
    return {data_.data() + channel * points_, points_};
  }
  std::span<const double> data() const noexcept { return data_; }

  /// Rows [first, first + count) as a new matrix.
  FeatureMatrix rows(std::size_t first, std::size_t count) const;
  /// Column j of the result is column perm[j] of this matrix.
  FeatureMatrix permute_columns(std::span<const std::size_t> perm) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t channels_;
  std::size_t points_;
  std::vector<double> data_;
};

}  // namespace soapool

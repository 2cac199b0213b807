#pragma once

#include <cstdint>
#include <optional>

namespace eaps {

/// Exponentially weighted moving average; the first sample initializes it.
class EwmaEstimator {
 public:
  explicit EwmaEstimator(double alpha = 0.125);

  /// Throws std::invalid_argument for negative samples.
  double update(double sample);
  std::optional<double> estimate() const { return estimate_; }
  std::uint64_t count() const { return count_; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  std::optional<double> estimate_;
  std::uint64_t count_ = 0;
};

}  // namespace eaps

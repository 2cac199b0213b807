#include "eaps/predictor/ewma.hpp"

#include <stdexcept>

namespace eaps {

EwmaEstimator::EwmaEstimator(double alpha) : alpha_(alpha) {
  if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("EWMA alpha must lie in (0, 1]");
}

double EwmaEstimator::update(double sample) {
  if (!(sample >= 0)) throw std::invalid_argument("EWMA samples must be >= 0");
  estimate_ = estimate_ ? (1.0 - alpha_) * *estimate_ + alpha_ * sample : sample;
  ++count_;
  return *estimate_;
}

}  // namespace eaps

#include "nadpcm/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nadpcm/errors.hpp"

namespace nadpcm {

std::vector<double> default_multipliers(int bits) {
  switch (bits) {
    case 2:
      return {0.8, 1.6};
    case 3:
      return {0.9, 0.9, 1.25, 1.75};
    case 4:
      return {0.9, 0.9, 0.9, 0.9, 1.2, 1.6, 2.0, 2.4};
    case 5:
      return {0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6};
    default:
      throw std::invalid_argument("quantizer bits must be in 2..5, got " + std::to_string(bits));
  }
}

AdaptiveQuantizer::AdaptiveQuantizer(int bits, QuantizerParams params)
    : bits_(bits),
      step_(params.step0),
      step_min_(params.step_min),
      step_max_(params.step_max),
      multipliers_(std::move(params.multipliers)) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw std::invalid_argument("quantizer bits must be in 2..5, got " + std::to_string(bits));
  }
  if (multipliers_.empty()) multipliers_ = default_multipliers(bits);
  const std::size_t expected = std::size_t{1} << (bits - 1);
  if (multipliers_.size() != expected) {
    throw std::invalid_argument("multiplier table for " + std::to_string(bits) + " bits needs " +
                                std::to_string(expected) + " entries, got " +
                                std::to_string(multipliers_.size()));
  }
  for (double m : multipliers_) {
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("multipliers must be positive");
  }
  if (!(step_min_ > 0.0) || !(step_min_ <= step_max_) || !std::isfinite(step_max_)) {
    throw std::invalid_argument("need 0 < step_min <= step_max");
  }
  if (!(step_ >= step_min_ && step_ <= step_max_)) {
    throw std::invalid_argument("initial step must lie in [step_min, step_max]");
  }
}

int AdaptiveQuantizer::quantize(double e) const noexcept {
  const double level = std::floor(e / step_);
  const double lo = min_code();
  const double hi = max_code();
  if (std::isnan(level)) return 0;
  return static_cast<int>(std::clamp(level, lo, hi));
}

double AdaptiveQuantizer::dequantize(int code) const {
  if (code < min_code() || code > max_code()) {
    throw MalformedBitstream("quantizer code " + std::to_string(code) + " out of range for " +
                             std::to_string(bits_) + " bits");
  }
  return (code + 0.5) * step_;
}

int magnitude_rank(int code) noexcept { return code >= 0 ? code : -code - 1; }

AdaptiveQuantizer AdaptiveQuantizer::adapted(int code) const {
  AdaptiveQuantizer next = *this;
  next.adapt(code);
  return next;
}

void AdaptiveQuantizer::adapt(int code) {
  if (code < min_code() || code > max_code()) {
    throw MalformedBitstream("quantizer code " + std::to_string(code) + " out of range for " +
                             std::to_string(bits_) + " bits");
  }
  step_ = std::clamp(step_ * multipliers_[static_cast<std::size_t>(magnitude_rank(code))],
                     step_min_, step_max_);
}

}  // namespace nadpcm

#pragma once

#include <cstddef>
#include <vector>

namespace nadpcm {

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 5;

/// Step-size parameters shared by encoder and decoder (carried in the
/// bitstream header).
struct QuantizerParams {
  double step0 = 0.02;
  double step_min = 1.0 / 4096.0;
  double step_max = 0.5;
  /// Empty selects default_multipliers(bits).
  std::vector<double> multipliers;

  friend bool operator==(const QuantizerParams&, const QuantizerParams&) = default;
};

/// Default Jayant-style multiplier table for bits in [2, 5], indexed by code
/// magnitude rank (innermost cell first).
std::vector<double> default_multipliers(int bits);

/// Nq-bit midrise quantizer with multiplicative step adaptation.
///
/// Codes are signed levels in [-2^(Nq-1), 2^(Nq-1) - 1]; code c reconstructs
/// to (c + 0.5) * step. After each sample the step is multiplied by the
/// multiplier of the code's magnitude rank and clamped to [step_min, step_max].
class AdaptiveQuantizer {
 public:
  /// 4-bit quantizer with default parameters.
  AdaptiveQuantizer() : AdaptiveQuantizer(4) {}
  /// Throws std::invalid_argument on bad bits, bounds or table size.
  explicit AdaptiveQuantizer(int bits, QuantizerParams params = {});

  int bits() const noexcept { return bits_; }
  double step() const noexcept { return step_; }
  double step_min() const noexcept { return step_min_; }
  double step_max() const noexcept { return step_max_; }
  const std::vector<double>& multipliers() const noexcept { return multipliers_; }

  int min_code() const noexcept { return -(1 << (bits_ - 1)); }
  int max_code() const noexcept { return (1 << (bits_ - 1)) - 1; }

  int quantize(double e) const noexcept;
  /// Throws MalformedBitstream for a code outside the valid range.
  double dequantize(int code) const;
  /// Returns the state after observing code.
  AdaptiveQuantizer adapted(int code) const;
  void adapt(int code);

  friend bool operator==(const AdaptiveQuantizer&, const AdaptiveQuantizer&) = default;

 private:
  int bits_;
  double step_;
  double step_min_;
  double step_max_;
  std::vector<double> multipliers_;
};

/// |level + 0.5| - 0.5, i.e. 0 for the two innermost cells.
int magnitude_rank(int code) noexcept;

}  // namespace nadpcm

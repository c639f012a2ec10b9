#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nadpcm {

/// All-pole predictor x^(n) = sum_i coeffs[i-1] * x(n-i).
struct LpcModel {
  std::size_t order = 0;
  std::vector<double> coeffs;
  /// Reflection coefficients from the recursion. Empty for models rebuilt from
  /// transmitted coefficients.
  std::vector<double> reflection;
  /// Frame energy fell below the silence floor; coeffs are all zero.
  bool silent = false;
  /// Prediction error power hit zero mid-recursion; later coeffs were left zero.
  bool truncated = false;

  static LpcModel from_coeffs(std::vector<double> coeffs);
  bool is_zero() const noexcept;

  friend bool operator==(const LpcModel&, const LpcModel&) = default;
};

inline constexpr double kReflectionClamp = 0.999;

/// Biased autocorrelation r[k] = sum_{n=k}^{L-1} s[n] s[n-k], k = 0..order.
std::vector<double> autocorrelation(std::span<const double> frame, std::size_t order);

/// Levinson-Durbin solve of the normal equations for order = r.size() - 1.
LpcModel levinson(std::span<const double> r);

/// Convenience: levinson(autocorrelation(frame, order)).
LpcModel fit_lpc(std::span<const double> frame, std::size_t order);

/// history holds reconstructed samples, newest last.
double lpc_predict(const LpcModel& model, std::span<const double> history);

}  // namespace nadpcm

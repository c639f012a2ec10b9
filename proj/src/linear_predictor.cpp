#include "nadpcm/linear_predictor.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "nadpcm/signal.hpp"

namespace nadpcm {

LpcModel LpcModel::from_coeffs(std::vector<double> coeffs) {
  LpcModel m;
  m.order = coeffs.size();
  m.coeffs = std::move(coeffs);
  return m;
}

bool LpcModel::is_zero() const noexcept {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double a) { return a == 0.0; });
}

std::vector<double> autocorrelation(std::span<const double> frame, std::size_t order) {
  if (order == 0) throw std::invalid_argument("autocorrelation: order must be at least 1");
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t k = 0; k <= order && k < frame.size(); ++k) {
    double acc = 0.0;
    for (std::size_t n = k; n < frame.size(); ++n) acc += frame[n] * frame[n - k];
    r[k] = acc;
  }
  return r;
}

LpcModel levinson(std::span<const double> r) {
  if (r.size() < 2) throw std::invalid_argument("levinson: need at least order 1");
  if (r[0] < 0.0) throw std::invalid_argument("levinson: r[0] must be non-negative");
  const std::size_t p = r.size() - 1;

  LpcModel model;
  model.order = p;
  model.coeffs.assign(p, 0.0);
  model.reflection.assign(p, 0.0);
  if (r[0] < kSilenceEnergyFloor) {
    model.silent = true;
    return model;
  }

  std::vector<double> a(p + 1, 0.0);  // a[0] unused; a[i] multiplies x(n-i)
  std::vector<double> prev(p + 1, 0.0);
  double err = r[0];
  for (std::size_t i = 1; i <= p; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= a[j] * r[i - j];
    double k = acc / err;
    if (k >= 1.0) k = kReflectionClamp;
    if (k <= -1.0) k = -kReflectionClamp;

    prev = a;
    a[i] = k;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] - k * prev[i - j];
    model.reflection[i - 1] = k;

    err *= (1.0 - k * k);
    if (!(err > 0.0)) {
      model.truncated = true;
      break;
    }
  }
  std::copy(a.begin() + 1, a.end(), model.coeffs.begin());
  return model;
}

LpcModel fit_lpc(std::span<const double> frame, std::size_t order) {
  return levinson(autocorrelation(frame, order));
}

double lpc_predict(const LpcModel& model, std::span<const double> history) {
  if (history.size() < model.order) {
    throw std::invalid_argument("lpc_predict: history has " + std::to_string(history.size()) +
                                " samples, order is " + std::to_string(model.order));
  }
  const std::size_t newest = history.size() - 1;
  double acc = 0.0;
  for (std::size_t i = 1; i <= model.order; ++i) acc += model.coeffs[i - 1] * history[newest + 1 - i];
  return acc;
}

}  // namespace nadpcm

#include "nadpcm/neural_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace nadpcm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Hidden activations and output. Every caller that needs the network output
// goes through here so that SSE values agree to the last bit.
double forward_with_hidden(const Mlp& mlp, const MlpInput& input,
                           std::array<double, kMlpHidden>& hidden) noexcept {
  double out = 0.0;
  for (std::size_t j = 0; j < kMlpHidden; ++j) {
    double act = 0.0;
    for (std::size_t i = 0; i < kMlpInputs; ++i) act += mlp.w_in[j * kMlpInputs + i] * input[i];
    act += mlp.b_hid[j];
    hidden[j] = sigmoid(act);
    out += mlp.w_out[j] * hidden[j];
  }
  return out + mlp.b_out;
}

// Solves A x = b for symmetric positive definite A (n x n, row-major) by
// Cholesky. Returns nullopt if a pivot is not positive.
std::optional<std::array<double, kMlpParams>> cholesky_solve(
    std::array<double, kMlpParams * kMlpParams> a, const std::array<double, kMlpParams>& b) {
  constexpr std::size_t n = kMlpParams;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  std::array<double, kMlpParams> x{};
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * x[k];
    x[i] = s / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
    x[ii] = s / a[ii * n + ii];
  }
  return x;
}

}  // namespace

std::pair<PrngState, std::uint64_t> prng_next(PrngState s) noexcept {
  s.state += kGolden;
  std::uint64_t z = s.state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return {s, z ^ (z >> 31)};
}

std::pair<PrngState, double> prng_uniform(PrngState s, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("prng_uniform: need lo < hi");
  auto [next, bits] = prng_next(s);
  const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
  double value = lo + (hi - lo) * unit;
  if (value >= hi) value = std::nextafter(hi, lo);
  return {next, value};
}

MlpParams Mlp::params() const noexcept {
  MlpParams p{};
  std::copy(w_in.begin(), w_in.end(), p.begin());
  std::copy(b_hid.begin(), b_hid.end(), p.begin() + kIdxBHid);
  std::copy(w_out.begin(), w_out.end(), p.begin() + kIdxWOut);
  p[kIdxBOut] = b_out;
  return p;
}

Mlp Mlp::from_params(std::span<const double> params) {
  if (params.size() != kMlpParams) {
    throw std::invalid_argument("Mlp needs exactly 25 parameters, got " + std::to_string(params.size()));
  }
  Mlp m;
  std::copy_n(params.begin(), m.w_in.size(), m.w_in.begin());
  std::copy_n(params.begin() + kIdxBHid, kMlpHidden, m.b_hid.begin());
  std::copy_n(params.begin() + kIdxWOut, kMlpHidden, m.w_out.begin());
  m.b_out = params[kIdxBOut];
  return m;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (!(lambda_init > 0.0)) throw std::invalid_argument("lambda_init must be positive");
  if (!(lambda_up > 0.0) || !(lambda_down > 0.0)) {
    throw std::invalid_argument("lambda_up and lambda_down must be positive");
  }
  if (!(init_scale > 0.0)) throw std::invalid_argument("init_scale must be positive");
}

std::pair<PrngState, Mlp> init_mlp(PrngState prng, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("init_mlp: scale must be positive");
  MlpParams p{};
  for (double& v : p) std::tie(prng, v) = prng_uniform(prng, -scale, scale);
  return {prng, Mlp::from_params(p)};
}

double sigmoid(double t) noexcept { return 1.0 / (1.0 + std::exp(-t)); }

double mlp_forward(const Mlp& mlp, const MlpInput& input) noexcept {
  std::array<double, kMlpHidden> hidden{};
  return forward_with_hidden(mlp, input, hidden);
}

TrainingSet build_training_set(std::span<const double> frame) {
  TrainingSet set;
  if (frame.size() < kMlpInputs + 1) {
    set.too_short = true;
    return set;
  }
  const std::size_t count = frame.size() - kMlpInputs;
  set.inputs.resize(count);
  set.targets.resize(count);
  for (std::size_t n = kMlpInputs; n < frame.size(); ++n) {
    auto& in = set.inputs[n - kMlpInputs];
    for (std::size_t i = 0; i < kMlpInputs; ++i) in[i] = frame[n - 1 - i];
    set.targets[n - kMlpInputs] = frame[n];
  }
  return set;
}

ResidualJacobian residual_jacobian(const Mlp& mlp, const TrainingSet& set) {
  ResidualJacobian out;
  out.rows = set.size();
  out.jacobian.assign(out.rows * kMlpParams, 0.0);
  out.residual.resize(out.rows);
  std::array<double, kMlpHidden> h{};
  for (std::size_t n = 0; n < out.rows; ++n) {
    const auto& x = set.inputs[n];
    out.residual[n] = set.targets[n] - forward_with_hidden(mlp, x, h);
    double* row = &out.jacobian[n * kMlpParams];
    for (std::size_t j = 0; j < kMlpHidden; ++j) {
      const double dh = -mlp.w_out[j] * h[j] * (1.0 - h[j]);
      for (std::size_t i = 0; i < kMlpInputs; ++i) row[j * kMlpInputs + i] = dh * x[i];
      row[kIdxBHid + j] = dh;
      row[kIdxWOut + j] = -h[j];
    }
    row[kIdxBOut] = -1.0;
  }
  return out;
}

double sse(const Mlp& mlp, const TrainingSet& set) noexcept {
  std::array<double, kMlpHidden> h{};
  double acc = 0.0;
  for (std::size_t n = 0; n < set.size(); ++n) {
    const double r = set.targets[n] - forward_with_hidden(mlp, set.inputs[n], h);
    acc += r * r;
  }
  return acc;
}

EpochResult lm_epoch(const Mlp& mlp, const TrainingSet& set, double lambda,
                     const TrainConfig& config) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lm_epoch: lambda must be positive");
  const auto jr = residual_jacobian(mlp, set);
  double entry_sse = 0.0;
  for (double r : jr.residual) entry_sse += r * r;

  // Normal equations of the linearized residual: (J^T J + lambda I) d = -J^T r.
  constexpr std::size_t n = kMlpParams;
  std::array<double, n * n> a{};
  std::array<double, n> g{};
  for (std::size_t row = 0; row < jr.rows; ++row) {
    const double* jrow = &jr.jacobian[row * n];
    for (std::size_t p = 0; p < n; ++p) {
      g[p] -= jrow[p] * jr.residual[row];
      for (std::size_t q = 0; q <= p; ++q) a[p * n + q] += jrow[p] * jrow[q];
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < p; ++q) a[q * n + p] = a[p * n + q];
    a[p * n + p] += lambda;
  }

  EpochResult result{mlp, lambda * config.lambda_up, entry_sse, false};
  const auto step = cholesky_solve(a, g);
  if (!step) return result;

  MlpParams theta = mlp.params();
  for (std::size_t p = 0; p < n; ++p) theta[p] += (*step)[p];
  const Mlp candidate = Mlp::from_params(theta);
  const double candidate_sse = sse(candidate, set);
  if (candidate_sse < entry_sse) {
    result = {candidate, lambda * config.lambda_down, candidate_sse, true};
  }
  return result;
}

TrainResult train(const Mlp& mlp, const TrainingSet& set, const TrainConfig& config) {
  config.validate();
  TrainResult result{mlp, 0.0, {}, false};
  if (set.empty()) {
    result.empty_set = true;
    return result;
  }
  double lambda = config.lambda_init;
  result.sse_per_epoch.reserve(config.epochs);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    auto step = lm_epoch(result.mlp, set, lambda, config);
    result.mlp = step.mlp;
    lambda = step.lambda;
    result.sse = step.sse;
    result.sse_per_epoch.push_back(step.sse);
  }
  return result;
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t restart) noexcept {
  return seed ^ (static_cast<std::uint64_t>(restart) * kGolden);
}

FitResult multistart_fit(std::span<const double> frame, const TrainConfig& config,
                         std::uint64_t seed) {
  config.validate();
  FitResult best;
  const auto set = build_training_set(frame);
  if (set.too_short) {
    best.too_short = true;
    return best;
  }
  for (std::size_t i = 0; i < config.restarts; ++i) {
    const auto [_, init] = init_mlp(PrngState{restart_seed(seed, i)}, config.init_scale);
    auto trained = train(init, set, config);
    best.restart_sse.push_back(trained.sse);
    if (i == 0 || trained.sse < best.sse) {
      best.mlp = trained.mlp;
      best.sse = trained.sse;
      best.restart = i;
    }
  }
  return best;
}

}  // namespace nadpcm

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace nadpcm {

// SplitMix64. The output sequence is a pure function of the seed, which the
// decoder relies on to reproduce weight initializations.
struct PrngState {
  std::uint64_t state = 0;
};

std::pair<PrngState, std::uint64_t> prng_next(PrngState s) noexcept;

/// Uniform in [lo, hi) from the top 53 bits of the next output.
std::pair<PrngState, double> prng_uniform(PrngState s, double lo, double hi);

inline constexpr std::size_t kMlpInputs = 10;
inline constexpr std::size_t kMlpHidden = 2;
inline constexpr std::size_t kMlpParams = kMlpHidden * kMlpInputs + kMlpHidden + kMlpHidden + 1;
static_assert(kMlpParams == 25);

using MlpInput = std::array<double, kMlpInputs>;
using MlpParams = std::array<double, kMlpParams>;

/// 10x2x1 perceptron: logistic hidden layer, linear output.
///
/// The flat parameter order is w_in (row-major, one row per hidden unit),
/// b_hid, w_out, b_out. Initialization, the Jacobian columns and forward-mode
/// transmission all use this order.
struct Mlp {
  std::array<double, kMlpHidden * kMlpInputs> w_in{};
  std::array<double, kMlpHidden> b_hid{};
  std::array<double, kMlpHidden> w_out{};
  double b_out = 0.0;

  MlpParams params() const noexcept;
  static Mlp from_params(std::span<const double> params);

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

inline constexpr std::size_t kIdxBHid = kMlpHidden * kMlpInputs;
inline constexpr std::size_t kIdxWOut = kIdxBHid + kMlpHidden;
inline constexpr std::size_t kIdxBOut = kIdxWOut + kMlpHidden;

struct TrainConfig {
  std::size_t epochs = 6;
  std::size_t restarts = 4;
  double lambda_init = 0.01;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double init_scale = 0.5;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Draws all 25 parameters uniform in [-scale, scale) in the flat order.
std::pair<PrngState, Mlp> init_mlp(PrngState prng, double scale);

double sigmoid(double t) noexcept;

/// input[0] is the newest sample.
double mlp_forward(const Mlp& mlp, const MlpInput& input) noexcept;

struct TrainingSet {
  std::vector<MlpInput> inputs;
  std::vector<double> targets;
  bool too_short = false;

  std::size_t size() const noexcept { return targets.size(); }
  bool empty() const noexcept { return targets.empty(); }
};

/// Within-frame one-step prediction pairs for n = 10..L-1.
TrainingSet build_training_set(std::span<const double> frame);

struct ResidualJacobian {
  std::size_t rows = 0;
  std::vector<double> jacobian;  // rows x 25, row-major, d r / d theta
  std::vector<double> residual;  // target - output

  double at(std::size_t row, std::size_t col) const { return jacobian[row * kMlpParams + col]; }
};

ResidualJacobian residual_jacobian(const Mlp& mlp, const TrainingSet& set);

/// Sum of squared residuals of mlp on set.
double sse(const Mlp& mlp, const TrainingSet& set) noexcept;

struct EpochResult {
  Mlp mlp;
  double lambda = 0.0;
  double sse = 0.0;  // SSE of the returned parameters
  bool accepted = false;
};

/// One damped Gauss-Newton step over the whole batch with accept/reject.
EpochResult lm_epoch(const Mlp& mlp, const TrainingSet& set, double lambda,
                     const TrainConfig& config = {});

struct TrainResult {
  Mlp mlp;
  double sse = 0.0;
  std::vector<double> sse_per_epoch;
  bool empty_set = false;
};

/// Runs exactly config.epochs LM epochs, threading the damping factor.
TrainResult train(const Mlp& mlp, const TrainingSet& set, const TrainConfig& config);

/// Per-restart PRNG seed used by multistart_fit.
std::uint64_t restart_seed(std::uint64_t seed, std::size_t restart) noexcept;

struct FitResult {
  Mlp mlp;
  double sse = 0.0;
  std::size_t restart = 0;
  std::vector<double> restart_sse;
  bool too_short = false;  // zero-output net returned
};

/// Trains config.restarts nets from independent initializations on the frame
/// and keeps the one with the lowest training SSE (lowest index on ties).
FitResult multistart_fit(std::span<const double> frame, const TrainConfig& config,
                         std::uint64_t seed);

}  // namespace nadpcm

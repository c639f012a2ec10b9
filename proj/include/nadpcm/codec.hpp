#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nadpcm/linear_predictor.hpp"
#include "nadpcm/neural_predictor.hpp"
#include "nadpcm/quantizer.hpp"
#include "nadpcm/signal.hpp"

namespace nadpcm {

enum class PredictorKind : std::uint8_t { Lpc10 = 0, Lpc25 = 1, Mlp = 2, Hybrid = 3 };
enum class Adaptation : std::uint8_t { Backward = 0, Forward = 1 };

std::string to_string(PredictorKind kind);
std::string to_string(Adaptation mode);

/// Order of the linear predictor for Lpc10/Lpc25 (and the hybrid's linear branch).
std::size_t lpc_order(PredictorKind kind);
bool uses_mlp(PredictorKind kind) noexcept;

struct CodecConfig {
  std::size_t frame_len = 200;
  int bits = 4;
  PredictorKind predictor = PredictorKind::Hybrid;
  Adaptation adaptation = Adaptation::Backward;
  TrainConfig train;
  QuantizerParams quantizer;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument, naming the offending field.
  void validate() const;
  /// Quantizer parameters with the multiplier table filled in.
  QuantizerParams resolved_quantizer() const;

  friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

inline constexpr std::size_t kHistoryLen = 25;

struct CodecState {
  std::array<double, kHistoryLen> history{};  // newest last
  AdaptiveQuantizer quantizer;
  std::size_t frame_index = 0;

  static CodecState initial(const CodecConfig& config);
  void push(double reconstructed) noexcept;

  friend bool operator==(const CodecState&, const CodecState&) = default;
};

struct ZeroPredictor {
  friend bool operator==(ZeroPredictor, ZeroPredictor) = default;
};

using Predictor = std::variant<ZeroPredictor, LpcModel, Mlp>;

/// history: newest last, at least kHistoryLen long for the MLP and at least
/// the model order for LPC.
double predict(const Predictor& predictor, std::span<const double> history);

struct FrameOutcome {
  std::vector<int> codes;
  std::vector<double> recon;
  double sse = 0.0;  // sum over the frame of (x - x^)^2
  CodecState state;
};

/// Closed loop over one frame: predict, quantize the residual, reconstruct,
/// adapt the step, shift the reconstruction into the history.
FrameOutcome encode_frame(const CodecState& state, std::span<const double> frame,
                          const Predictor& predictor);

/// Decoder half of the loop. sse is left at zero.
FrameOutcome decode_frame(const CodecState& state, std::span<const int> codes,
                          const Predictor& predictor);

/// Predictor fitted on the previous decoded frame. kind is Lpc10, Lpc25 or Mlp.
Predictor fit_backward(std::span<const double> prev_decoded, PredictorKind kind,
                       const CodecConfig& config, std::size_t frame_index);

/// Predictor fitted on the current original frame (unpadded samples).
Predictor fit_forward(std::span<const double> current_frame, PredictorKind kind,
                      const CodecConfig& config, std::size_t frame_index);

/// Number of reals a forward-mode frame carries for this kind.
std::size_t forward_coefficient_count(PredictorKind kind);
std::vector<double> predictor_coefficients(const Predictor& predictor, PredictorKind kind);
Predictor predictor_from_coefficients(PredictorKind kind, std::span<const double> coeffs);

struct HybridOutcome {
  bool use_mlp = false;  // the transmitted flag
  FrameOutcome chosen;
  double sse_linear = 0.0;
  double sse_nonlinear = 0.0;
};

/// Runs both branches from the same state snapshot and keeps the one with the
/// smaller reconstruction SSE; ties keep the linear branch.
HybridOutcome encode_frame_hybrid(const CodecState& state, std::span<const double> frame,
                                  const Predictor& linear, const Predictor& nonlinear);

struct FramePayload {
  std::optional<bool> hybrid_flag;                   // true = MLP branch
  std::optional<std::vector<double>> forward_coeffs;
  std::vector<int> codes;

  friend bool operator==(const FramePayload&, const FramePayload&) = default;
};

struct Bitstream {
  CodecConfig config;  // multipliers always explicit
  std::uint32_t sample_rate = 8000;
  std::uint64_t sample_count = 0;
  std::vector<FramePayload> frames;

  std::size_t frame_count() const noexcept { return frames.size(); }

  friend bool operator==(const Bitstream&, const Bitstream&) = default;
};

struct EncodeResult {
  Bitstream stream;
  std::vector<double> recon;              // encoder-side reconstruction, true length
  std::vector<CodecState> states;         // state after each frame
  std::vector<double> frame_sse;          // committed branch
  std::vector<double> hybrid_sse_linear;  // per frame, hybrid only
  std::vector<double> hybrid_sse_nonlinear;
};

/// Throws std::invalid_argument for an empty signal or invalid config.
EncodeResult encode(const Signal& signal, const CodecConfig& config);

struct DecodeResult {
  std::vector<double> recon;  // raw reconstruction, true length
  std::vector<CodecState> states;
};

/// Throws MalformedBitstream on inconsistent payloads.
DecodeResult decode_stream(const Bitstream& stream);

/// Decoded signal, clamped into the valid sample range.
Signal decode(const Bitstream& stream);

/// Payload bits per second excluding header and byte padding.
double payload_bit_rate(const Bitstream& stream);
double payload_bit_rate(const CodecConfig& config, std::uint32_t sample_rate);

}  // namespace nadpcm

#include "nadpcm/codec.hpp"

#include <algorithm>
#include <stdexcept>

#include "nadpcm/errors.hpp"

namespace nadpcm {

std::string to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::Lpc10: return "LPC-10";
    case PredictorKind::Lpc25: return "LPC-25";
    case PredictorKind::Mlp: return "MLP";
    case PredictorKind::Hybrid: return "HYBRID";
  }
  return "?";
}

std::string to_string(Adaptation mode) {
  return mode == Adaptation::Backward ? "backward" : "forward";
}

std::size_t lpc_order(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::Lpc10:
    case PredictorKind::Hybrid: return 10;
    case PredictorKind::Lpc25: return 25;
    case PredictorKind::Mlp: break;
  }
  throw std::invalid_argument("lpc_order: MLP has no linear order");
}

bool uses_mlp(PredictorKind kind) noexcept {
  return kind == PredictorKind::Mlp || kind == PredictorKind::Hybrid;
}

void CodecConfig::validate() const {
  if (bits < kMinBits || bits > kMaxBits) {
    throw std::invalid_argument("bits must be in 2..5, got " + std::to_string(bits));
  }
  if (frame_len < 1 || frame_len > 0xFFFF) {
    throw std::invalid_argument("frame_len must be in 1..65535, got " + std::to_string(frame_len));
  }
  if (static_cast<std::uint8_t>(predictor) > 3) throw std::invalid_argument("unknown predictor kind");
  if (static_cast<std::uint8_t>(adaptation) > 1) throw std::invalid_argument("unknown adaptation mode");
  if (uses_mlp(predictor) && frame_len < kMlpInputs + 1) {
    throw std::invalid_argument("MLP predictors need frame_len >= 11, got " + std::to_string(frame_len));
  }
  if (predictor == PredictorKind::Hybrid && adaptation != Adaptation::Backward) {
    throw std::invalid_argument("the hybrid predictor is only defined for backward adaptation");
  }
  train.validate();
  if (train.epochs > 0xFF) throw std::invalid_argument("epochs must be at most 255");
  if (train.restarts > 0xFF) throw std::invalid_argument("restarts must be at most 255");
  AdaptiveQuantizer check(bits, resolved_quantizer());
}

QuantizerParams CodecConfig::resolved_quantizer() const {
  QuantizerParams q = quantizer;
  if (q.multipliers.empty()) q.multipliers = default_multipliers(bits);
  return q;
}

CodecState CodecState::initial(const CodecConfig& config) {
  CodecState s;
  s.quantizer = AdaptiveQuantizer(config.bits, config.resolved_quantizer());
  return s;
}

void CodecState::push(double reconstructed) noexcept {
  std::shift_left(history.begin(), history.end(), 1);
  history.back() = reconstructed;
}

namespace {

struct PredictVisitor {
  std::span<const double> history;

  double operator()(const ZeroPredictor&) const { return 0.0; }
  double operator()(const LpcModel& m) const { return lpc_predict(m, history); }
  double operator()(const Mlp& m) const {
    if (history.size() < kMlpInputs) throw std::invalid_argument("MLP needs 10 history samples");
    MlpInput in{};
    for (std::size_t i = 0; i < kMlpInputs; ++i) in[i] = history[history.size() - 1 - i];
    return mlp_forward(m, in);
  }
};

Predictor zero_if_degenerate(LpcModel model) {
  if (model.silent) return ZeroPredictor{};
  return model;
}

Predictor fit_on(std::span<const double> samples, PredictorKind kind, const CodecConfig& config,
                 std::size_t frame_index) {
  if (kind == PredictorKind::Mlp) {
    auto fit = multistart_fit(samples, config.train, config.seed ^ frame_index);
    if (fit.too_short) return ZeroPredictor{};
    return fit.mlp;
  }
  if (kind == PredictorKind::Hybrid) throw std::invalid_argument("fit: hybrid is not a single predictor");
  return zero_if_degenerate(fit_lpc(samples, lpc_order(kind)));
}

}  // namespace

double predict(const Predictor& predictor, std::span<const double> history) {
  return std::visit(PredictVisitor{history}, predictor);
}

FrameOutcome encode_frame(const CodecState& state, std::span<const double> frame,
                          const Predictor& predictor) {
  FrameOutcome out{{}, {}, 0.0, state};
  out.codes.reserve(frame.size());
  out.recon.reserve(frame.size());
  for (double x : frame) {
    const double p = predict(predictor, out.state.history);
    const int code = out.state.quantizer.quantize(x - p);
    const double xr = p + out.state.quantizer.dequantize(code);
    out.state.quantizer.adapt(code);
    out.state.push(xr);
    out.codes.push_back(code);
    out.recon.push_back(xr);
    out.sse += (x - xr) * (x - xr);
  }
  ++out.state.frame_index;
  return out;
}

FrameOutcome decode_frame(const CodecState& state, std::span<const int> codes,
                          const Predictor& predictor) {
  FrameOutcome out{{codes.begin(), codes.end()}, {}, 0.0, state};
  out.recon.reserve(codes.size());
  for (int code : codes) {
    const double p = predict(predictor, out.state.history);
    const double xr = p + out.state.quantizer.dequantize(code);
    out.state.quantizer.adapt(code);
    out.state.push(xr);
    out.recon.push_back(xr);
  }
  ++out.state.frame_index;
  return out;
}

Predictor fit_backward(std::span<const double> prev_decoded, PredictorKind kind,
                       const CodecConfig& config, std::size_t frame_index) {
  if (frame_index == 0) throw std::invalid_argument("fit_backward: frame 0 has no previous frame");
  return fit_on(prev_decoded, kind, config, frame_index);
}

Predictor fit_forward(std::span<const double> current_frame, PredictorKind kind,
                      const CodecConfig& config, std::size_t frame_index) {
  return fit_on(current_frame, kind, config, frame_index);
}

std::size_t forward_coefficient_count(PredictorKind kind) {
  return kind == PredictorKind::Mlp ? kMlpParams : lpc_order(kind);
}

std::vector<double> predictor_coefficients(const Predictor& predictor, PredictorKind kind) {
  std::vector<double> out(forward_coefficient_count(kind), 0.0);
  if (const auto* lpc = std::get_if<LpcModel>(&predictor)) {
    if (lpc->coeffs.size() != out.size()) throw std::invalid_argument("LPC order does not match kind");
    out = lpc->coeffs;
  } else if (const auto* mlp = std::get_if<Mlp>(&predictor)) {
    if (kind != PredictorKind::Mlp) throw std::invalid_argument("MLP predictor for a linear kind");
    const auto p = mlp->params();
    out.assign(p.begin(), p.end());
  }
  return out;
}

Predictor predictor_from_coefficients(PredictorKind kind, std::span<const double> coeffs) {
  if (coeffs.size() != forward_coefficient_count(kind)) {
    throw std::invalid_argument("wrong coefficient count for " + to_string(kind));
  }
  if (kind == PredictorKind::Mlp) return Mlp::from_params(coeffs);
  return LpcModel::from_coeffs({coeffs.begin(), coeffs.end()});
}

HybridOutcome encode_frame_hybrid(const CodecState& state, std::span<const double> frame,
                                  const Predictor& linear, const Predictor& nonlinear) {
  auto lin = encode_frame(state, frame, linear);
  auto nl = encode_frame(state, frame, nonlinear);
  HybridOutcome out;
  out.sse_linear = lin.sse;
  out.sse_nonlinear = nl.sse;
  out.use_mlp = nl.sse < lin.sse;
  out.chosen = out.use_mlp ? std::move(nl) : std::move(lin);
  return out;
}

EncodeResult encode(const Signal& signal, const CodecConfig& config) {
  if (signal.empty()) throw std::invalid_argument("encode: empty signal");
  config.validate();

  EncodeResult result;
  Bitstream& stream = result.stream;
  stream.config = config;
  stream.config.quantizer = config.resolved_quantizer();
  stream.sample_rate = signal.sample_rate();
  stream.sample_count = signal.size();

  const auto frames = split_frames(signal, config.frame_len);
  const bool backward = config.adaptation == Adaptation::Backward;
  const bool hybrid = config.predictor == PredictorKind::Hybrid;

  CodecState state = CodecState::initial(stream.config);
  std::vector<double> prev_recon;
  result.recon.reserve(frames.size() * config.frame_len);

  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& frame = frames[k];
    FramePayload payload;
    FrameOutcome outcome;

    if (hybrid) {
      Predictor lp = ZeroPredictor{};
      Predictor nlp = ZeroPredictor{};
      if (k > 0) {
        lp = fit_backward(prev_recon, PredictorKind::Lpc10, config, k);
        nlp = fit_backward(prev_recon, PredictorKind::Mlp, config, k);
      }
      auto h = encode_frame_hybrid(state, frame.samples, lp, nlp);
      payload.hybrid_flag = h.use_mlp;
      result.hybrid_sse_linear.push_back(h.sse_linear);
      result.hybrid_sse_nonlinear.push_back(h.sse_nonlinear);
      outcome = std::move(h.chosen);
    } else if (backward) {
      const Predictor pred =
          k == 0 ? Predictor{ZeroPredictor{}} : fit_backward(prev_recon, config.predictor, config, k);
      outcome = encode_frame(state, frame.samples, pred);
    } else {
      const std::span<const double> original(frame.samples.data(), frame.true_len);
      auto coeffs = predictor_coefficients(fit_forward(original, config.predictor, config, k),
                                           config.predictor);
      // Predict with exactly what the decoder will rebuild.
      const Predictor pred = predictor_from_coefficients(config.predictor, coeffs);
      payload.forward_coeffs = std::move(coeffs);
      outcome = encode_frame(state, frame.samples, pred);
    }

    payload.codes = outcome.codes;
    stream.frames.push_back(std::move(payload));
    result.frame_sse.push_back(outcome.sse);
    result.states.push_back(outcome.state);
    state = outcome.state;
    const std::size_t keep = std::min(frame.true_len, outcome.recon.size());
    result.recon.insert(result.recon.end(), outcome.recon.begin(),
                        outcome.recon.begin() + static_cast<std::ptrdiff_t>(keep));
    prev_recon = std::move(outcome.recon);
  }
  return result;
}

DecodeResult decode_stream(const Bitstream& stream) {
  const CodecConfig& config = stream.config;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw MalformedBitstream(std::string("invalid header: ") + e.what());
  }
  const std::size_t expected_frames =
      static_cast<std::size_t>((stream.sample_count + config.frame_len - 1) / config.frame_len);
  if (stream.frames.size() != expected_frames) {
    throw MalformedBitstream("stream has " + std::to_string(stream.frames.size()) +
                             " frames, header implies " + std::to_string(expected_frames));
  }

  const bool backward = config.adaptation == Adaptation::Backward;
  const bool hybrid = config.predictor == PredictorKind::Hybrid;

  DecodeResult result;
  result.recon.reserve(expected_frames * config.frame_len);
  CodecState state = CodecState::initial(config);
  std::vector<double> prev_recon;

  for (std::size_t k = 0; k < stream.frames.size(); ++k) {
    const auto& payload = stream.frames[k];
    if (payload.codes.size() != config.frame_len) {
      throw MalformedBitstream("frame carries " + std::to_string(payload.codes.size()) + " codes", k);
    }
    if (payload.hybrid_flag.has_value() != hybrid) {
      throw MalformedBitstream("hybrid flag presence does not match header", k);
    }
    if (payload.forward_coeffs.has_value() == backward) {
      throw MalformedBitstream("forward coefficient presence does not match header", k);
    }

    Predictor pred = ZeroPredictor{};
    if (!backward) {
      if (payload.forward_coeffs->size() != forward_coefficient_count(config.predictor)) {
        throw MalformedBitstream("wrong forward coefficient count", k);
      }
      pred = predictor_from_coefficients(config.predictor, *payload.forward_coeffs);
    } else if (k > 0) {
      PredictorKind kind = config.predictor;
      if (hybrid) kind = *payload.hybrid_flag ? PredictorKind::Mlp : PredictorKind::Lpc10;
      pred = fit_backward(prev_recon, kind, config, k);
    }

    FrameOutcome outcome;
    try {
      outcome = decode_frame(state, payload.codes, pred);
    } catch (const MalformedBitstream& e) {
      throw MalformedBitstream(e.what(), k);
    }
    state = outcome.state;
    result.states.push_back(state);
    const std::size_t remaining = static_cast<std::size_t>(stream.sample_count) - result.recon.size();
    const std::size_t keep = std::min(remaining, outcome.recon.size());
    result.recon.insert(result.recon.end(), outcome.recon.begin(),
                        outcome.recon.begin() + static_cast<std::ptrdiff_t>(keep));
    prev_recon = std::move(outcome.recon);
  }
  return result;
}

Signal decode(const Bitstream& stream) {
  const auto result = decode_stream(stream);
  return Signal::clamped(result.recon, stream.sample_rate);
}

double payload_bit_rate(const CodecConfig& config, std::uint32_t sample_rate) {
  double bits_per_sample = config.bits;
  if (config.predictor == PredictorKind::Hybrid) bits_per_sample += 1.0 / static_cast<double>(config.frame_len);
  if (config.adaptation == Adaptation::Forward) {
    bits_per_sample += 64.0 * static_cast<double>(forward_coefficient_count(config.predictor)) /
                       static_cast<double>(config.frame_len);
  }
  return bits_per_sample * sample_rate;
}

double payload_bit_rate(const Bitstream& stream) {
  return payload_bit_rate(stream.config, stream.sample_rate);
}

}  // namespace nadpcm

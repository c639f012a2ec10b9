#include "nadpcm/bitstream.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "nadpcm/errors.hpp"

namespace nadpcm {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'D', 'P'};

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { uint(v, 2); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void u64(std::uint64_t v) { uint(v, 8); }
  void real(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  void uint(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double real() { return std::bit_cast<double>(u64()); }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::uint64_t uint(int n) {
    if (in_.size() - pos_ < static_cast<std::size_t>(n)) throw MalformedBitstream("truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// MSB-first bit packer.
class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t value, int width) {
    for (int i = width - 1; i >= 0; --i) put_bit((value >> i) & 1u);
  }
  void align() {
    while (fill_ != 0) put_bit(0);
  }
  void put_real(double v) {
    align();
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void flush() { align(); }

 private:
  void put_bit(std::uint32_t b) {
    if (fill_ == 0) out_.push_back(0);
    if (b) out_.back() |= static_cast<std::uint8_t>(0x80u >> fill_);
    fill_ = (fill_ + 1) % 8;
  }
  std::vector<std::uint8_t>& out_;
  int fill_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t get(int width, std::size_t frame) {
    if (remaining_bits() < static_cast<std::size_t>(width)) {
      throw MalformedBitstream("truncated payload", frame);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < width; ++i) {
      const auto byte = in_[bit_ / 8];
      v = (v << 1) | ((byte >> (7 - bit_ % 8)) & 1u);
      ++bit_;
    }
    return v;
  }
  void align() { bit_ = (bit_ + 7) / 8 * 8; }
  double get_real(std::size_t frame) {
    align();
    if (remaining_bits() < 64) throw MalformedBitstream("truncated payload", frame);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in_[bit_ / 8 + i]) << (8 * i);
    bit_ += 64;
    return std::bit_cast<double>(bits);
  }
  std::size_t remaining_bits() const noexcept { return in_.size() * 8 - bit_; }
  std::size_t position() const noexcept { return bit_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t bit_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const Bitstream& stream) {
  const CodecConfig& c = stream.config;
  c.validate();
  const auto q = c.resolved_quantizer();

  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u8(kFormatVersion);
  w.u32(stream.sample_rate);
  w.u64(stream.sample_count);
  w.u16(static_cast<std::uint16_t>(c.frame_len));
  w.u8(static_cast<std::uint8_t>(c.bits));
  w.u8(static_cast<std::uint8_t>(c.predictor));
  w.u8(static_cast<std::uint8_t>(c.adaptation));
  w.u8(static_cast<std::uint8_t>(c.train.epochs));
  w.u8(static_cast<std::uint8_t>(c.train.restarts));
  w.u64(c.seed);
  w.real(q.step0);
  w.real(q.step_min);
  w.real(q.step_max);
  w.u8(static_cast<std::uint8_t>(q.multipliers.size()));
  for (double m : q.multipliers) w.real(m);
  w.real(c.train.init_scale);
  w.real(c.train.lambda_init);
  w.real(c.train.lambda_up);
  w.real(c.train.lambda_down);

  const int bias = 1 << (c.bits - 1);
  BitWriter bits(out);
  for (std::size_t k = 0; k < stream.frames.size(); ++k) {
    const auto& f = stream.frames[k];
    if (f.hybrid_flag) bits.put(*f.hybrid_flag ? 1u : 0u, 1);
    if (f.forward_coeffs) {
      for (double v : *f.forward_coeffs) bits.put_real(v);
    }
    for (int code : f.codes) {
      if (code < -bias || code >= bias) {
        throw std::invalid_argument("serialize: code out of range in frame " + std::to_string(k));
      }
      bits.put(static_cast<std::uint32_t>(code + bias), c.bits);
    }
  }
  bits.flush();
  return out;
}

Bitstream parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (char ch : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(ch)) throw MalformedBitstream("bad magic, not an NADP stream");
  }
  const auto version = r.u8();
  if (version != kFormatVersion) {
    throw MalformedBitstream("unsupported format version " + std::to_string(version));
  }

  Bitstream s;
  CodecConfig& c = s.config;
  s.sample_rate = r.u32();
  s.sample_count = r.u64();
  c.frame_len = r.u16();
  c.bits = r.u8();
  const auto kind = r.u8();
  const auto mode = r.u8();
  if (kind > 3) throw MalformedBitstream("unknown predictor kind " + std::to_string(kind));
  if (mode > 1) throw MalformedBitstream("unknown adaptation mode " + std::to_string(mode));
  c.predictor = static_cast<PredictorKind>(kind);
  c.adaptation = static_cast<Adaptation>(mode);
  c.train.epochs = r.u8();
  c.train.restarts = r.u8();
  c.seed = r.u64();
  c.quantizer.step0 = r.real();
  c.quantizer.step_min = r.real();
  c.quantizer.step_max = r.real();
  const auto mult_count = r.u8();
  c.quantizer.multipliers.resize(mult_count);
  for (double& m : c.quantizer.multipliers) m = r.real();
  c.train.init_scale = r.real();
  c.train.lambda_init = r.real();
  c.train.lambda_up = r.real();
  c.train.lambda_down = r.real();

  if (s.sample_rate == 0) throw MalformedBitstream("invalid header: sample rate is zero");
  if (c.quantizer.multipliers.empty()) throw MalformedBitstream("invalid header: empty multiplier table");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw MalformedBitstream(std::string("invalid header: ") + e.what());
  }

  const std::size_t frame_count =
      static_cast<std::size_t>((s.sample_count + c.frame_len - 1) / c.frame_len);
  const bool hybrid = c.predictor == PredictorKind::Hybrid;
  const bool forward = c.adaptation == Adaptation::Forward;
  const std::size_t ncoef = forward ? forward_coefficient_count(c.predictor) : 0;
  const int bias = 1 << (c.bits - 1);

  // Reject absurd sample counts before allocating.
  const std::size_t min_frame_bits = c.frame_len * static_cast<std::size_t>(c.bits);
  const std::size_t payload_bytes = bytes.size() - r.position();
  if (frame_count > 0 && payload_bytes * 8 / min_frame_bits + 1 < frame_count) {
    throw MalformedBitstream("truncated payload", payload_bytes * 8 / min_frame_bits);
  }

  BitReader bits(bytes.subspan(r.position()));
  s.frames.reserve(frame_count);
  for (std::size_t k = 0; k < frame_count; ++k) {
    FramePayload f;
    if (hybrid) f.hybrid_flag = bits.get(1, k) != 0;
    if (forward) {
      f.forward_coeffs.emplace(ncoef);
      for (double& v : *f.forward_coeffs) v = bits.get_real(k);
    }
    f.codes.resize(c.frame_len);
    for (int& code : f.codes) code = static_cast<int>(bits.get(c.bits, k)) - bias;
    s.frames.push_back(std::move(f));
  }
  bits.align();
  if (bits.remaining_bits() != 0) {
    throw MalformedBitstream("trailing bytes after the last frame");
  }
  return s;
}

std::size_t payload_bits(const Bitstream& stream) {
  const auto& c = stream.config;
  std::size_t total = 0;
  for (const auto& f : stream.frames) {
    if (f.hybrid_flag) total += 1;
    if (f.forward_coeffs) total = (total + 7) / 8 * 8 + 64 * f.forward_coeffs->size();
    total += f.codes.size() * static_cast<std::size_t>(c.bits);
  }
  return total;
}

}  // namespace nadpcm

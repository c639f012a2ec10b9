#include <catch_amalgamated.hpp>

#include <vector>

#include "nadpcm/bitstream.hpp"
#include "nadpcm/errors.hpp"
#include "nadpcm/harness.hpp"

using namespace nadpcm;

namespace {

CodecConfig config(PredictorKind kind, Adaptation mode, int bits, std::size_t frame_len) {
  CodecConfig c;
  c.predictor = kind;
  c.adaptation = mode;
  c.bits = bits;
  c.frame_len = frame_len;
  return c;
}

}  // namespace

TEST_CASE("parse inverts serialize", "[bitstream][property]") {
  const auto sig = synth::speech_like(1234, 5);
  for (int bits = kMinBits; bits <= kMaxBits; ++bits) {
    for (auto [kind, mode] : std::vector<std::pair<PredictorKind, Adaptation>>{
             {PredictorKind::Lpc10, Adaptation::Backward},
             {PredictorKind::Hybrid, Adaptation::Backward},
             {PredictorKind::Lpc25, Adaptation::Forward},
             {PredictorKind::Mlp, Adaptation::Forward}}) {
      auto cfg = config(kind, mode, bits, 150);
      cfg.seed = 0xDEADBEEFCAFEull + static_cast<std::uint64_t>(bits);
      const auto enc = encode(sig, cfg);
      const auto bytes = serialize(enc.stream);
      const auto back = parse(bytes);
      INFO(to_string(kind) << " " << to_string(mode) << " Nq=" << bits);
      REQUIRE(back == enc.stream);
      CHECK(decode_stream(back).recon == enc.recon);
    }
  }
}

TEST_CASE("payload size for a hybrid stream", "[bitstream]") {
  const auto sig = synth::voiced(600, 140.0, 1);
  const auto enc = encode(sig, config(PredictorKind::Hybrid, Adaptation::Backward, 3, 200));
  REQUIRE(enc.stream.frame_count() == 3);
  CHECK(payload_bits(enc.stream) == 3 * (1 + 200 * 3));
  // 121 header bytes with four multipliers, then ceil(1803 / 8) = 226.
  CHECK(serialize(enc.stream).size() == 121 + 226);
}

TEST_CASE("payload size for a forward stream", "[bitstream]") {
  const auto sig = synth::voiced(400, 140.0, 1);
  const auto enc = encode(sig, config(PredictorKind::Lpc10, Adaptation::Forward, 4, 200));
  // Each frame is 10 aligned doubles plus 800 code bits, already byte aligned.
  CHECK(payload_bits(enc.stream) == 2 * (640 + 800));
}

TEST_CASE("malformed streams are rejected", "[bitstream][errors]") {
  const auto sig = synth::voiced(600, 140.0, 1);
  const auto bytes =
      serialize(encode(sig, config(PredictorKind::Hybrid, Adaptation::Backward, 3, 200)).stream);

  SECTION("truncated final frame names the frame") {
    auto cut = bytes;
    cut.pop_back();
    try {
      parse(cut);
      FAIL("expected an error");
    } catch (const MalformedBitstream& e) {
      CHECK(e.frame() == std::optional<std::size_t>(2));
    }
  }
  SECTION("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(parse(bad), MalformedBitstream);
  }
  SECTION("unknown version") {
    auto bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(parse(bad), MalformedBitstream);
  }
  SECTION("invalid header field") {
    auto bad = bytes;
    bad[19] = 7;  // bits
    CHECK_THROWS_WITH(parse(bad), Catch::Matchers::ContainsSubstring("invalid header"));
  }
  SECTION("trailing bytes") {
    auto extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(parse(extra), MalformedBitstream);
  }
  SECTION("empty and short inputs") {
    CHECK_THROWS_AS(parse(std::vector<std::uint8_t>{}), MalformedBitstream);
    CHECK_THROWS_AS(parse(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 30)),
                    MalformedBitstream);
  }
  SECTION("huge sample count does not allocate") {
    auto bad = bytes;
    for (int i = 9; i < 17; ++i) bad[static_cast<std::size_t>(i)] = 0xff;
    CHECK_THROWS_AS(parse(bad), MalformedBitstream);
  }
}

TEST_CASE("random corruption never crashes the decoder", "[bitstream][fuzz]") {
  const auto sig = synth::speech_like(800, 2);
  const auto bytes =
      serialize(encode(sig, config(PredictorKind::Lpc25, Adaptation::Forward, 4, 100)).stream);
  PrngState st{123};
  for (int trial = 0; trial < 300; ++trial) {
    auto bad = bytes;
    std::uint64_t r;
    std::tie(st, r) = prng_next(st);
    const auto pos = static_cast<std::size_t>(r % bad.size());
    bad[pos] = static_cast<std::uint8_t>(r >> 32);
    try {
      const auto s = parse(bad);
      const auto out = decode(s);
      for (double v : out.samples()) REQUIRE((v >= -1.0 && v < 1.0));
    } catch (const MalformedBitstream&) {
    }
  }
}

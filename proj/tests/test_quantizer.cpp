#include <catch_amalgamated.hpp>

#include <cmath>

#include "nadpcm/errors.hpp"
#include "nadpcm/neural_predictor.hpp"
#include "nadpcm/quantizer.hpp"

using namespace nadpcm;
using Catch::Approx;

namespace {

AdaptiveQuantizer with_step(int bits, double step) {
  QuantizerParams p;
  p.step0 = step;
  return AdaptiveQuantizer(bits, p);
}

}  // namespace

TEST_CASE("quantize uses floor midrise cells", "[quantizer]") {
  const auto q2 = with_step(2, 0.1);
  CHECK(q2.quantize(0.0) == 0);
  CHECK(q2.dequantize(q2.quantize(0.0)) == Approx(0.05));
  CHECK(q2.quantize(10.0) == 1);
  CHECK(q2.quantize(-10.0) == -2);
  CHECK(q2.quantize(-1e-12) == -1);

  const auto q3 = with_step(3, 0.2);
  CHECK(q3.quantize(-0.35) == -2);
  CHECK(q3.quantize(0.2) == 1);  // boundary goes to the upper cell
}

TEST_CASE("dequantize returns cell midpoints", "[quantizer]") {
  const auto q2 = with_step(2, 0.1);
  CHECK(q2.dequantize(0) == Approx(0.05));
  CHECK(q2.dequantize(-1) == Approx(-0.05));
  const auto q3 = with_step(3, 0.2);
  CHECK(q3.dequantize(3) == Approx(0.7));
  CHECK_THROWS_AS(q3.dequantize(4), MalformedBitstream);
  CHECK_THROWS_AS(q3.dequantize(-5), MalformedBitstream);
}

TEST_CASE("magnitude ranks are symmetric", "[quantizer]") {
  CHECK(magnitude_rank(0) == 0);
  CHECK(magnitude_rank(-1) == 0);
  CHECK(magnitude_rank(1) == 1);
  CHECK(magnitude_rank(-2) == 1);
  CHECK(magnitude_rank(15) == 15);
  CHECK(magnitude_rank(-16) == 15);
}

TEST_CASE("adapt multiplies and clamps the step", "[quantizer][adapt]") {
  const auto q = with_step(2, 0.1);
  CHECK(q.adapted(0).step() == Approx(0.08));
  CHECK(q.adapted(-1).step() == Approx(0.08));
  CHECK(q.adapted(1).step() == Approx(0.16));

  QuantizerParams top;
  top.step0 = 0.5;
  const AdaptiveQuantizer at_max(4, top);
  CHECK(at_max.adapted(7).step() == 0.5);

  QuantizerParams bottom;
  bottom.step0 = bottom.step_min;
  const AdaptiveQuantizer at_min(4, bottom);
  CHECK(at_min.adapted(0).step() == bottom.step_min);

  const auto adapted = q.adapted(1);
  CHECK(adapted.bits() == q.bits());
  CHECK(adapted.multipliers() == q.multipliers());
  CHECK(adapted.step_min() == q.step_min());
}

TEST_CASE("default multiplier tables", "[quantizer]") {
  CHECK(default_multipliers(2) == std::vector<double>{0.8, 1.6});
  CHECK(default_multipliers(3) == std::vector<double>{0.9, 0.9, 1.25, 1.75});
  CHECK(default_multipliers(4).size() == 8);
  const auto m5 = default_multipliers(5);
  REQUIRE(m5.size() == 16);
  CHECK(m5[7] == 0.9);
  CHECK(m5[8] == 1.2);
  CHECK(m5[15] == 2.6);
  CHECK_THROWS_AS(default_multipliers(6), std::invalid_argument);
}

TEST_CASE("constructor validation", "[quantizer]") {
  CHECK_THROWS_AS(AdaptiveQuantizer(1), std::invalid_argument);
  CHECK_THROWS_AS(AdaptiveQuantizer(6), std::invalid_argument);
  QuantizerParams wrong_table;
  wrong_table.multipliers = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(AdaptiveQuantizer(3, wrong_table), std::invalid_argument);
  QuantizerParams negative;
  negative.multipliers = {0.9, -1.0};
  CHECK_THROWS_AS(AdaptiveQuantizer(2, negative), std::invalid_argument);
  QuantizerParams inverted;
  inverted.step_min = 0.6;
  CHECK_THROWS_AS(AdaptiveQuantizer(2, inverted), std::invalid_argument);
  QuantizerParams outside;
  outside.step0 = 1.0;
  CHECK_THROWS_AS(AdaptiveQuantizer(2, outside), std::invalid_argument);
}

TEST_CASE("step bounds and granular error under random input", "[quantizer][property]") {
  for (int bits = kMinBits; bits <= kMaxBits; ++bits) {
    AdaptiveQuantizer enc(bits), dec(bits);
    PrngState st{static_cast<std::uint64_t>(bits)};
    for (int i = 0; i < 20000; ++i) {
      double e, scale;
      std::tie(st, scale) = prng_uniform(st, -6.0, 0.0);
      std::tie(st, e) = prng_uniform(st, -1.0, 1.0);
      e *= std::pow(10.0, scale);
      const int code = enc.quantize(e);
      REQUIRE(code >= enc.min_code());
      REQUIRE(code <= enc.max_code());
      if (std::abs(e) < (1 << (bits - 1)) * enc.step()) {
        REQUIRE(std::abs(e - enc.dequantize(code)) <= enc.step() / 2 + 1e-15);
      }
      enc.adapt(code);
      dec.adapt(code);
      REQUIRE(enc == dec);
      REQUIRE(enc.step() >= enc.step_min());
      REQUIRE(enc.step() <= enc.step_max());
    }
  }
}

TEST_CASE("zero input drives the step to its floor", "[quantizer]") {
  for (int bits = kMinBits; bits <= kMaxBits; ++bits) {
    AdaptiveQuantizer q(bits);
    int n = 0;
    while (q.step() > q.step_min() && n < 10000) {
      q.adapt(q.quantize(0.0));
      ++n;
    }
    CHECK(q.step() == q.step_min());
    CHECK(n < 200);
    for (int i = 0; i < 100; ++i) q.adapt(q.quantize(0.0));
    CHECK(q.step() == q.step_min());
  }
}

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "nadpcm/errors.hpp"
#include "nadpcm/signal.hpp"
#include "nadpcm/neural_predictor.hpp"

using namespace nadpcm;
using Catch::Approx;

namespace {

std::vector<std::uint8_t> le16(std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  return {static_cast<std::uint8_t>(u & 0xff), static_cast<std::uint8_t>(u >> 8)};
}

std::int16_t first_int(const std::vector<std::uint8_t>& b) {
  return static_cast<std::int16_t>(b[0] | (b[1] << 8));
}

Signal one(double s) { return Signal({s}, 8000); }

std::vector<double> random_samples(std::size_t n, std::uint64_t seed, double scale = 0.5) {
  PrngState st{seed};
  std::vector<double> out(n);
  for (auto& v : out) std::tie(st, v) = prng_uniform(st, -scale, scale);
  return out;
}

}  // namespace

TEST_CASE("load_pcm16 maps integers to v / 32768", "[signal][pcm]") {
  CHECK(load_pcm16(le16(0), 8000).samples()[0] == 0.0);
  CHECK(load_pcm16(le16(-32768), 8000).samples()[0] == -1.0);
  CHECK(load_pcm16(le16(2048), 8000).samples()[0] == 0.0625);
  CHECK(load_pcm16(le16(32767), 8000).samples()[0] < 1.0);
}

TEST_CASE("load_pcm16 rejects odd byte counts", "[signal][pcm]") {
  const std::vector<std::uint8_t> odd{1, 2, 3};
  CHECK_THROWS_AS(load_pcm16(odd, 8000), MalformedInput);
}

TEST_CASE("save_pcm16 rounds and clamps", "[signal][pcm]") {
  CHECK(first_int(save_pcm16(one(0.0))) == 0);
  CHECK(first_int(save_pcm16(one(0.9999999))) == 32767);
  CHECK(first_int(save_pcm16(one(-0.5))) == -16384);
  CHECK(first_int(save_pcm16(one(-1.0))) == -32768);
}

TEST_CASE("PCM16 round trip stays within half an LSB", "[signal][pcm][property]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Signal x(random_samples(500, seed, 0.99), 8000);
    const auto y = load_pcm16(save_pcm16(x), 8000);
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(std::abs(x.samples()[i] - y.samples()[i]) <= 1.0 / 65536.0);
    }
  }
}

TEST_CASE("Signal enforces its invariants", "[signal]") {
  CHECK_THROWS_AS(Signal({1.0}, 8000), std::invalid_argument);
  CHECK_THROWS_AS(Signal({-1.5}, 8000), std::invalid_argument);
  CHECK_THROWS_AS(Signal({0.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(Signal({std::nan("")}, 8000), std::invalid_argument);
  const auto c = Signal::clamped(std::vector<double>{2.0, -3.0, 0.25}, 8000);
  CHECK(c.samples()[0] < 1.0);
  CHECK(c.samples()[1] == -1.0);
  CHECK(c.samples()[2] == 0.25);
}

TEST_CASE("WAV round trip and format checks", "[signal][wav]") {
  const Signal x(random_samples(321, 7), 16000);
  const auto bytes = save_wav(x);
  CHECK(bytes.size() == 44 + 2 * 321);
  const auto y = load_wav(bytes);
  CHECK(y.sample_rate() == 16000);
  REQUIRE(y.size() == x.size());
  CHECK(y == load_pcm16(save_pcm16(x), 16000));

  SECTION("stereo is rejected") {
    auto stereo = bytes;
    stereo[22] = 2;
    CHECK_THROWS_AS(load_wav(stereo), MalformedInput);
  }
  SECTION("non-PCM format code is rejected") {
    auto flt = bytes;
    flt[20] = 3;
    CHECK_THROWS_AS(load_wav(flt), MalformedInput);
  }
  SECTION("8-bit is rejected") {
    auto b8 = bytes;
    b8[34] = 8;
    CHECK_THROWS_AS(load_wav(b8), MalformedInput);
  }
  SECTION("garbage is rejected") {
    const std::vector<std::uint8_t> junk(64, 0x41);
    CHECK_THROWS_AS(load_wav(junk), MalformedInput);
  }
}

TEST_CASE("split_frames pads the final frame", "[signal][frames]") {
  const Signal s400(std::vector<double>(400, 0.1), 8000);
  CHECK(split_frames(s400, 200).size() == 2);

  const Signal s450(std::vector<double>(450, 0.1), 8000);
  const auto f = split_frames(s450, 200);
  REQUIRE(f.size() == 3);
  CHECK(f[2].true_len == 50);
  CHECK(f[2].samples.size() == 200);
  CHECK(f[2].samples[49] == 0.1);
  CHECK(f[2].samples[50] == 0.0);

  const Signal s10(std::vector<double>(10, 0.1), 8000);
  const auto g = split_frames(s10, 200);
  REQUIRE(g.size() == 1);
  CHECK(g[0].true_len == 10);

  CHECK_THROWS_AS(split_frames(s10, 0), std::invalid_argument);
}

TEST_CASE("segsnr examples", "[signal][segsnr]") {
  const std::vector<double> x{0.5, -0.25, 0.125, 0.3};
  SECTION("perfect reconstruction hits the ceiling") {
    const auto r = segsnr(x, x, 4);
    REQUIRE(r.segments_used == 1);
    CHECK(r.per_segment_db[0] == kSegsnrCeilingDb);
  }
  SECTION("20 dB when error energy is 1/100 of signal energy") {
    const std::vector<double> ref{1, 0, 0, 0};
    const std::vector<double> dec{0.9, 0, 0, 0};
    const auto r = segsnr(ref, dec, 4);
    CHECK(r.per_segment_db[0] == Approx(20.0).margin(1e-9));
  }
  SECTION("silent segments are skipped") {
    const std::vector<double> ref{0, 0, 0, 0, 1, 0, 0, 0};
    const std::vector<double> dec{0.1, 0, 0, 0, 0.9, 0, 0, 0};
    const auto r = segsnr(ref, dec, 4);
    CHECK(r.segments_used == 1);
    CHECK(r.segments_skipped == 1);
    CHECK(r.segment_index[0] == 1);
  }
  SECTION("partial trailing segment ignored") {
    const std::vector<double> ref{1, 0, 0, 0, 1, 1};
    const auto r = segsnr(ref, ref, 4);
    CHECK(r.segments_used + r.segments_skipped == 1);
  }
  SECTION("errors") {
    const std::vector<double> shorter{1, 2};
    CHECK_THROWS_AS(segsnr(x, shorter, 2), std::invalid_argument);
    CHECK_THROWS_AS(segsnr(x, x, 0), std::invalid_argument);
  }
  SECTION("no usable segments leaves zero summary") {
    const std::vector<double> z(8, 0.0);
    const auto r = segsnr(z, z, 4);
    CHECK(r.segments_used == 0);
    CHECK(r.mean_db == 0.0);
  }
}

TEST_CASE("segsnr properties", "[signal][segsnr][property]") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto ref = random_samples(800, seed);
    auto dec = ref;
    const auto noise = random_samples(800, seed * 977, 0.01);
    for (std::size_t i = 0; i < dec.size(); ++i) dec[i] += noise[i];

    const auto base = segsnr(ref, dec, 200);
    for (double v : base.per_segment_db) REQUIRE(v <= kSegsnrCeilingDb);
    const auto [m, s] = mean_std(base.per_segment_db);
    CHECK(base.mean_db == m);
    CHECK(base.std_db == s);

    // Scaling both signals by the same factor leaves each SNR unchanged.
    const double c = 0.25 + static_cast<double>(seed) * 0.05;
    auto ref_c = ref, dec_c = dec;
    for (auto& v : ref_c) v *= c;
    for (auto& v : dec_c) v *= c;
    const auto scaled = segsnr(ref_c, dec_c, 200);
    REQUIRE(scaled.per_segment_db.size() == base.per_segment_db.size());
    for (std::size_t k = 0; k < base.per_segment_db.size(); ++k) {
      CHECK(scaled.per_segment_db[k] == Approx(base.per_segment_db[k]).margin(1e-9));
    }

    // Segments are scored independently: swapping the two halves permutes them.
    std::vector<double> ref_sw(ref.begin() + 400, ref.end()), dec_sw(dec.begin() + 400, dec.end());
    ref_sw.insert(ref_sw.end(), ref.begin(), ref.begin() + 400);
    dec_sw.insert(dec_sw.end(), dec.begin(), dec.begin() + 400);
    const auto swapped = segsnr(ref_sw, dec_sw, 200);
    CHECK(swapped.per_segment_db[0] == base.per_segment_db[2]);
    CHECK(swapped.per_segment_db[3] == base.per_segment_db[1]);

    const auto same = segsnr(ref, ref, 200);
    for (double v : same.per_segment_db) CHECK(v == kSegsnrCeilingDb);
  }
}

TEST_CASE("mean_std uses the population deviation", "[signal][stats]") {
  const std::vector<double> a{5, 5, 5}, b{0, 2}, c{1, 2, 3, 4};
  CHECK(mean_std(a) == std::pair{5.0, 0.0});
  CHECK(mean_std(b) == std::pair{1.0, 1.0});
  const auto [m, s] = mean_std(c);
  CHECK(m == 2.5);
  CHECK(s == Approx(1.1180339887).margin(1e-10));
  CHECK_THROWS_AS(mean_std(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("z_score", "[signal][stats]") {
  CHECK(z_score(3.0, 1.0, 3.0, 2.0, 10) == 0.0);
  CHECK(z_score(20.68, 5.8, 21.11, 5.7, 100) == Approx(0.5288).margin(1e-4));
  CHECK(z_score(0, 1, 10, 1, 2) == Approx(10.0).margin(1e-12));
  CHECK(z_score(1, 0, 1, 0, 5) == 0.0);
  CHECK(z_score(1, 0, 2, 0, 5) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(z_score(1, 1, 2, 1, 0), std::invalid_argument);

  PrngState st{99};
  for (int i = 0; i < 200; ++i) {
    double m1, s1, m2, s2;
    std::tie(st, m1) = prng_uniform(st, -30, 30);
    std::tie(st, s1) = prng_uniform(st, 0, 8);
    std::tie(st, m2) = prng_uniform(st, -30, 30);
    std::tie(st, s2) = prng_uniform(st, 0, 8);
    const double z = z_score(m1, s1, m2, s2, 50);
    CHECK(z >= 0.0);
    CHECK(z == z_score(m2, s2, m1, s1, 50));
  }
}

TEST_CASE("segsnr CSV export", "[signal][csv]") {
  const std::vector<double> ref{1, 0, 0, 0, 0.5, 0, 0, 0};
  const std::vector<double> dec{0.9, 0, 0, 0, 0.5, 0, 0, 0};
  const auto csv = segsnr_csv(segsnr(ref, dec, 4));
  CHECK(csv.rfind("segment_index,snr_db\n0,20\n1,100\nmean,60\nstd,40\n", 0) == 0);
}

#include "nadpcm/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nadpcm/csv.hpp"
#include "nadpcm/errors.hpp"

namespace nadpcm {

double max_sample() noexcept { return std::nextafter(1.0, 0.0); }

Signal::Signal(std::vector<double> samples, std::uint32_t sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ == 0) throw std::invalid_argument("sample rate must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double s = samples_[i];
    if (!(s >= -1.0 && s < 1.0)) {
      throw std::invalid_argument("sample " + std::to_string(i) + " outside [-1, 1)");
    }
  }
}

Signal Signal::clamped(std::span<const double> samples, std::uint32_t sample_rate) {
  std::vector<double> out(samples.begin(), samples.end());
  for (double& s : out) {
    if (std::isnan(s)) s = 0.0;
    s = std::clamp(s, -1.0, max_sample());
  }
  return Signal(std::move(out), sample_rate);
}

namespace {

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at));
}

}  // namespace

Signal load_pcm16(std::span<const std::uint8_t> bytes, std::uint32_t sample_rate) {
  if (bytes.size() % 2 != 0) {
    throw MalformedInput("PCM16 data has odd byte count " + std::to_string(bytes.size()));
  }
  std::vector<double> samples(bytes.size() / 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto v = static_cast<std::int16_t>(read_u16(bytes, 2 * i));
    samples[i] = static_cast<double>(v) / 32768.0;
  }
  return Signal(std::move(samples), sample_rate);
}

std::vector<std::uint8_t> save_pcm16(const Signal& signal) {
  std::vector<std::uint8_t> out;
  out.reserve(signal.size() * 2);
  for (double s : signal.samples()) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

Signal load_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw MalformedInput("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) throw MalformedInput("WAV chunk overruns file");
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw MalformedInput("WAV fmt chunk too short");
      const auto format = read_u16(bytes, body);
      const auto channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      const auto bits = read_u16(bytes, body + 14);
      if (format != 1) throw MalformedInput("WAV format code " + std::to_string(format) + " is not PCM");
      if (channels != 1) throw MalformedInput("WAV has " + std::to_string(channels) + " channels, need mono");
      if (bits != 16) throw MalformedInput("WAV has " + std::to_string(bits) + " bits/sample, need 16");
      if (rate == 0) throw MalformedInput("WAV sample rate is zero");
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt) throw MalformedInput("WAV data chunk precedes fmt chunk");
      return load_pcm16(bytes.subspan(body, size), rate);
    }
    pos = body + size + (size & 1u);
  }
  throw MalformedInput("WAV file has no data chunk");
}

std::vector<std::uint8_t> save_wav(const Signal& signal) {
  const auto pcm = save_pcm16(signal);
  std::vector<std::uint8_t> out;
  out.reserve(44 + pcm.size());
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + pcm.size()));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, signal.sample_rate());
  put_u32(out, signal.sample_rate() * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(pcm.size()));
  out.insert(out.end(), pcm.begin(), pcm.end());
  return out;
}

std::vector<Frame> split_frames(std::span<const double> samples, std::size_t frame_len) {
  if (frame_len == 0) throw std::invalid_argument("frame length must be at least 1");
  std::vector<Frame> frames;
  frames.reserve((samples.size() + frame_len - 1) / frame_len);
  for (std::size_t start = 0; start < samples.size(); start += frame_len) {
    Frame f;
    f.true_len = std::min(frame_len, samples.size() - start);
    f.samples.assign(frame_len, 0.0);
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(start), f.true_len, f.samples.begin());
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<Frame> split_frames(const Signal& signal, std::size_t frame_len) {
  return split_frames(std::span<const double>(signal.samples()), frame_len);
}

SegsnrReport segsnr(std::span<const double> reference, std::span<const double> decoded,
                    std::size_t segment_len) {
  if (reference.size() != decoded.size()) {
    throw std::invalid_argument("segsnr: reference has " + std::to_string(reference.size()) +
                                " samples, decoded has " + std::to_string(decoded.size()));
  }
  if (segment_len == 0) throw std::invalid_argument("segsnr: segment length must be at least 1");

  SegsnrReport report;
  const std::size_t count = reference.size() / segment_len;
  for (std::size_t k = 0; k < count; ++k) {
    double signal_energy = 0.0;
    double error_energy = 0.0;
    for (std::size_t n = k * segment_len; n < (k + 1) * segment_len; ++n) {
      const double e = reference[n] - decoded[n];
      signal_energy += reference[n] * reference[n];
      error_energy += e * e;
    }
    if (signal_energy < kSilenceEnergyFloor) {
      ++report.segments_skipped;
      continue;
    }
    double snr = kSegsnrCeilingDb;
    if (error_energy >= kPerfectErrorFloor) {
      snr = std::min(kSegsnrCeilingDb, 10.0 * std::log10(signal_energy / error_energy));
    }
    report.per_segment_db.push_back(snr);
    report.segment_index.push_back(k);
  }
  report.segments_used = report.per_segment_db.size();
  if (report.segments_used > 0) {
    std::tie(report.mean_db, report.std_db) = mean_std(report.per_segment_db);
  }
  return report;
}

SegsnrReport segsnr(const Signal& reference, const Signal& decoded, std::size_t segment_len) {
  return segsnr(std::span<const double>(reference.samples()),
                std::span<const double>(decoded.samples()), segment_len);
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / n)};
}

double z_score(double mean1, double std1, double mean2, double std2, std::size_t n) {
  if (n == 0) throw std::invalid_argument("z_score: n must be at least 1");
  if (std1 < 0.0 || std2 < 0.0) throw std::invalid_argument("z_score: negative deviation");
  const double diff = std::abs(mean1 - mean2);
  const double nn = static_cast<double>(n);
  const double denom = std::sqrt(std1 * std1 / nn + std2 * std2 / nn);
  if (denom == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / denom;
}

std::string segsnr_csv(const SegsnrReport& report) {
  CsvTable table{{"segment_index", "snr_db"}, {}};
  for (std::size_t i = 0; i < report.per_segment_db.size(); ++i) {
    table.rows.push_back({static_cast<std::int64_t>(report.segment_index[i]), report.per_segment_db[i]});
  }
  table.rows.push_back({std::string("mean"), report.mean_db});
  table.rows.push_back({std::string("std"), report.std_db});
  return to_csv(table);
}

}  // namespace nadpcm

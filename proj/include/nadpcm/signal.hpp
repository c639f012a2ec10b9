#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nadpcm {

/// Mono sample sequence in normalized units. Every sample lies in [-1, 1).
class Signal {
 public:
  Signal() = default;

  /// Throws std::invalid_argument if a sample is out of range or not finite,
  /// or if sample_rate is zero.
  Signal(std::vector<double> samples, std::uint32_t sample_rate);

  /// Builds a signal from arbitrary reals by clamping into [-1, 1).
  static Signal clamped(std::span<const double> samples, std::uint32_t sample_rate);

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::uint32_t sample_rate() const noexcept { return sample_rate_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
  std::uint32_t sample_rate_ = 8000;
};

/// Largest representable sample value (just below 1.0).
double max_sample() noexcept;

// PCM16 little-endian, v -> v / 32768.
Signal load_pcm16(std::span<const std::uint8_t> bytes, std::uint32_t sample_rate);
std::vector<std::uint8_t> save_pcm16(const Signal& signal);

// RIFF/WAVE, PCM format code 1, mono, 16 bit only.
Signal load_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_wav(const Signal& signal);

struct Frame {
  std::vector<double> samples;  // always frame_len long
  std::size_t true_len = 0;     // samples before zero padding
};

/// Consecutive non-overlapping frames; the last one is zero-padded.
std::vector<Frame> split_frames(const Signal& signal, std::size_t frame_len);
std::vector<Frame> split_frames(std::span<const double> samples, std::size_t frame_len);

struct SegsnrReport {
  std::vector<double> per_segment_db;
  std::vector<std::size_t> segment_index;  // position of each used segment
  double mean_db = 0.0;
  double std_db = 0.0;
  std::size_t segments_used = 0;
  std::size_t segments_skipped = 0;
};

inline constexpr double kSegsnrCeilingDb = 100.0;
inline constexpr double kSilenceEnergyFloor = 1e-12;
inline constexpr double kPerfectErrorFloor = 1e-20;

/// Segmental SNR over full segments of segment_len samples. A trailing partial
/// segment is ignored. Silent segments are skipped; each SNR is capped at
/// kSegsnrCeilingDb. With no usable segment, mean_db and std_db are 0.
SegsnrReport segsnr(std::span<const double> reference, std::span<const double> decoded,
                    std::size_t segment_len);
SegsnrReport segsnr(const Signal& reference, const Signal& decoded, std::size_t segment_len);

/// Arithmetic mean and population standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

/// |m1 - m2| / sqrt(s1^2/n + s2^2/n). Returns +inf when both deviations are
/// zero and the means differ.
double z_score(double mean1, double std1, double mean2, double std2, std::size_t n);

/// Significance threshold applied to z_score.
inline constexpr double kSignificanceZ = 2.5;

/// CSV with columns segment_index,snr_db followed by mean and std summary rows.
std::string segsnr_csv(const SegsnrReport& report);

}  // namespace nadpcm

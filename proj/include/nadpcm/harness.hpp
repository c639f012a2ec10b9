#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nadpcm/codec.hpp"
#include "nadpcm/csv.hpp"
#include "nadpcm/signal.hpp"

namespace nadpcm {

/// A row of the method comparison: adaptation mode plus predictor.
struct Method {
  std::string name;  // e.g. "ADPCMB-LPC-10"
  Adaptation adaptation = Adaptation::Backward;
  PredictorKind predictor = PredictorKind::Lpc10;

  friend bool operator==(const Method&, const Method&) = default;
};

/// ADPCMF/ADPCMB x {LPC-10, LPC-25, MLP} followed by ADPCMB-HYBRID.
const std::vector<Method>& all_methods();
/// Case-insensitive lookup by name.
std::optional<Method> find_method(const std::string& name);
CodecConfig method_config(const CodecConfig& base, const Method& method, int bits);

struct NamedSignal {
  std::string name;
  Signal signal;
};

/// Error raised while evaluating one corpus file; the message names the file.
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MethodRow {
  std::string method;
  int bits = 0;
  double segsnr_mean = 0.0;
  double segsnr_std = 0.0;
  std::size_t frames_evaluated = 0;
  std::size_t frames_skipped = 0;
  /// No segment of the corpus had enough energy to score.
  bool flagged = false;
};

/// Encodes and decodes every file with every (method, bits) cell, pooling
/// per-segment SNRs (segment length = base.frame_len) across the corpus.
/// Rows come out method-major in the order given. jobs > 1 runs cells on
/// worker threads; the result does not depend on it.
std::vector<MethodRow> evaluate_methods(std::span<const NamedSignal> corpus,
                                        std::span<const int> bits_list,
                                        std::span<const Method> methods, const CodecConfig& base,
                                        unsigned jobs = 1);

struct SignificanceTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> z;  // symmetric, zero diagonal

  bool significant(std::size_t i, std::size_t j) const { return z[i][j] >= kSignificanceZ; }
};

/// Pairwise z statistics. All rows must share the same bits.
SignificanceTable significance_matrix(std::span<const MethodRow> rows, std::size_t n);

struct SweepCurve {
  std::vector<double> x;
  std::vector<double> y_train;
  std::vector<double> y_test;
};

/// SEGSNR against training epochs for one initialization. The net is trained
/// open loop on frame k; y_train is its closed-loop SNR on frame k and y_test
/// on frame k + 1, coded continuously after frame k. The loop starts from the
/// original samples preceding frame k and a fresh quantizer step.
SweepCurve epoch_sweep(const Signal& signal, std::size_t frame_pair_index, int bits,
                       std::size_t max_epochs, std::uint64_t restart_seed,
                       const CodecConfig& base = {});

struct EpochHistogram {
  std::vector<std::size_t> optimal_epochs;  // per frame pair
  std::map<std::size_t, double> percent;    // epoch -> % of frame pairs
};

/// For each consecutive frame pair, the epoch count (1..max_epochs) that
/// maximizes the test-frame SNR of epoch_sweep; ties pick the smaller count.
/// Pair k uses seed config.seed ^ k.
EpochHistogram optimal_epoch_histogram(const Signal& signal, int bits, std::size_t max_epochs,
                                       const CodecConfig& config = {});

inline constexpr std::size_t kMetricWindow = 200;

/// 10, 20, ..., 300.
std::vector<std::size_t> default_frame_lengths();

struct FrameLengthPoint {
  std::string method;
  int bits = 0;
  std::size_t frame_len = 0;
  double segsnr_mean = 0.0;
  double segsnr_std = 0.0;
};

struct FrameLengthSweep {
  std::vector<FrameLengthPoint> points;
  std::vector<std::string> notices;  // skipped cells
};

/// SEGSNR (fixed kMetricWindow-sample window) per (method, bits, frame length).
FrameLengthSweep frame_length_sweep(const Signal& signal, std::span<const std::size_t> lengths,
                                    std::span<const int> bits_list,
                                    std::span<const Method> methods, const CodecConfig& base,
                                    unsigned jobs = 1);

struct PredictorUsage {
  double pct_mlp = 0.0;
  double pct_lpc = 0.0;
};

/// Share of hybrid frames coded with each branch. Throws std::invalid_argument
/// for a non-hybrid stream.
PredictorUsage predictor_usage(const Bitstream& stream);

CsvTable to_table(std::span<const MethodRow> rows);
CsvTable to_table(const SignificanceTable& table);
CsvTable to_table(const SweepCurve& curve, const std::string& x_name);
CsvTable to_table(const EpochHistogram& histogram);
CsvTable to_table(std::span<const FrameLengthPoint> points);

/// Two whitespace-separated columns, one point per line.
std::string gnuplot_data(std::span<const double> x, std::span<const double> y);

// Deterministic synthetic test material. All generators are pure functions of
// their arguments and return samples inside [-1, 1).
namespace synth {

/// Linear AR(2) x(n) = a1 x(n-1) + a2 x(n-2) + noise.
Signal ar2(std::size_t n, double a1, double a2, double noise_std, std::uint64_t seed,
           std::uint32_t sample_rate = 8000);

/// x(n) = 0.5 x(n-1) - 0.3 x(n-2) + 0.4 x(n-1) x(n-2) + noise.
Signal nonlinear_ar(std::size_t n, double noise_std, std::uint64_t seed,
                    std::uint32_t sample_rate = 8000);

/// Sustained vowel: glottal pulse train with slight pitch jitter through three
/// formant resonators, plus a little aspiration noise.
Signal voiced(std::size_t n, double f0_hz, std::uint64_t seed, std::uint32_t sample_rate = 8000);

/// Speech-like utterance alternating voiced syllables with varying pitch and
/// formants, unvoiced fricative bursts and near-silent pauses.
Signal speech_like(std::size_t n, std::uint64_t seed, std::uint32_t sample_rate = 8000);

}  // namespace synth

}  // namespace nadpcm

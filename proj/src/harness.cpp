#include "nadpcm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <thread>

#include "nadpcm/neural_predictor.hpp"

namespace nadpcm {

namespace {

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
// written by index so that completion order never matters.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  for (unsigned t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Segments of length `window` scored on the true-length signals.
std::vector<double> segment_snrs(const Signal& reference, const Signal& decoded, std::size_t window,
                                 std::size_t& skipped) {
  const auto report = segsnr(reference, decoded, window);
  skipped += report.segments_skipped;
  return report.per_segment_db;
}

double frame_snr(std::span<const double> reference, std::span<const double> decoded) {
  const auto report = segsnr(reference, decoded, reference.size());
  return report.segments_used ? report.per_segment_db.front() : 0.0;
}

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      {"ADPCMF-LPC-10", Adaptation::Forward, PredictorKind::Lpc10},
      {"ADPCMF-LPC-25", Adaptation::Forward, PredictorKind::Lpc25},
      {"ADPCMF-MLP", Adaptation::Forward, PredictorKind::Mlp},
      {"ADPCMB-LPC-10", Adaptation::Backward, PredictorKind::Lpc10},
      {"ADPCMB-LPC-25", Adaptation::Backward, PredictorKind::Lpc25},
      {"ADPCMB-MLP", Adaptation::Backward, PredictorKind::Mlp},
      {"ADPCMB-HYBRID", Adaptation::Backward, PredictorKind::Hybrid},
  };
  return methods;
}

std::optional<Method> find_method(const std::string& name) {
  const auto key = upper(name);
  for (const auto& m : all_methods()) {
    if (m.name == key) return m;
  }
  return std::nullopt;
}

CodecConfig method_config(const CodecConfig& base, const Method& method, int bits) {
  CodecConfig c = base;
  c.adaptation = method.adaptation;
  c.predictor = method.predictor;
  if (c.bits != bits) c.quantizer.multipliers.clear();
  c.bits = bits;
  return c;
}

std::vector<MethodRow> evaluate_methods(std::span<const NamedSignal> corpus,
                                        std::span<const int> bits_list,
                                        std::span<const Method> methods, const CodecConfig& base,
                                        unsigned jobs) {
  if (corpus.empty()) throw std::invalid_argument("evaluate_methods: empty corpus");
  const std::size_t files = corpus.size();
  const std::size_t cells = methods.size() * bits_list.size() * files;

  struct CellResult {
    std::vector<double> snrs;
    std::size_t skipped = 0;
  };
  std::vector<CellResult> results(cells);

  parallel_for(cells, jobs, [&](std::size_t idx) {
    const std::size_t f = idx % files;
    const std::size_t b = (idx / files) % bits_list.size();
    const std::size_t m = idx / files / bits_list.size();
    const auto& file = corpus[f];
    try {
      const auto config = method_config(base, methods[m], bits_list[b]);
      const auto encoded = encode(file.signal, config);
      const auto decoded = decode(encoded.stream);
      results[idx].snrs = segment_snrs(file.signal, decoded, config.frame_len, results[idx].skipped);
    } catch (const std::exception& e) {
      throw HarnessError(file.name + ": " + methods[m].name + " Nq=" +
                         std::to_string(bits_list[b]) + ": " + e.what());
    }
  });

  std::vector<MethodRow> rows;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t b = 0; b < bits_list.size(); ++b) {
      MethodRow row;
      row.method = methods[m].name;
      row.bits = bits_list[b];
      std::vector<double> pooled;
      for (std::size_t f = 0; f < files; ++f) {
        const auto& cell = results[(m * bits_list.size() + b) * files + f];
        pooled.insert(pooled.end(), cell.snrs.begin(), cell.snrs.end());
        row.frames_skipped += cell.skipped;
      }
      row.frames_evaluated = pooled.size();
      row.flagged = pooled.empty();
      if (!pooled.empty()) std::tie(row.segsnr_mean, row.segsnr_std) = mean_std(pooled);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

SignificanceTable significance_matrix(std::span<const MethodRow> rows, std::size_t n) {
  SignificanceTable t;
  for (const auto& r : rows) {
    if (r.bits != rows.front().bits) {
      throw std::invalid_argument("significance_matrix: rows mix different bit depths");
    }
    t.names.push_back(r.method);
  }
  t.z.assign(rows.size(), std::vector<double>(rows.size(), 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (i == j) continue;
      t.z[i][j] = z_score(rows[i].segsnr_mean, rows[i].segsnr_std, rows[j].segsnr_mean,
                          rows[j].segsnr_std, n);
    }
  }
  return t;
}

SweepCurve epoch_sweep(const Signal& signal, std::size_t frame_pair_index, int bits,
                       std::size_t max_epochs, std::uint64_t restart_seed,
                       const CodecConfig& base) {
  if (max_epochs < 1) throw std::invalid_argument("epoch_sweep: max_epochs must be at least 1");
  CodecConfig config = base;
  if (config.bits != bits) config.quantizer.multipliers.clear();
  config.bits = bits;
  config.predictor = PredictorKind::Mlp;
  config.adaptation = Adaptation::Backward;
  config.validate();

  const std::size_t len = config.frame_len;
  const std::size_t start = frame_pair_index * len;
  if (signal.size() < start + 2 * len) {
    throw std::invalid_argument("epoch_sweep: signal needs at least " +
                                std::to_string(frame_pair_index + 2) + " full frames");
  }
  const auto& x = signal.samples();
  const std::span<const double> train_frame(x.data() + start, len);
  const std::span<const double> test_frame(x.data() + start + len, len);

  CodecState initial = CodecState::initial(config);
  for (std::size_t i = 0; i < kHistoryLen; ++i) {
    const std::size_t back = kHistoryLen - i;
    initial.history[i] = back <= start ? x[start - back] : 0.0;
  }

  const auto set = build_training_set(train_frame);
  auto [_, mlp] = init_mlp(PrngState{restart_seed}, config.train.init_scale);
  double lambda = config.train.lambda_init;

  SweepCurve curve;
  for (std::size_t e = 1; e <= max_epochs; ++e) {
    const auto step = lm_epoch(mlp, set, lambda, config.train);
    mlp = step.mlp;
    lambda = step.lambda;
    const Predictor pred = mlp;
    const auto on_train = encode_frame(initial, train_frame, pred);
    const auto on_test = encode_frame(on_train.state, test_frame, pred);
    curve.x.push_back(static_cast<double>(e));
    curve.y_train.push_back(frame_snr(train_frame, on_train.recon));
    curve.y_test.push_back(frame_snr(test_frame, on_test.recon));
  }
  return curve;
}

EpochHistogram optimal_epoch_histogram(const Signal& signal, int bits, std::size_t max_epochs,
                                       const CodecConfig& config) {
  const std::size_t full_frames = signal.size() / config.frame_len;
  if (full_frames < 2) throw std::invalid_argument("optimal_epoch_histogram: need at least 2 frames");

  EpochHistogram h;
  for (std::size_t k = 0; k + 1 < full_frames; ++k) {
    const auto curve = epoch_sweep(signal, k, bits, max_epochs, config.seed ^ k, config);
    const auto best = std::max_element(curve.y_test.begin(), curve.y_test.end());
    h.optimal_epochs.push_back(static_cast<std::size_t>(best - curve.y_test.begin()) + 1);
  }
  const double unit = 100.0 / static_cast<double>(h.optimal_epochs.size());
  for (std::size_t e : h.optimal_epochs) h.percent[e] += unit;
  return h;
}

std::vector<std::size_t> default_frame_lengths() {
  std::vector<std::size_t> out;
  for (std::size_t l = 10; l <= 300; l += 10) out.push_back(l);
  return out;
}

FrameLengthSweep frame_length_sweep(const Signal& signal, std::span<const std::size_t> lengths,
                                    std::span<const int> bits_list,
                                    std::span<const Method> methods, const CodecConfig& base,
                                    unsigned jobs) {
  struct Cell {
    std::size_t length;
    int bits;
    const Method* method;
  };
  FrameLengthSweep sweep;
  std::vector<Cell> cells;
  for (const auto& m : methods) {
    for (int b : bits_list) {
      for (std::size_t l : lengths) {
        if (uses_mlp(m.predictor) && l < kMlpInputs + 1) {
          sweep.notices.push_back(m.name + " Nq=" + std::to_string(b) + " frame " +
                                  std::to_string(l) + ": skipped, MLP needs at least 11 samples");
          continue;
        }
        cells.push_back({l, b, &m});
      }
    }
  }
  sweep.points.resize(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const auto& cell = cells[i];
    auto config = method_config(base, *cell.method, cell.bits);
    config.frame_len = cell.length;
    const auto decoded = decode(encode(signal, config).stream);
    const auto report = segsnr(signal, decoded, kMetricWindow);
    sweep.points[i] = {cell.method->name, cell.bits, cell.length, report.mean_db, report.std_db};
  });
  return sweep;
}

PredictorUsage predictor_usage(const Bitstream& stream) {
  if (stream.config.predictor != PredictorKind::Hybrid) {
    throw std::invalid_argument("predictor_usage: stream is not hybrid");
  }
  if (stream.frames.empty()) return {};
  std::size_t mlp = 0;
  for (const auto& f : stream.frames) mlp += f.hybrid_flag.value_or(false) ? 1 : 0;
  const double total = static_cast<double>(stream.frames.size());
  const double pct_mlp = 100.0 * static_cast<double>(mlp) / total;
  return {pct_mlp, 100.0 - pct_mlp};
}

CsvTable to_table(std::span<const MethodRow> rows) {
  CsvTable t{{"method", "bits", "segsnr_mean", "segsnr_std", "frames"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.method, static_cast<std::int64_t>(r.bits), r.segsnr_mean, r.segsnr_std,
                      static_cast<std::int64_t>(r.frames_evaluated)});
  }
  return t;
}

CsvTable to_table(const SignificanceTable& table) {
  CsvTable t{{"method_a", "method_b", "z", "significant"}, {}};
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    for (std::size_t j = i + 1; j < table.names.size(); ++j) {
      t.rows.push_back({table.names[i], table.names[j], table.z[i][j],
                        static_cast<std::int64_t>(table.significant(i, j) ? 1 : 0)});
    }
  }
  return t;
}

CsvTable to_table(const SweepCurve& curve, const std::string& x_name) {
  CsvTable t{{x_name, "train_db", "test_db"}, {}};
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    t.rows.push_back({curve.x[i], curve.y_train.at(i), curve.y_test.at(i)});
  }
  return t;
}

CsvTable to_table(const EpochHistogram& histogram) {
  CsvTable t{{"epochs", "percent"}, {}};
  for (const auto& [epoch, pct] : histogram.percent) {
    t.rows.push_back({static_cast<std::int64_t>(epoch), pct});
  }
  return t;
}

CsvTable to_table(std::span<const FrameLengthPoint> points) {
  CsvTable t{{"method", "bits", "frame_len", "segsnr_mean", "segsnr_std"}, {}};
  for (const auto& p : points) {
    t.rows.push_back({p.method, static_cast<std::int64_t>(p.bits),
                      static_cast<std::int64_t>(p.frame_len), p.segsnr_mean, p.segsnr_std});
  }
  return t;
}

std::string gnuplot_data(std::span<const double> x, std::span<const double> y) {
  std::string out;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    out += format_real(x[i]) + ' ' + format_real(y[i]) + '\n';
  }
  return out;
}

namespace synth {

namespace {

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : state_{seed} {}

  double uniform(double lo, double hi) {
    double v;
    std::tie(state_, v) = prng_uniform(state_, lo, hi);
    return v;
  }
  // Box-Muller.
  double gauss() {
    const double u1 = 1.0 - uniform(0.0, 1.0);
    const double u2 = uniform(0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  PrngState state_;
};

// Two-pole resonator with unit peak gain at the centre frequency.
class Resonator {
 public:
  Resonator(double freq, double bandwidth, double rate) { tune(freq, bandwidth, rate); }

  void tune(double freq, double bandwidth, double rate) {
    const double r = std::exp(-std::numbers::pi * bandwidth / rate);
    const double theta = 2.0 * std::numbers::pi * freq / rate;
    a1_ = 2.0 * r * std::cos(theta);
    a2_ = -r * r;
    gain_ = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double operator()(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0, a2_ = 0, gain_ = 1, y1_ = 0, y2_ = 0;
};

Signal normalized(std::vector<double> x, double peak, std::uint32_t rate) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : x) v *= peak / m;
  }
  return Signal::clamped(x, rate);
}

// Differentiated Rosenberg glottal pulse train.
class GlottalSource {
 public:
  double operator()(double period) {
    const double t = phase_ / period;
    double g = 0.0;
    if (t < kOpen) {
      g = 0.5 * (1.0 - std::cos(std::numbers::pi * t / kOpen));
    } else if (t < kOpen + kClose) {
      g = std::cos(std::numbers::pi * (t - kOpen) / (2.0 * kClose));
    }
    phase_ += 1.0;
    if (phase_ >= period) phase_ -= period;
    const double d = g - prev_;
    prev_ = g;
    return d;
  }

 private:
  static constexpr double kOpen = 0.5;
  static constexpr double kClose = 0.15;
  double phase_ = 0.0;
  double prev_ = 0.0;
};

struct Vowel {
  double f1, f2, f3;
};

constexpr Vowel kVowels[] = {
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
};

}  // namespace

Signal ar2(std::size_t n, double a1, double a2, double noise_std, std::uint64_t seed,
           std::uint32_t sample_rate) {
  Noise noise(seed);
  std::vector<double> x(n, 0.0);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t i = 0; i < n + 200; ++i) {
    const double v = a1 * x1 + a2 * x2 + noise_std * noise.gauss();
    x2 = x1;
    x1 = v;
    if (i >= 200) x[i - 200] = v;
  }
  return Signal::clamped(x, sample_rate);
}

Signal nonlinear_ar(std::size_t n, double noise_std, std::uint64_t seed,
                    std::uint32_t sample_rate) {
  Noise noise(seed);
  std::vector<double> x(n, 0.0);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t i = 0; i < n + 200; ++i) {
    double v = 0.5 * x1 - 0.3 * x2 + 0.4 * x1 * x2 + noise_std * noise.gauss();
    v = std::clamp(v, -0.99, 0.99);
    x2 = x1;
    x1 = v;
    if (i >= 200) x[i - 200] = v;
  }
  return Signal::clamped(x, sample_rate);
}

Signal voiced(std::size_t n, double f0_hz, std::uint64_t seed, std::uint32_t sample_rate) {
  Noise noise(seed);
  const double rate = sample_rate;
  Resonator r1(kVowels[0].f1, 55, rate), r2(kVowels[0].f2, 65, rate), r3(kVowels[0].f3, 100, rate);
  GlottalSource glottis;
  std::vector<double> x(n, 0.0);
  double period = rate / f0_hz;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) period = rate / (f0_hz * (1.0 + 0.01 * noise.gauss()));
    const double s = r1(glottis(period) + 0.002 * noise.gauss());
    x[i] = s + 0.5 * r2(s) + 0.25 * r3(s);
  }
  return normalized(std::move(x), 0.6, sample_rate);
}

Signal speech_like(std::size_t n, std::uint64_t seed, std::uint32_t sample_rate) {
  Noise noise(seed);
  const double rate = sample_rate;
  std::vector<double> x(n, 0.0);
  Resonator r1(500, 55, rate), r2(1500, 65, rate), r3(2500, 100, rate), fric(3000, 900, rate);
  GlottalSource glottis;

  std::size_t i = 0;
  std::size_t segment = 0;
  while (i < n) {
    const int type = segment % 4 == 3 ? 2 : (segment % 4 == 1 ? 1 : 0);  // 0 voiced, 1 fricative, 2 pause
    const auto length = static_cast<std::size_t>(
        type == 0 ? noise.uniform(1600, 2800) : type == 1 ? noise.uniform(500, 1100) : noise.uniform(300, 700));
    const std::size_t end = std::min(n, i + length);
    const Vowel& v = kVowels[segment % 5];
    const Vowel& w = kVowels[(segment + 2) % 5];
    const double f0_start = noise.uniform(95, 230);
    const double f0_end = f0_start * noise.uniform(0.8, 1.2);
    const double level = noise.uniform(0.4, 1.0);
    double prev = 0.0;
    for (std::size_t j = i; j < end; ++j) {
      const double t = static_cast<double>(j - i) / static_cast<double>(end - i);
      const double env = level * std::sin(std::numbers::pi * t);
      double s = 0.0;
      if (type == 0) {
        const double f0 = f0_start + (f0_end - f0_start) * t;
        if (j % 40 == 0) {
          r1.tune(v.f1 + (w.f1 - v.f1) * t, 55, rate);
          r2.tune(v.f2 + (w.f2 - v.f2) * t, 65, rate);
          r3.tune(v.f3 + (w.f3 - v.f3) * t, 100, rate);
        }
        const double g = r1(glottis(rate / f0) + 0.003 * noise.gauss());
        s = env * (g + 0.6 * r2(g) + 0.3 * r3(g));
      } else if (type == 1) {
        const double w0 = noise.gauss();
        s = 0.15 * env * fric(w0 - prev);
        prev = w0;
      }
      x[j] = s;
    }
    i = end;
    ++segment;
  }
  return normalized(std::move(x), 0.7, sample_rate);
}

}  // namespace synth

}  // namespace nadpcm

#include "nadpcm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "nadpcm/bitstream.hpp"
#include "nadpcm/codec.hpp"
#include "nadpcm/errors.hpp"
#include "nadpcm/harness.hpp"
#include "nadpcm/signal.hpp"

namespace nadpcm::cli {

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

std::vector<std::uint8_t> read_bytes(const std::string& path, std::istream& stdin_stream) {
  if (path == "-") {
    return {std::istreambuf_iterator<char>(stdin_stream), std::istreambuf_iterator<char>()};
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes, std::ostream& stdout_stream) {
  if (path == "-") {
    stdout_stream.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    stdout_stream.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write to '" + path + "' failed");
}

void write_text(const std::string& path, const std::string& text, std::ostream& stdout_stream) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}, stdout_stream);
}

bool ends_with_wav(const std::string& path) {
  if (path.size() < 4) return false;
  std::string ext = path.substr(path.size() - 4);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

bool is_wav(const std::string& format, const std::string& path) {
  if (format == "wav") return true;
  if (format == "raw") return false;
  return ends_with_wav(path);
}

struct AudioOptions {
  std::string format = "auto";
  std::uint32_t rate = 8000;
};

Signal read_audio(const std::string& path, const AudioOptions& opt, std::istream& in) {
  const auto bytes = read_bytes(path, in);
  try {
    return is_wav(opt.format, path) ? load_wav(bytes) : load_pcm16(bytes, opt.rate);
  } catch (const MalformedInput& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_audio(const std::string& path, const Signal& s, const AudioOptions& opt, std::ostream& out) {
  write_bytes(path, is_wav(opt.format, path) ? save_wav(s) : save_pcm16(s), out);
}

// Flags shared by every subcommand that builds a codec configuration.
struct ConfigOptions {
  CodecConfig config;
  std::string predictor = "hybrid";
  std::string mode = "backward";
  std::vector<double> multipliers;
  std::size_t epochs = 6;
  std::size_t restarts = 4;

  void add(CLI::App& app, bool bits_flag) {
    if (bits_flag) {
      app.add_option("--bits", config.bits, "Quantizer bits Nq (2..5)")
          ->check(CLI::Range(kMinBits, kMaxBits))
          ->capture_default_str();
    }
    app.add_option("--frame-len", config.frame_len, "Samples per frame")
        ->check(CLI::Range(1, 65535))
        ->capture_default_str();
    app.add_option("--predictor", predictor, "lpc10, lpc25, mlp or hybrid")
        ->check(CLI::IsMember({"lpc10", "lpc25", "mlp", "hybrid"}, CLI::ignore_case))
        ->capture_default_str();
    app.add_option("--mode", mode, "backward or forward adaptation")
        ->check(CLI::IsMember({"backward", "forward"}, CLI::ignore_case))
        ->capture_default_str();
    app.add_option("--epochs", epochs, "LM epochs per fit")->check(CLI::Range(1, 255))->capture_default_str();
    app.add_option("--restarts", restarts, "Random initializations per fit")
        ->check(CLI::Range(1, 255))
        ->capture_default_str();
    app.add_option("--seed", config.seed, "Seed of the weight initializations")->capture_default_str();
    app.add_option("--delta0", config.quantizer.step0, "Initial quantizer step")->capture_default_str();
    app.add_option("--delta-min", config.quantizer.step_min, "Minimum quantizer step")->capture_default_str();
    app.add_option("--delta-max", config.quantizer.step_max, "Maximum quantizer step")->capture_default_str();
    app.add_option("--multipliers", multipliers, "Step multipliers by code magnitude (comma list)")
        ->delimiter(',');
    app.add_option("--init-scale", config.train.init_scale, "Weight initialization half-range")
        ->capture_default_str();
    app.add_option("--lambda-init", config.train.lambda_init, "Initial LM damping")->capture_default_str();
    app.add_option("--lambda-up", config.train.lambda_up, "Damping factor after a rejected step")
        ->capture_default_str();
    app.add_option("--lambda-down", config.train.lambda_down, "Damping factor after an accepted step")
        ->capture_default_str();
  }

  CodecConfig resolve() const {
    CodecConfig c = config;
    const std::string p = CLI::detail::to_lower(predictor);
    c.predictor = p == "lpc10"   ? PredictorKind::Lpc10
                  : p == "lpc25" ? PredictorKind::Lpc25
                  : p == "mlp"   ? PredictorKind::Mlp
                                 : PredictorKind::Hybrid;
    c.adaptation = CLI::detail::to_lower(mode) == "forward" ? Adaptation::Forward : Adaptation::Backward;
    c.train.epochs = epochs;
    c.train.restarts = restarts;
    c.quantizer.multipliers = multipliers;
    return c;
  }
};

void print_segsnr(std::ostream& os, const SegsnrReport& r) {
  os << "SEGSNR: " << format_real(r.mean_db) << " dB (std " << format_real(r.std_db) << ", "
     << r.segments_used << " segments, " << r.segments_skipped << " silent)\n";
}

std::string kbps(double bps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", bps / 1000.0);
  return buf;
}

int cmd_encode(const std::string& in_path, const std::string& out_path, const AudioOptions& audio,
               const CodecConfig& config, std::size_t segment_len, const std::string& csv_path,
               Streams io) {
  const auto signal = read_audio(in_path, audio, io.in);
  if (signal.empty()) throw std::invalid_argument(in_path + ": no samples");
  const auto result = encode(signal, config);
  const auto bytes = serialize(result.stream);
  write_bytes(out_path, bytes, io.out);

  std::ostream& report = out_path == "-" ? io.err : io.out;
  const auto decoded = Signal::clamped(result.recon, signal.sample_rate());
  const auto snr = segsnr(signal, decoded, segment_len ? segment_len : config.frame_len);
  report << "frames: " << result.stream.frame_count() << "\n";
  report << "bit rate: " << kbps(payload_bit_rate(result.stream)) << " kbps\n";
  report << "stream bytes: " << bytes.size() << "\n";
  if (config.predictor == PredictorKind::Hybrid) {
    const auto usage = predictor_usage(result.stream);
    report << "predictor usage: MLP " << format_real(usage.pct_mlp) << "%, LPC-10 "
           << format_real(usage.pct_lpc) << "%\n";
  }
  print_segsnr(report, snr);
  if (!csv_path.empty()) write_text(csv_path, segsnr_csv(snr), io.out);
  return kOk;
}

int cmd_decode(const std::string& in_path, const std::string& out_path, const AudioOptions& audio,
               const std::string& ref_path, std::size_t segment_len, const std::string& csv_path,
               Streams io) {
  const auto stream = parse(read_bytes(in_path, io.in));
  const auto decoded = decode(stream);
  write_audio(out_path, decoded, audio, io.out);

  std::ostream& report = out_path == "-" ? io.err : io.out;
  report << "frames: " << stream.frame_count() << "\n";
  report << "samples: " << decoded.size() << " at " << decoded.sample_rate() << " Hz\n";
  report << "bit rate: " << kbps(payload_bit_rate(stream)) << " kbps\n";
  if (!ref_path.empty()) {
    AudioOptions ref_audio = audio;
    ref_audio.format = "auto";
    ref_audio.rate = stream.sample_rate;
    const auto reference = read_audio(ref_path, ref_audio, io.in);
    const auto snr = segsnr(reference, decoded, segment_len ? segment_len : stream.config.frame_len);
    print_segsnr(report, snr);
    if (!csv_path.empty()) write_text(csv_path, segsnr_csv(snr), io.out);
  }
  return kOk;
}

std::vector<Method> resolve_methods(const std::vector<std::string>& names) {
  if (names.empty()) return all_methods();
  std::vector<Method> out;
  for (const auto& n : names) {
    auto m = find_method(n);
    if (!m) throw std::invalid_argument("unknown method '" + n + "'");
    out.push_back(*m);
  }
  return out;
}

void print_rows(std::ostream& os, std::span<const MethodRow> rows) {
  for (const auto& r : rows) {
    os << r.method << " Nq=" << r.bits << ": " << format_real(r.segsnr_mean) << " dB (std "
       << format_real(r.segsnr_std) << ", " << r.frames_evaluated << " frames)"
       << (r.flagged ? " [no scorable frames]" : "") << "\n";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Streams io{in, out, err};
  CLI::App app{"ADPCM speech codec with linear, neural and hybrid predictors", "nadpcm"};
  app.require_subcommand(1);

  AudioOptions audio;
  auto add_audio = [&](CLI::App* sub) {
    sub->add_option("--format", audio.format, "Audio format: auto (by extension), wav or raw")
        ->check(CLI::IsMember({"auto", "wav", "raw"}))
        ->capture_default_str();
    sub->add_option("--rate", audio.rate, "Sample rate of raw PCM input")->capture_default_str();
  };

  // encode
  auto* enc = app.add_subcommand("encode", "Encode PCM16/WAV audio into a bitstream");
  std::string enc_in, enc_out, enc_csv;
  std::size_t enc_segment = 0;
  ConfigOptions enc_cfg;
  enc->add_option("--in", enc_in, "Input audio ('-' for stdin)")->required();
  enc->add_option("--out", enc_out, "Output bitstream ('-' for stdout)")->required();
  enc->add_option("--csv", enc_csv, "Write per-segment SEGSNR CSV here");
  enc->add_option("--segment-len", enc_segment, "SEGSNR segment length (default: frame length)");
  enc_cfg.add(*enc, true);
  add_audio(enc);

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a bitstream into PCM16/WAV audio");
  std::string dec_in, dec_out, dec_ref, dec_csv;
  std::size_t dec_segment = 0;
  dec->add_option("--in", dec_in, "Input bitstream ('-' for stdin)")->required();
  dec->add_option("--out", dec_out, "Output audio ('-' for stdout)")->required();
  dec->add_option("--ref", dec_ref, "Original audio, to report SEGSNR");
  dec->add_option("--csv", dec_csv, "Write per-segment SEGSNR CSV here (needs --ref)");
  dec->add_option("--segment-len", dec_segment, "SEGSNR segment length (default: frame length)");
  add_audio(dec);

  // eval
  auto* ev = app.add_subcommand("eval", "Compare coding methods over a corpus");
  std::vector<std::string> ev_in, ev_methods;
  std::vector<int> ev_bits{2, 3, 4, 5};
  std::string ev_out, ev_sig;
  unsigned ev_jobs = 1;
  std::size_t ev_n = 0;
  ConfigOptions ev_cfg;
  ev->add_option("--in", ev_in, "Corpus audio files")->required();
  ev->add_option("--bits", ev_bits, "Quantizer bits to evaluate (comma list)")
      ->delimiter(',')
      ->check(CLI::Range(kMinBits, kMaxBits));
  ev->add_option("--methods", ev_methods, "Methods, e.g. ADPCMB-LPC-10 (default: all)")->delimiter(',');
  ev->add_option("--out", ev_out, "CSV output of the method table");
  ev->add_option("--significance", ev_sig, "CSV output of pairwise z statistics");
  ev->add_option("--n", ev_n, "n for the z statistic (default: frames evaluated)");
  ev->add_option("--jobs", ev_jobs, "Worker threads")->check(CLI::Range(1, 256));
  ev_cfg.add(*ev, false);
  add_audio(ev);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Epoch, frame-length and optimal-epoch studies");
  std::string sw_kind = "epochs", sw_in, sw_out, sw_plot;
  std::vector<int> sw_bits{4};
  std::vector<std::size_t> sw_lengths = default_frame_lengths();
  std::vector<std::string> sw_methods{"ADPCMB-LPC-10", "ADPCMB-MLP"};
  std::size_t sw_max_epochs = 30, sw_frame = 0;
  unsigned sw_jobs = 1;
  ConfigOptions sw_cfg;
  sw->add_option("--kind", sw_kind, "epochs, frame-length or histogram")
      ->check(CLI::IsMember({"epochs", "frame-length", "histogram"}))
      ->capture_default_str();
  sw->add_option("--in", sw_in, "Input audio")->required();
  sw->add_option("--out", sw_out, "CSV output");
  sw->add_option("--gnuplot", sw_plot, "Two-column data file (epochs: test curve)");
  sw->add_option("--bits", sw_bits, "Quantizer bits (comma list; first used for epoch studies)")
      ->delimiter(',')
      ->check(CLI::Range(kMinBits, kMaxBits));
  sw->add_option("--lengths", sw_lengths, "Frame lengths (comma list)")->delimiter(',');
  sw->add_option("--methods", sw_methods, "Methods for the frame-length sweep")->delimiter(',');
  sw->add_option("--max-epochs", sw_max_epochs, "Largest epoch count")->check(CLI::Range(1, 1000));
  sw->add_option("--frame-index", sw_frame, "First frame of the pair (epochs)");
  sw->add_option("--jobs", sw_jobs, "Worker threads")->check(CLI::Range(1, 256));
  sw_cfg.add(*sw, false);
  add_audio(sw);

  // usage
  auto* us = app.add_subcommand("usage", "Report hybrid predictor usage of a bitstream");
  std::string us_in;
  us->add_option("--in", us_in, "Hybrid bitstream")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kUsageError;
  }

  try {
    if (enc->parsed()) {
      auto config = enc_cfg.resolve();
      config.validate();
      return cmd_encode(enc_in, enc_out, audio, config, enc_segment, enc_csv, io);
    }
    if (dec->parsed()) return cmd_decode(dec_in, dec_out, audio, dec_ref, dec_segment, dec_csv, io);
    if (ev->parsed()) {
      const auto base = ev_cfg.resolve();
      const auto methods = resolve_methods(ev_methods);
      std::vector<NamedSignal> corpus;
      for (const auto& p : ev_in) corpus.push_back({p, read_audio(p, audio, in)});
      const auto rows = evaluate_methods(corpus, ev_bits, methods, base, ev_jobs);
      print_rows(out, rows);
      if (!ev_out.empty()) write_text(ev_out, to_csv(to_table(rows)), out);
      if (!ev_sig.empty()) {
        CsvTable all{{"bits", "method_a", "method_b", "z", "significant"}, {}};
        for (int b : ev_bits) {
          std::vector<MethodRow> same;
          for (const auto& r : rows) {
            if (r.bits == b) same.push_back(r);
          }
          std::size_t n = ev_n;
          if (n == 0) {
            for (const auto& r : same) n = std::max(n, r.frames_evaluated);
          }
          if (n == 0) continue;
          const auto t = to_table(significance_matrix(same, n));
          for (auto row : t.rows) {
            row.insert(row.begin(), static_cast<std::int64_t>(b));
            all.rows.push_back(std::move(row));
          }
        }
        write_text(ev_sig, to_csv(all), out);
      }
      return kOk;
    }
    if (sw->parsed()) {
      const auto base = sw_cfg.resolve();
      const auto signal = read_audio(sw_in, audio, in);
      std::string csv;
      if (sw_kind == "epochs") {
        const auto curve = epoch_sweep(signal, sw_frame, sw_bits.front(), sw_max_epochs, base.seed, base);
        csv = to_csv(to_table(curve, "epochs"));
        const auto best = std::max_element(curve.y_test.begin(), curve.y_test.end()) - curve.y_test.begin();
        out << "best test epoch: " << best + 1 << " (" << format_real(curve.y_test[best]) << " dB)\n";
        if (!sw_plot.empty()) write_text(sw_plot, gnuplot_data(curve.x, curve.y_test), out);
      } else if (sw_kind == "histogram") {
        const auto h = optimal_epoch_histogram(signal, sw_bits.front(), sw_max_epochs, base);
        csv = to_csv(to_table(h));
        for (const auto& [e, pct] : h.percent) out << "epochs " << e << ": " << format_real(pct) << "%\n";
      } else {
        const auto methods = resolve_methods(sw_methods);
        const auto sweep = frame_length_sweep(signal, sw_lengths, sw_bits, methods, base, sw_jobs);
        for (const auto& n : sweep.notices) err << "notice: " << n << "\n";
        csv = to_csv(to_table(sweep.points));
        out << sweep.points.size() << " points\n";
      }
      if (!sw_out.empty()) write_text(sw_out, csv, out);
      else out << csv;
      return kOk;
    }
    if (us->parsed()) {
      const auto stream = parse(read_bytes(us_in, in));
      const auto usage = predictor_usage(stream);
      out << "MLP: " << format_real(usage.pct_mlp) << "%\nLPC-10: " << format_real(usage.pct_lpc) << "%\n";
      return kOk;
    }
  } catch (const MalformedBitstream& e) {
    err << "error: malformed bitstream: " << e.what() << "\n";
    return kMalformedBitstream;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const HarnessError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace nadpcm::cli

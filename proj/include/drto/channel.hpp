#pragma once

#include "drto/io_util.hpp"
#include "drto/rng.hpp"
#include "drto/system_model.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace drto {

inline constexpr double kLightSpeedMps = 2.998e8;

// Free-space path-loss link description. There is no physical default for the
// distance; it must be supplied per link.
struct PathLossParams {
  double antenna_gain = 4.11;       // A_d
  double path_loss_exponent = 2.8;  // d_e
  double carrier_hz = 3e10;         // f_c
  double distance_m = 0.0;          // d
};

/// Mean linear gain h = A_d * (c / (4 pi f_c d))^{d_e}.
inline double mean_gain(const PathLossParams& p) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(p.antenna_gain) || !positive(p.path_loss_exponent) || !positive(p.carrier_hz))
    throw std::invalid_argument("mean_gain: parameters must be strictly positive");
  if (!positive(p.distance_m))
    throw std::invalid_argument("mean_gain: link distance must be supplied and positive");
  constexpr double kPi = 3.14159265358979323846264338327950288;
  return p.antenna_gain *
         std::pow(kLightSpeedMps / (4.0 * kPi * p.carrier_hz * p.distance_m), p.path_loss_exponent);
}

enum class FadingKind { None, IidExponential };

// Rare whole-frame gain collapse emulating a handover glitch; disabled by
// default.
struct DeepFadeConfig {
  double probability = 0.0;
  double gain_factor = 0.01;
};

struct ChannelConfig {
  enum class Mode { DirectSnr, PathLoss };

  Mode mode = Mode::DirectSnr;

  // DirectSnr: target mean SNR per uplink (size 1 broadcasts to all STs) and
  // for the forwarding hop; mean gains are derived as h = snr * N0 / p.
  std::vector<double> snr_first_hop_db = {10.0};
  double snr_second_hop_db = 20.0;

  // PathLoss: per-link geometry (size 1 broadcasts to all STs).
  std::vector<PathLossParams> path_loss_st;
  PathLossParams path_loss_tc;

  FadingKind fading = FadingKind::IidExponential;
  DeepFadeConfig deep_fade;
};

// Per-frame channel state source: fixed mean gains (from either mode) with
// optional i.i.d. unit-mean exponential power fading on top. Holds its own
// seeded stream, so one generator produces one reproducible trace.
class ChannelGenerator {
 public:
  ChannelGenerator(const ChannelConfig& cfg, const SystemParams& params, std::uint64_t seed)
      : rng_(seed), fading_(cfg.fading), deep_fade_(cfg.deep_fade) {
    params.validate();
    const std::size_t n = params.n_st;
    if (cfg.mode == ChannelConfig::Mode::DirectSnr) {
      if (cfg.snr_first_hop_db.size() != 1 && cfg.snr_first_hop_db.size() != n)
        throw std::invalid_argument("ChannelGenerator: snr_first_hop_db needs 1 or n_st entries");
      mean_st_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double db =
            cfg.snr_first_hop_db.size() == 1 ? cfg.snr_first_hop_db[0] : cfg.snr_first_hop_db[i];
        mean_st_[i] = std::pow(10.0, db / 10.0) * params.noise / params.p_st[i];
      }
      mean_tc_ = std::pow(10.0, cfg.snr_second_hop_db / 10.0) * params.noise / params.p_sat;
    } else {
      if (cfg.path_loss_st.size() != 1 && cfg.path_loss_st.size() != n)
        throw std::invalid_argument("ChannelGenerator: path_loss_st needs 1 or n_st entries");
      mean_st_.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        mean_st_[i] = mean_gain(cfg.path_loss_st.size() == 1 ? cfg.path_loss_st[0]
                                                             : cfg.path_loss_st[i]);
      mean_tc_ = mean_gain(cfg.path_loss_tc);
    }
    if (!(deep_fade_.probability >= 0.0 && deep_fade_.probability <= 1.0))
      throw std::invalid_argument("ChannelGenerator: deep-fade probability outside [0, 1]");
  }

  ChannelState sample_frame(std::uint64_t frame) {
    ChannelState s;
    s.frame = frame;
    double spike = 1.0;
    if (deep_fade_.probability > 0.0 && rng_.uniform() < deep_fade_.probability)
      spike = deep_fade_.gain_factor;
    s.h_st.resize(mean_st_.size());
    for (std::size_t i = 0; i < mean_st_.size(); ++i) s.h_st[i] = mean_st_[i] * fade() * spike;
    s.h_tc = mean_tc_ * fade() * spike;
    return s;
  }

  /// Frames 1..count as one trace.
  std::vector<ChannelState> generate(std::size_t count) {
    std::vector<ChannelState> trace;
    trace.reserve(count);
    for (std::size_t t = 1; t <= count; ++t) trace.push_back(sample_frame(t));
    return trace;
  }

  const std::vector<double>& mean_gains_st() const { return mean_st_; }
  double mean_gain_tc() const { return mean_tc_; }

  /// Mean gain per network input slot [h_1..h_N, h_TC]; dividing raw gains by
  /// this vector yields O(1) fading coefficients.
  std::vector<double> input_scale() const {
    std::vector<double> s = mean_st_;
    s.push_back(mean_tc_);
    return s;
  }

 private:
  double fade() { return fading_ == FadingKind::IidExponential ? rng_.exponential() : 1.0; }

  Rng rng_;
  FadingKind fading_;
  DeepFadeConfig deep_fade_;
  std::vector<double> mean_st_;
  double mean_tc_ = 0.0;
};

/// Column means of a trace in input order [h_1..h_N, h_TC]; the normalization
/// fallback for imported traces.
inline std::vector<double> trace_column_means(const std::vector<ChannelState>& trace) {
  if (trace.empty()) throw std::invalid_argument("trace_column_means: empty trace");
  const std::size_t n = trace.front().h_st.size();
  std::vector<double> means(n + 1, 0.0);
  for (const ChannelState& s : trace) {
    if (s.h_st.size() != n) throw std::invalid_argument("trace_column_means: ragged trace");
    for (std::size_t i = 0; i < n; ++i) means[i] += s.h_st[i];
    means[n] += s.h_tc;
  }
  for (double& m : means) m /= static_cast<double>(trace.size());
  return means;
}

// Trace CSV: header `frame,h_1,...,h_N,h_TC`, doubles at full round-trip
// precision, written atomically.
inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<ChannelState>& trace) {
  if (trace.empty()) throw std::invalid_argument("write_trace_csv: empty trace");
  const std::size_t n = trace.front().h_st.size();
  std::string out = "frame";
  for (std::size_t i = 1; i <= n; ++i) out += ",h_" + std::to_string(i);
  out += ",h_TC\n";
  for (const ChannelState& s : trace) {
    out += std::to_string(s.frame);
    for (double g : s.h_st) {
      out += ',';
      out += format_double(g);
    }
    out += ',';
    out += format_double(s.h_tc);
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline std::vector<ChannelState> read_trace_csv(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_trace_csv: empty file " + path.string());

  std::size_t columns = 1;
  for (char c : line) columns += c == ',';
  if (columns < 3)
    throw std::runtime_error("read_trace_csv: expected `frame,h_1,...,h_TC` header in " +
                             path.string());
  const std::size_t n = columns - 2;

  std::vector<ChannelState> trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    ChannelState s;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      ++col;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw std::runtime_error("read_trace_csv: bad number at " + path.string() + ":" +
                                 std::to_string(line_no));
      if (col == 1)
        s.frame = static_cast<std::uint64_t>(v);
      else if (col <= 1 + n)
        s.h_st.push_back(v);
      else
        s.h_tc = v;
    }
    if (col != columns)
      throw std::runtime_error("read_trace_csv: wrong column count at " + path.string() + ":" +
                               std::to_string(line_no));
    s.validate(n);
    trace.push_back(std::move(s));
  }
  if (trace.empty()) throw std::runtime_error("read_trace_csv: no data rows in " + path.string());
  return trace;
}

}  // namespace drto

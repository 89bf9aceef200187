#pragma once

#include "drto/baselines.hpp"
#include "drto/channel.hpp"
#include "drto/config.hpp"
#include "drto/io_util.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drto {

// One frame of one algorithm's run, as emitted to the per-run CSV. k_used and
// k_star stay 0 for algorithms without a candidate list.
struct FrameRow {
  std::uint64_t t = 0;
  std::size_t k_used = 0;
  std::size_t k_star = 0;
  double cost = 0.0;
  std::optional<double> cost_ratio;
  std::optional<double> loss;
  double decide_seconds = 0.0;
};

struct RunAggregates {
  double mean_cost = 0.0;
  double mean_decide_seconds = 0.0;
  std::size_t tail_window = 0;  // frames the tail statistics cover
  std::optional<double> tail_mean_cost_ratio;
  std::optional<double> tail_k1_share;    // share of tail frames won by candidate 1
  std::optional<double> tail_loss_mean;   // mean loss over tail training events
  std::optional<double> early_loss_mean;  // mean loss over frames (1000, 2000]
};

/// Aggregates are derived purely from the stored series so they can always be
/// recomputed by consumers of the CSV files.
inline RunAggregates compute_aggregates(const std::vector<FrameRow>& rows,
                                        std::size_t tail_window) {
  if (rows.empty()) throw std::invalid_argument("compute_aggregates: empty series");
  RunAggregates agg;
  agg.tail_window = std::min(tail_window, rows.size());
  double cost = 0.0, decide = 0.0;
  for (const FrameRow& r : rows) {
    cost += r.cost;
    decide += r.decide_seconds;
  }
  agg.mean_cost = cost / static_cast<double>(rows.size());
  agg.mean_decide_seconds = decide / static_cast<double>(rows.size());

  const std::size_t tail_begin = rows.size() - agg.tail_window;
  double ratio_sum = 0.0, loss_sum = 0.0, k1 = 0.0;
  std::size_t ratio_n = 0, loss_n = 0, k_n = 0;
  for (std::size_t i = tail_begin; i < rows.size(); ++i) {
    if (rows[i].cost_ratio) {
      ratio_sum += *rows[i].cost_ratio;
      ++ratio_n;
    }
    if (rows[i].loss) {
      loss_sum += *rows[i].loss;
      ++loss_n;
    }
    if (rows[i].k_used > 0) {
      k1 += rows[i].k_star == 1 ? 1.0 : 0.0;
      ++k_n;
    }
  }
  if (ratio_n > 0) agg.tail_mean_cost_ratio = ratio_sum / static_cast<double>(ratio_n);
  if (loss_n > 0) agg.tail_loss_mean = loss_sum / static_cast<double>(loss_n);
  if (k_n > 0) agg.tail_k1_share = k1 / static_cast<double>(k_n);

  double early_sum = 0.0;
  std::size_t early_n = 0;
  for (const FrameRow& r : rows) {
    if (r.t > 1000 && r.t <= 2000 && r.loss) {
      early_sum += *r.loss;
      ++early_n;
    }
  }
  if (early_n > 0) agg.early_loss_mean = early_sum / static_cast<double>(early_n);
  return agg;
}

struct RunResult {
  AlgorithmKind algo = AlgorithmKind::Drto;
  std::uint64_t seed = 0;
  std::vector<FrameRow> rows;
  double mean_step_seconds = 0.0;  // includes training for the learning algorithms
  RunAggregates agg;
};

struct MetricsSummary {
  std::vector<RunResult> runs;

  const RunResult* find(AlgorithmKind algo, std::uint64_t seed) const {
    for (const RunResult& r : runs)
      if (r.algo == algo && r.seed == seed) return &r;
    return nullptr;
  }
};

namespace detail {

using BenchClock = std::chrono::steady_clock;

inline double seconds_since(BenchClock::time_point t0) {
  return std::chrono::duration<double>(BenchClock::now() - t0).count();
}

inline FrameRow row_from_record(const FrameRecord& rec) {
  FrameRow row;
  row.t = rec.frame;
  row.k_used = rec.k_used;
  row.k_star = rec.k_star;
  row.cost = rec.decision.cost;
  row.loss = rec.loss;
  row.decide_seconds = rec.decide_seconds;
  return row;
}

// Stateless per-frame baselines measured around the whole decision call.
inline OffloadDecision run_stateless(AlgorithmKind algo, const SystemParams& params,
                                     const ChannelState& channel, std::size_t guard) {
  switch (algo) {
    case AlgorithmKind::Enumeration: return enumerate_optimal(params, channel, guard);
    case AlgorithmKind::CoordinateDescent: return coordinate_descent(params, channel);
    case AlgorithmKind::PureTc: return pure_fixed(params, channel, BaselineKind::PureTc);
    case AlgorithmKind::PureSat: return pure_fixed(params, channel, BaselineKind::PureSat);
    default: throw std::logic_error("run_stateless: not a stateless algorithm");
  }
}

}  // namespace detail

// Incremental driver for one algorithm over a shared trace. Stateful
// algorithms (the learning ones) keep their agent across calls, so a caller
// may advance runners in interleaved chunks without changing any semantics.
class AlgorithmRunner {
 public:
  AlgorithmRunner(AlgorithmKind algo, const Config& cfg,
                  const std::vector<double>& input_scale, std::uint64_t seed)
      : algo_(algo), cfg_(&cfg) {
    if (algo == AlgorithmKind::Drto)
      drto_.emplace(cfg.system, cfg.agent, input_scale, derive_seed(seed, 2));
    else if (algo == AlgorithmKind::Ddlo)
      ddlo_.emplace(cfg.system, cfg.agent, input_scale, derive_seed(seed, 3));
  }

  AlgorithmKind algo() const { return algo_; }
  double step_seconds_total() const { return step_seconds_; }

  /// Processes frame `t` (1-based); frames must be fed in order.
  FrameRow step(const ChannelState& channel, std::uint64_t t) {
    if (drto_) {
      const FrameRecord rec = drto_->step(cfg_->system, channel, t);
      step_seconds_ += rec.step_seconds;
      return detail::row_from_record(rec);
    }
    if (ddlo_) {
      const FrameRecord rec = ddlo_->step(cfg_->system, channel, t);
      step_seconds_ += rec.step_seconds;
      return detail::row_from_record(rec);
    }
    const auto t0 = detail::BenchClock::now();
    const OffloadDecision d =
        detail::run_stateless(algo_, cfg_->system, channel, cfg_->experiment.enum_guard);
    const double dt = detail::seconds_since(t0);
    step_seconds_ += dt;
    FrameRow row;
    row.t = t;
    row.cost = d.cost;
    row.decide_seconds = dt;
    return row;
  }

 private:
  AlgorithmKind algo_;
  const Config* cfg_;
  std::optional<DrtoAgent> drto_;
  std::optional<DdloEnsemble> ddlo_;
  double step_seconds_ = 0.0;
};

/// One algorithm over one prepared trace. `input_scale` feeds the learning
/// algorithms' input normalization.
inline RunResult run_algorithm(AlgorithmKind algo, const Config& cfg,
                               const std::vector<ChannelState>& trace,
                               const std::vector<double>& input_scale, std::uint64_t seed) {
  RunResult result;
  result.algo = algo;
  result.seed = seed;
  result.rows.reserve(trace.size());
  AlgorithmRunner runner(algo, cfg, input_scale, seed);
  for (std::size_t i = 0; i < trace.size(); ++i)
    result.rows.push_back(runner.step(trace[i], i + 1));
  result.mean_step_seconds = runner.step_seconds_total() / static_cast<double>(trace.size());
  return result;
}

inline std::string run_csv_name(AlgorithmKind algo, std::uint64_t seed) {
  return to_string(algo) + "_seed" + std::to_string(seed) + ".csv";
}

// Per-run CSV: one row per frame. Missing values (loss outside training
// frames, disabled ratios, candidate columns of the baselines) are empty
// cells. The decide_micros column is wall-clock time and is the one column a
// reproducibility comparison must ignore.
inline void write_run_csv(const std::filesystem::path& path, const RunResult& run) {
  std::string out = "t,K_t,k_star,cost,cost_ratio,loss,decide_micros\n";
  for (const FrameRow& r : run.rows) {
    out += std::to_string(r.t);
    out += ',';
    if (r.k_used > 0) out += std::to_string(r.k_used);
    out += ',';
    if (r.k_used > 0) out += std::to_string(r.k_star);
    out += ',';
    out += format_double(r.cost);
    out += ',';
    if (r.cost_ratio) out += format_double(*r.cost_ratio);
    out += ',';
    if (r.loss) out += format_double(*r.loss);
    out += ',';
    out += format_double(r.decide_seconds * 1e6);
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline nlohmann::json summary_to_json(const Config& cfg, const MetricsSummary& summary) {
  nlohmann::json runs = nlohmann::json::array();
  for (const RunResult& r : summary.runs) {
    nlohmann::json jr = {{"algorithm", to_string(r.algo)},
                         {"seed", r.seed},
                         {"frames", r.rows.size()},
                         {"mean_cost", r.agg.mean_cost},
                         {"mean_decide_seconds", r.agg.mean_decide_seconds},
                         {"mean_step_seconds", r.mean_step_seconds},
                         {"tail_window", r.agg.tail_window},
                         {"csv", run_csv_name(r.algo, r.seed)}};
    if (r.agg.tail_mean_cost_ratio) jr["tail_mean_cost_ratio"] = *r.agg.tail_mean_cost_ratio;
    if (r.agg.tail_k1_share) jr["tail_k1_share"] = *r.agg.tail_k1_share;
    if (r.agg.tail_loss_mean) jr["tail_loss_mean"] = *r.agg.tail_loss_mean;
    if (r.agg.early_loss_mean) jr["early_loss_mean"] = *r.agg.early_loss_mean;
    runs.push_back(jr);
  }

  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["runs"] = runs;

  // Mean cost per algorithm across seeds, plus the reduction of every
  // algorithm against the fixed-location baselines when those were run.
  std::map<std::string, std::pair<double, std::size_t>> per_algo;
  for (const RunResult& r : summary.runs) {
    auto& [sum, n] = per_algo[to_string(r.algo)];
    sum += r.agg.mean_cost;
    n += 1;
  }
  nlohmann::json aggregates;
  for (const auto& [name, acc] : per_algo)
    aggregates[name]["mean_cost"] = acc.first / static_cast<double>(acc.second);
  auto mean_of = [&](const char* name) -> std::optional<double> {
    auto it = per_algo.find(name);
    if (it == per_algo.end()) return std::nullopt;
    return it->second.first / static_cast<double>(it->second.second);
  };
  const auto pure_tc = mean_of("pure-tc");
  const auto pure_sat = mean_of("pure-sat");
  for (const auto& [name, acc] : per_algo) {
    const double mean = acc.first / static_cast<double>(acc.second);
    if (pure_tc && name != "pure-tc")
      aggregates[name]["reduction_vs_pure_tc_pct"] = 100.0 * (1.0 - mean / *pure_tc);
    if (pure_sat && name != "pure-sat")
      aggregates[name]["reduction_vs_pure_sat_pct"] = 100.0 * (1.0 - mean / *pure_sat);
  }
  j["aggregates"] = aggregates;
  return j;
}

// Full experiment: per seed, one shared channel trace; every configured
// algorithm consumes that identical trace; per-frame cost ratios are taken
// against the enumeration optimum when enabled and N is within the guard.
// Writes one CSV per (algorithm, seed) plus summary.json when an output
// directory is configured.
inline MetricsSummary run_experiment(const Config& cfg,
                                     const std::vector<ChannelState>* imported_trace = nullptr) {
  cfg.system.validate();
  cfg.agent.validate();
  cfg.experiment.validate();
  const ExperimentConfig& exp = cfg.experiment;

  MetricsSummary summary;
  for (std::uint64_t seed : exp.seeds) {
    std::vector<ChannelState> trace;
    std::vector<double> input_scale;
    if (imported_trace != nullptr) {
      trace = *imported_trace;
      if (trace.size() > exp.total_frames) trace.resize(exp.total_frames);
      input_scale = trace_column_means(trace);
    } else {
      ChannelGenerator gen(cfg.channel, cfg.system, derive_seed(seed, 1));
      trace = gen.generate(exp.total_frames);
      input_scale = gen.input_scale();
    }
    if (trace.empty()) throw std::runtime_error("run_experiment: empty channel trace");

    const bool ratios = exp.compute_ratio && cfg.system.n_st <= exp.enum_guard;
    std::vector<double> optimum;
    if (ratios) {
      optimum.reserve(trace.size());
      for (const ChannelState& s : trace)
        optimum.push_back(enumerate_optimal(cfg.system, s, exp.enum_guard).cost);
    }

    for (AlgorithmKind algo : exp.algorithms) {
      RunResult run = run_algorithm(algo, cfg, trace, input_scale, seed);
      if (ratios)
        for (std::size_t i = 0; i < run.rows.size(); ++i)
          run.rows[i].cost_ratio = run.rows[i].cost / optimum[i];
      run.agg = compute_aggregates(run.rows, exp.tail_window);
      summary.runs.push_back(std::move(run));
    }
  }

  if (!exp.output_dir.empty()) {
    const std::filesystem::path dir(exp.output_dir);
    for (const RunResult& run : summary.runs)
      write_run_csv(dir / run_csv_name(run.algo, run.seed), run);
    atomic_write_file(dir / "summary.json", summary_to_json(cfg, summary).dump(2) + "\n");
  }
  return summary;
}

struct BenchEntry {
  AlgorithmKind algo = AlgorithmKind::Drto;
  std::size_t n_st = 0;
  double mean_decide_seconds = 0.0;
  std::size_t measured_frames = 0;
};

/// The config rescaled to a different terminal count: per-ST vectors are
/// broadcast from their first entry.
inline Config config_with_n(const Config& base, std::size_t n_st) {
  Config cfg = base;
  cfg.system.n_st = n_st;
  cfg.system.p_st.assign(n_st, base.system.p_st.empty() ? 1.0 : base.system.p_st.front());
  if (cfg.channel.mode == ChannelConfig::Mode::DirectSnr) {
    if (cfg.channel.snr_first_hop_db.size() != n_st)
      cfg.channel.snr_first_hop_db.assign(n_st, base.channel.snr_first_hop_db.front());
  } else if (cfg.channel.path_loss_st.size() != n_st) {
    if (base.channel.path_loss_st.empty())
      throw std::invalid_argument("config_with_n: path-loss mode needs link geometry");
    cfg.channel.path_loss_st.assign(n_st, base.channel.path_loss_st.front());
  }
  return cfg;
}

// Serial runtime benchmark over the configured algorithms for each N: one
// thread, one shared trace per N, decide time averaged over the frames after
// the warm-up. Learning algorithms keep training during the run; only the
// decision path is timed. The algorithms advance over the trace in
// interleaved chunks (still strictly serial) so that machine-speed drift over
// the run hits every algorithm alike instead of whichever ran last.
inline std::vector<BenchEntry> bench_runtime(const Config& cfg,
                                             const std::vector<std::size_t>& n_values) {
  if (n_values.empty()) throw std::invalid_argument("bench_runtime: no N values");
  constexpr std::size_t kChunk = 500;
  std::vector<BenchEntry> table;
  for (std::size_t n : n_values) {
    Config scaled = config_with_n(cfg, n);
    scaled.experiment.compute_ratio = false;
    const std::uint64_t seed = scaled.experiment.seeds.front();
    ChannelGenerator gen(scaled.channel, scaled.system, derive_seed(seed, 1));
    const std::vector<ChannelState> trace = gen.generate(scaled.experiment.total_frames);
    const std::vector<double> input_scale = gen.input_scale();
    const std::size_t warmup = std::min(scaled.experiment.bench_warmup, trace.size() - 1);

    std::vector<AlgorithmRunner> runners;
    std::vector<double> sums(scaled.experiment.algorithms.size(), 0.0);
    runners.reserve(scaled.experiment.algorithms.size());
    for (AlgorithmKind algo : scaled.experiment.algorithms)
      runners.emplace_back(algo, scaled, input_scale, seed);

    for (std::size_t start = 0; start < trace.size(); start += kChunk) {
      const std::size_t stop = std::min(start + kChunk, trace.size());
      for (std::size_t a = 0; a < runners.size(); ++a) {
        for (std::size_t i = start; i < stop; ++i) {
          const FrameRow row = runners[a].step(trace[i], i + 1);
          if (i >= warmup) sums[a] += row.decide_seconds;
        }
      }
    }

    for (std::size_t a = 0; a < runners.size(); ++a) {
      BenchEntry entry;
      entry.algo = scaled.experiment.algorithms[a];
      entry.n_st = n;
      entry.measured_frames = trace.size() - warmup;
      entry.mean_decide_seconds = sums[a] / static_cast<double>(entry.measured_frames);
      table.push_back(entry);
    }
  }
  return table;
}

inline void write_bench_csv(const std::filesystem::path& path,
                            const std::vector<BenchEntry>& table) {
  std::string out = "algorithm,n_st,mean_decide_seconds,measured_frames\n";
  for (const BenchEntry& e : table) {
    out += to_string(e.algo);
    out += ',';
    out += std::to_string(e.n_st);
    out += ',';
    out += format_double(e.mean_decide_seconds);
    out += ',';
    out += std::to_string(e.measured_frames);
    out += '\n';
  }
  atomic_write_file(path, out);
}

}  // namespace drto

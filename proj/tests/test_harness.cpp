#include "drto/harness.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace drto;
using Catch::Approx;

namespace {

Config small_config(std::size_t n, std::size_t frames) {
  Config cfg = default_config(n);
  cfg.experiment.total_frames = frames;
  cfg.experiment.seeds = {1};
  cfg.experiment.tail_window = frames;
  return cfg;
}

// the decide_micros column is wall clock; strip it before comparing runs
std::string strip_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out += line.substr(0, pos);
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("experiment runs every algorithm on one shared trace") {
  Config cfg = small_config(3, 60);
  cfg.experiment.algorithms = {AlgorithmKind::Enumeration, AlgorithmKind::PureTc,
                               AlgorithmKind::PureSat, AlgorithmKind::Drto,
                               AlgorithmKind::CoordinateDescent};
  const MetricsSummary summary = run_experiment(cfg);
  REQUIRE(summary.runs.size() == 5);

  const RunResult* en = summary.find(AlgorithmKind::Enumeration, 1);
  const RunResult* tc = summary.find(AlgorithmKind::PureTc, 1);
  const RunResult* sat = summary.find(AlgorithmKind::PureSat, 1);
  const RunResult* agent = summary.find(AlgorithmKind::Drto, 1);
  const RunResult* cd = summary.find(AlgorithmKind::CoordinateDescent, 1);
  REQUIRE(en != nullptr);
  REQUIRE(tc != nullptr);
  REQUIRE(sat != nullptr);
  REQUIRE(agent != nullptr);
  REQUIRE(cd != nullptr);

  CHECK(en->agg.mean_cost <= tc->agg.mean_cost + 1e-12);
  CHECK(en->agg.mean_cost <= sat->agg.mean_cost + 1e-12);

  for (const RunResult* run : {en, tc, sat, agent, cd}) {
    REQUIRE(run->rows.size() == 60);
    for (const FrameRow& row : run->rows) {
      REQUIRE(row.cost_ratio.has_value());
      CHECK(*row.cost_ratio >= 1.0 - 1e-9);
    }
  }
  for (const FrameRow& row : en->rows) CHECK(*row.cost_ratio == Approx(1.0));

  // candidate columns only exist for the learning algorithms
  CHECK(agent->rows[0].k_used > 0);
  CHECK(en->rows[0].k_used == 0);
}

TEST_CASE("a one-frame run yields a single record with K = N") {
  Config cfg = small_config(4, 1);
  cfg.experiment.algorithms = {AlgorithmKind::Drto};
  const MetricsSummary summary = run_experiment(cfg);
  REQUIRE(summary.runs.size() == 1);
  REQUIRE(summary.runs[0].rows.size() == 1);
  CHECK(summary.runs[0].rows[0].k_used == 4);
  CHECK(summary.runs[0].rows[0].t == 1);
}

TEST_CASE("identical configs replay identically apart from wall clock") {
  namespace fs = std::filesystem;
  const fs::path dir_a = fs::temp_directory_path() / "drto_harness_a";
  const fs::path dir_b = fs::temp_directory_path() / "drto_harness_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  Config cfg = small_config(3, 80);
  cfg.experiment.algorithms = {AlgorithmKind::Drto, AlgorithmKind::Enumeration,
                               AlgorithmKind::Ddlo};
  cfg.experiment.seeds = {7};

  cfg.experiment.output_dir = dir_a.string();
  run_experiment(cfg);
  cfg.experiment.output_dir = dir_b.string();
  run_experiment(cfg);

  for (const char* name : {"drto_seed7.csv", "enum_seed7.csv", "ddlo_seed7.csv"}) {
    const std::string a = read_file(dir_a / name);
    const std::string b = read_file(dir_b / name);
    CHECK(strip_last_column(a) == strip_last_column(b));
  }
  CHECK(fs::exists(dir_a / "summary.json"));

  const auto summary = nlohmann::json::parse(read_file(dir_a / "summary.json"));
  CHECK(summary.contains("runs"));
  CHECK(summary.contains("aggregates"));
  CHECK(summary.at("config").at("system").at("n_st").get<std::size_t>() == 3);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("aggregates are reproducible from the stored rows") {
  Config cfg = small_config(3, 50);
  cfg.experiment.algorithms = {AlgorithmKind::Drto};
  cfg.experiment.tail_window = 20;
  const MetricsSummary summary = run_experiment(cfg);
  const RunResult& run = summary.runs[0];

  double cost = 0.0;
  for (const FrameRow& row : run.rows) cost += row.cost;
  CHECK(run.agg.mean_cost == Approx(cost / 50.0));

  double ratio = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 30; i < 50; ++i) {
    ratio += *run.rows[i].cost_ratio;
    ++n;
  }
  CHECK(run.agg.tail_window == 20);
  CHECK(*run.agg.tail_mean_cost_ratio == Approx(ratio / static_cast<double>(n)));

  const RunAggregates again = compute_aggregates(run.rows, 20);
  CHECK(again.mean_cost == run.agg.mean_cost);
  CHECK(*again.tail_mean_cost_ratio == *run.agg.tail_mean_cost_ratio);
}

TEST_CASE("ratios can be disabled and are skipped beyond the guard") {
  Config cfg = small_config(3, 10);
  cfg.experiment.algorithms = {AlgorithmKind::PureTc};

  cfg.experiment.compute_ratio = false;
  MetricsSummary off = run_experiment(cfg);
  CHECK_FALSE(off.runs[0].rows[0].cost_ratio.has_value());

  cfg.experiment.compute_ratio = true;
  cfg.experiment.enum_guard = 2;  // N = 3 exceeds the guard
  MetricsSummary guarded = run_experiment(cfg);
  CHECK_FALSE(guarded.runs[0].rows[0].cost_ratio.has_value());
}

TEST_CASE("imported traces drive the same decisions as generated ones") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "drto_trace_roundtrip";
  fs::create_directories(dir);

  Config cfg = small_config(3, 40);
  cfg.experiment.algorithms = {AlgorithmKind::Enumeration, AlgorithmKind::CoordinateDescent};

  ChannelGenerator gen(cfg.channel, cfg.system, derive_seed(1, 1));
  const auto trace = gen.generate(40);
  write_trace_csv(dir / "trace.csv", trace);
  const auto imported = read_trace_csv(dir / "trace.csv");

  const MetricsSummary from_gen = run_experiment(cfg);
  const MetricsSummary from_csv = run_experiment(cfg, &imported);

  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(from_gen.runs[0].rows[i].cost == from_csv.runs[0].rows[i].cost);
    CHECK(from_gen.runs[1].rows[i].cost == from_csv.runs[1].rows[i].cost);
  }
  fs::remove_all(dir);
}

TEST_CASE("multiple seeds produce independent runs") {
  Config cfg = small_config(3, 30);
  cfg.experiment.algorithms = {AlgorithmKind::Enumeration};
  cfg.experiment.seeds = {1, 2};
  const MetricsSummary summary = run_experiment(cfg);
  REQUIRE(summary.runs.size() == 2);
  CHECK(summary.runs[0].seed == 1);
  CHECK(summary.runs[1].seed == 2);
  CHECK(summary.runs[0].rows[0].cost != summary.runs[1].rows[0].cost);
}

TEST_CASE("summary reports cost reductions against the fixed baselines") {
  Config cfg = small_config(3, 40);
  cfg.experiment.algorithms = {AlgorithmKind::Drto, AlgorithmKind::PureTc,
                               AlgorithmKind::PureSat};
  const MetricsSummary summary = run_experiment(cfg);
  const nlohmann::json j = summary_to_json(cfg, summary);
  CHECK(j.at("aggregates").at("drto").contains("reduction_vs_pure_tc_pct"));
  CHECK(j.at("aggregates").at("drto").contains("reduction_vs_pure_sat_pct"));
  CHECK(j.at("aggregates").at("pure-tc").contains("mean_cost"));
}

TEST_CASE("bench produces one entry per algorithm and N") {
  Config cfg = small_config(3, 1500);
  cfg.experiment.algorithms = {AlgorithmKind::PureTc, AlgorithmKind::Enumeration};
  cfg.experiment.bench_warmup = 100;

  const auto table = bench_runtime(cfg, {3, 4});
  REQUIRE(table.size() == 4);
  for (const BenchEntry& e : table) {
    CHECK(e.mean_decide_seconds > 0.0);
    CHECK(e.measured_frames == 1400);
  }
  CHECK(table[0].n_st == 3);
  CHECK(table[3].n_st == 4);

  // one allocator call per frame beats 2^N of them
  CHECK(table[0].mean_decide_seconds < table[1].mean_decide_seconds);
  CHECK(table[2].mean_decide_seconds < table[3].mean_decide_seconds);

  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "drto_bench.csv";
  write_bench_csv(path, table);
  const std::string csv = read_file(path);
  CHECK(csv.find("algorithm,n_st,mean_decide_seconds,measured_frames") == 0);
  CHECK(csv.find("pure-tc,3,") != std::string::npos);
  fs::remove(path);
}

TEST_CASE("rescaling the config to another terminal count broadcasts per-ST data") {
  Config cfg = default_config(3);
  cfg.channel.snr_first_hop_db = {12.0};
  const Config scaled = config_with_n(cfg, 6);
  CHECK(scaled.system.n_st == 6);
  CHECK(scaled.system.p_st == std::vector<double>(6, 1.0));
  CHECK(scaled.channel.snr_first_hop_db == std::vector<double>(6, 12.0));
  CHECK_NOTHROW(scaled.system.validate());
}

#include "drto/channel.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

using namespace drto;
using Catch::Approx;

TEST_CASE("mean gain follows the free-space path-loss form") {
  constexpr double kPi = 3.14159265358979323846264338327950288;

  SECTION("base-distance identity") {
    PathLossParams p;
    p.antenna_gain = 1.0;
    p.path_loss_exponent = 2.0;
    p.carrier_hz = 3e10;
    p.distance_m = kLightSpeedMps / (4.0 * kPi * p.carrier_hz);
    CHECK(mean_gain(p) == Approx(1.0).epsilon(1e-12));
  }

  SECTION("doubling the distance scales by 2^-2.8") {
    PathLossParams p;
    p.distance_m = 250.0;
    PathLossParams far = p;
    far.distance_m = 500.0;
    CHECK(mean_gain(far) / mean_gain(p) == Approx(std::pow(2.0, -2.8)).epsilon(1e-12));
  }

  SECTION("reference constants at 100 m") {
    PathLossParams p;  // defaults: 4.11, 2.8, 30 GHz
    p.distance_m = 100.0;
    CHECK(mean_gain(p) == Approx(2.1639302061261666e-14).epsilon(1e-12));
  }

  SECTION("the distance has no default") {
    PathLossParams p;
    CHECK_THROWS_AS(mean_gain(p), std::invalid_argument);
  }
}

TEST_CASE("direct-SNR mode recovers the configured SNR exactly") {
  SystemParams params = SystemParams::defaults(3);
  ChannelConfig cfg;
  cfg.snr_first_hop_db = {10.0, 0.0, 17.5};
  cfg.snr_second_hop_db = 20.0;

  ChannelGenerator gen(cfg, params, 1);
  const auto& means = gen.mean_gains_st();
  REQUIRE(means.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double snr = params.p_st[i] * means[i] / params.noise;
    CHECK(10.0 * std::log10(snr) == Approx(cfg.snr_first_hop_db[i]).epsilon(1e-9));
  }
  const double snr2 = params.p_sat * gen.mean_gain_tc() / params.noise;
  CHECK(10.0 * std::log10(snr2) == Approx(20.0).epsilon(1e-9));

  SECTION("a single SNR entry broadcasts to all terminals") {
    cfg.snr_first_hop_db = {10.0};
    ChannelGenerator bcast(cfg, params, 1);
    CHECK(bcast.mean_gains_st()[0] == Approx(bcast.mean_gains_st()[2]));
  }

  SECTION("wrong SNR count is rejected") {
    cfg.snr_first_hop_db = {10.0, 12.0};
    CHECK_THROWS_AS(ChannelGenerator(cfg, params, 1), std::invalid_argument);
  }
}

TEST_CASE("fading disabled reproduces the mean gains every frame") {
  SystemParams params = SystemParams::defaults(2);
  ChannelConfig cfg;
  cfg.fading = FadingKind::None;
  ChannelGenerator gen(cfg, params, 9);
  for (std::uint64_t t = 1; t <= 10; ++t) {
    const ChannelState s = gen.sample_frame(t);
    CHECK(s.frame == t);
    CHECK(s.h_st[0] == gen.mean_gains_st()[0]);
    CHECK(s.h_st[1] == gen.mean_gains_st()[1]);
    CHECK(s.h_tc == gen.mean_gain_tc());
  }
}

TEST_CASE("exponential fading has unit mean and stays positive") {
  SystemParams params = SystemParams::defaults(1);
  ChannelConfig cfg;  // exponential fading by default
  ChannelGenerator gen(cfg, params, 77);
  const double mean_gain_st = gen.mean_gains_st()[0];

  double acc = 0.0;
  const std::size_t frames = 100000;
  for (std::size_t t = 1; t <= frames; ++t) {
    const ChannelState s = gen.sample_frame(t);
    REQUIRE(s.h_st[0] > 0.0);
    REQUIRE(s.h_tc > 0.0);
    acc += s.h_st[0] / mean_gain_st;
  }
  CHECK(acc / static_cast<double>(frames) > 0.99);
  CHECK(acc / static_cast<double>(frames) < 1.01);
}

TEST_CASE("identical seeds give identical traces") {
  SystemParams params = SystemParams::defaults(4);
  ChannelConfig cfg;
  ChannelGenerator a(cfg, params, 123), b(cfg, params, 123), c(cfg, params, 124);
  const auto ta = a.generate(200);
  const auto tb = b.generate(200);
  const auto tc = c.generate(200);
  bool equal = true, differs = false;
  for (std::size_t i = 0; i < 200; ++i) {
    equal = equal && ta[i].h_st == tb[i].h_st && ta[i].h_tc == tb[i].h_tc;
    differs = differs || ta[i].h_st != tc[i].h_st;
  }
  CHECK(equal);
  CHECK(differs);
}

TEST_CASE("deep-fade spikes scale a whole frame") {
  SystemParams params = SystemParams::defaults(2);
  ChannelConfig cfg;
  cfg.fading = FadingKind::None;
  cfg.deep_fade.probability = 1.0;
  cfg.deep_fade.gain_factor = 0.01;
  ChannelGenerator gen(cfg, params, 5);
  const ChannelState s = gen.sample_frame(1);
  CHECK(s.h_st[0] == Approx(0.01 * gen.mean_gains_st()[0]).epsilon(1e-12));
  CHECK(s.h_tc == Approx(0.01 * gen.mean_gain_tc()).epsilon(1e-12));
}

TEST_CASE("trace CSV round trip is exact and rewrites byte-identically") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "drto_trace_test";
  fs::create_directories(dir);
  const fs::path path = dir / "trace.csv";

  SystemParams params = SystemParams::defaults(3);
  ChannelConfig cfg;
  ChannelGenerator gen(cfg, params, 31);
  const auto trace = gen.generate(64);

  write_trace_csv(path, trace);
  const auto loaded = read_trace_csv(path);
  REQUIRE(loaded.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(loaded[i].frame == trace[i].frame);
    CHECK(loaded[i].h_st == trace[i].h_st);
    CHECK(loaded[i].h_tc == trace[i].h_tc);
  }

  const fs::path copy = dir / "copy.csv";
  write_trace_csv(copy, loaded);
  CHECK(read_file(path) == read_file(copy));

  fs::remove_all(dir);
}

TEST_CASE("trace CSV parse errors carry locations") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "drto_trace_err";
  fs::create_directories(dir);

  const fs::path bad = dir / "bad.csv";
  atomic_write_file(bad, "frame,h_1,h_TC\n1,notanumber,2e-9\n");
  CHECK_THROWS_WITH(read_trace_csv(bad), Catch::Matchers::ContainsSubstring("bad.csv:2"));

  const fs::path short_row = dir / "short.csv";
  atomic_write_file(short_row, "frame,h_1,h_TC\n1,2e-9\n");
  CHECK_THROWS_AS(read_trace_csv(short_row), std::runtime_error);

  const fs::path empty = dir / "empty.csv";
  atomic_write_file(empty, "");
  CHECK_THROWS_AS(read_trace_csv(empty), std::runtime_error);

  fs::remove_all(dir);
}

TEST_CASE("column means match the generating configuration") {
  SystemParams params = SystemParams::defaults(2);
  ChannelConfig cfg;
  cfg.fading = FadingKind::None;
  ChannelGenerator gen(cfg, params, 3);
  const auto trace = gen.generate(10);
  const auto means = trace_column_means(trace);
  REQUIRE(means.size() == 3);
  CHECK(means[0] == Approx(gen.mean_gains_st()[0]));
  CHECK(means[1] == Approx(gen.mean_gains_st()[1]));
  CHECK(means[2] == Approx(gen.mean_gain_tc()));
}

TEST_CASE("path-loss mode wires per-link geometry") {
  SystemParams params = SystemParams::defaults(2);
  ChannelConfig cfg;
  cfg.mode = ChannelConfig::Mode::PathLoss;
  PathLossParams link;
  link.distance_m = 500.0;
  cfg.path_loss_st = {link};
  cfg.path_loss_tc = link;
  cfg.path_loss_tc.distance_m = 1000.0;
  cfg.fading = FadingKind::None;

  ChannelGenerator gen(cfg, params, 1);
  CHECK(gen.mean_gains_st()[0] == Approx(mean_gain(link)));
  CHECK(gen.mean_gains_st()[1] == Approx(mean_gain(link)));
  CHECK(gen.mean_gain_tc() == Approx(mean_gain(cfg.path_loss_tc)));

  SECTION("a missing distance surfaces at construction") {
    cfg.path_loss_tc.distance_m = 0.0;
    CHECK_THROWS_AS(ChannelGenerator(cfg, params, 1), std::invalid_argument);
  }
}

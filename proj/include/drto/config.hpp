#pragma once

#include "drto/agent.hpp"
#include "drto/channel.hpp"
#include "drto/io_util.hpp"
#include "drto/system_model.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace drto {

enum class AlgorithmKind { Drto, Ddlo, CoordinateDescent, Enumeration, PureTc, PureSat };

inline std::string to_string(AlgorithmKind a) {
  switch (a) {
    case AlgorithmKind::Drto: return "drto";
    case AlgorithmKind::Ddlo: return "ddlo";
    case AlgorithmKind::CoordinateDescent: return "cd";
    case AlgorithmKind::Enumeration: return "enum";
    case AlgorithmKind::PureTc: return "pure-tc";
    case AlgorithmKind::PureSat: return "pure-sat";
  }
  throw std::logic_error("unknown AlgorithmKind");
}

inline AlgorithmKind algorithm_from_string(const std::string& s) {
  if (s == "drto") return AlgorithmKind::Drto;
  if (s == "ddlo") return AlgorithmKind::Ddlo;
  if (s == "cd") return AlgorithmKind::CoordinateDescent;
  if (s == "enum") return AlgorithmKind::Enumeration;
  if (s == "pure-tc") return AlgorithmKind::PureTc;
  if (s == "pure-sat") return AlgorithmKind::PureSat;
  throw std::invalid_argument("unknown algorithm `" + s +
                              "` (expected drto|ddlo|cd|enum|pure-tc|pure-sat)");
}

struct ExperimentConfig {
  std::size_t total_frames = 30000;
  std::vector<AlgorithmKind> algorithms = {AlgorithmKind::Drto, AlgorithmKind::Enumeration,
                                           AlgorithmKind::PureTc, AlgorithmKind::PureSat};
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir;  // empty: keep results in memory only
  bool compute_ratio = true;
  std::size_t enum_guard = 20;     // largest N enumerated
  std::size_t bench_warmup = 100;  // frames excluded from runtime means
  std::size_t tail_window = 3000;  // frames in the converged-tail aggregates

  void validate() const {
    if (total_frames == 0) throw std::invalid_argument("experiment: total_frames must be >= 1");
    if (algorithms.empty()) throw std::invalid_argument("experiment: need at least one algorithm");
    if (seeds.empty()) throw std::invalid_argument("experiment: need at least one seed");
    if (tail_window == 0) throw std::invalid_argument("experiment: tail_window must be positive");
  }
};

struct Config {
  SystemParams system = SystemParams::defaults();
  ChannelConfig channel;
  AgentConfig agent;
  ExperimentConfig experiment;
};

inline Config default_config(std::size_t n_st = 5) {
  Config cfg;
  cfg.system = SystemParams::defaults(n_st);
  return cfg;
}

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& section, const char* name,
                                std::initializer_list<const char*> known) {
  for (auto it = section.begin(); it != section.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok)
      throw std::invalid_argument("config: unknown key `" + it.key() + "` in section `" + name +
                                  "`");
  }
}

template <typename T>
void read_into(const json& section, const char* key, T& out) {
  if (section.contains(key)) out = section.at(key).get<T>();
}

inline void parse_system(const json& j, SystemParams& p) {
  reject_unknown_keys(j, "system",
                      {"n_st", "bandwidth_total", "p_st", "p_sat", "noise", "task_bits",
                       "intensity", "f_sat", "f_tc", "p_compute_sat", "lambda"});
  read_into(j, "n_st", p.n_st);
  read_into(j, "bandwidth_total", p.bandwidth_total);
  read_into(j, "p_sat", p.p_sat);
  read_into(j, "noise", p.noise);
  read_into(j, "task_bits", p.task_bits);
  read_into(j, "intensity", p.intensity);
  read_into(j, "f_sat", p.f_sat);
  read_into(j, "f_tc", p.f_tc);
  read_into(j, "p_compute_sat", p.p_compute_sat);
  read_into(j, "lambda", p.lambda);
  if (j.contains("p_st")) {
    const json& v = j.at("p_st");
    if (v.is_number())
      p.p_st.assign(p.n_st, v.get<double>());
    else
      p.p_st = v.get<std::vector<double>>();
  } else {
    p.p_st.assign(p.n_st, p.p_st.empty() ? 1.0 : p.p_st.front());
  }
  if (p.p_st.size() != p.n_st && p.p_st.size() == 1) p.p_st.assign(p.n_st, p.p_st.front());
}

inline PathLossParams parse_path_loss(const json& j) {
  reject_unknown_keys(j, "channel.path_loss",
                      {"antenna_gain", "path_loss_exponent", "carrier_hz", "distance_m"});
  PathLossParams p;
  read_into(j, "antenna_gain", p.antenna_gain);
  read_into(j, "path_loss_exponent", p.path_loss_exponent);
  read_into(j, "carrier_hz", p.carrier_hz);
  read_into(j, "distance_m", p.distance_m);
  return p;
}

inline void parse_channel(const json& j, ChannelConfig& c) {
  reject_unknown_keys(j, "channel",
                      {"mode", "snr_first_hop_db", "snr_second_hop_db", "path_loss_st",
                       "path_loss_tc", "fading", "deep_fade"});
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "direct_snr")
      c.mode = ChannelConfig::Mode::DirectSnr;
    else if (mode == "path_loss")
      c.mode = ChannelConfig::Mode::PathLoss;
    else
      throw std::invalid_argument("config: channel.mode must be direct_snr or path_loss");
  }
  if (j.contains("snr_first_hop_db")) {
    const json& v = j.at("snr_first_hop_db");
    if (v.is_number())
      c.snr_first_hop_db = {v.get<double>()};
    else
      c.snr_first_hop_db = v.get<std::vector<double>>();
  }
  read_into(j, "snr_second_hop_db", c.snr_second_hop_db);
  if (j.contains("path_loss_st")) {
    c.path_loss_st.clear();
    for (const json& link : j.at("path_loss_st")) c.path_loss_st.push_back(parse_path_loss(link));
  }
  if (j.contains("path_loss_tc")) c.path_loss_tc = parse_path_loss(j.at("path_loss_tc"));
  if (j.contains("fading")) {
    const std::string fading = j.at("fading").get<std::string>();
    if (fading == "none")
      c.fading = FadingKind::None;
    else if (fading == "exponential")
      c.fading = FadingKind::IidExponential;
    else
      throw std::invalid_argument("config: channel.fading must be none or exponential");
  }
  if (j.contains("deep_fade")) {
    const json& df = j.at("deep_fade");
    reject_unknown_keys(df, "channel.deep_fade", {"probability", "gain_factor"});
    read_into(df, "probability", c.deep_fade.probability);
    read_into(df, "gain_factor", c.deep_fade.gain_factor);
  }
}

inline void parse_agent(const json& j, AgentConfig& a) {
  reject_unknown_keys(j, "agent",
                      {"delta_train", "batch_size", "memory_capacity", "hidden", "learning_rate",
                       "beta1", "beta2", "epsilon", "init_std"});
  read_into(j, "delta_train", a.delta_train);
  read_into(j, "batch_size", a.batch_size);
  read_into(j, "memory_capacity", a.memory_capacity);
  read_into(j, "hidden", a.hidden);
  read_into(j, "learning_rate", a.adam.learning_rate);
  read_into(j, "beta1", a.adam.beta1);
  read_into(j, "beta2", a.adam.beta2);
  read_into(j, "epsilon", a.adam.epsilon);
  read_into(j, "init_std", a.init_std);
}

inline void parse_experiment(const json& j, ExperimentConfig& e) {
  reject_unknown_keys(j, "experiment",
                      {"total_frames", "algorithms", "seeds", "output_dir", "compute_ratio",
                       "enum_guard", "bench_warmup", "tail_window"});
  read_into(j, "total_frames", e.total_frames);
  read_into(j, "seeds", e.seeds);
  read_into(j, "output_dir", e.output_dir);
  read_into(j, "compute_ratio", e.compute_ratio);
  read_into(j, "enum_guard", e.enum_guard);
  read_into(j, "bench_warmup", e.bench_warmup);
  read_into(j, "tail_window", e.tail_window);
  if (j.contains("algorithms")) {
    e.algorithms.clear();
    for (const json& a : j.at("algorithms"))
      e.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
  }
}

}  // namespace detail

// Environment overrides: DRTO_<SECTION>_<KEY>=<json-value>, e.g.
// DRTO_SYSTEM_LAMBDA=0.25 or DRTO_EXPERIMENT_TOTAL_FRAMES=500. Values that
// fail to parse as JSON are taken as strings.
inline void apply_env_overrides(nlohmann::json& j, const char* prefix = "DRTO_") {
  static const std::map<std::string, std::vector<std::string>> schema = {
      {"system",
       {"n_st", "bandwidth_total", "p_st", "p_sat", "noise", "task_bits", "intensity", "f_sat",
        "f_tc", "p_compute_sat", "lambda"}},
      {"channel",
       {"mode", "snr_first_hop_db", "snr_second_hop_db", "fading"}},
      {"agent",
       {"delta_train", "batch_size", "memory_capacity", "hidden", "learning_rate", "beta1",
        "beta2", "epsilon", "init_std"}},
      {"quantizer", {"delta_big"}},
      {"experiment",
       {"total_frames", "algorithms", "seeds", "output_dir", "compute_ratio", "enum_guard",
        "bench_warmup", "tail_window"}},
  };
  for (const auto& [section, keys] : schema) {
    for (const std::string& key : keys) {
      std::string var = std::string(prefix) + section + "_" + key;
      for (char& c : var) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      const char* value = std::getenv(var.c_str());
      if (value == nullptr) continue;
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(value);
      } catch (const nlohmann::json::parse_error&) {
        parsed = std::string(value);
      }
      j[section][key] = parsed;
    }
  }
}

inline Config config_from_json(const nlohmann::json& j) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "system" && it.key() != "channel" && it.key() != "agent" &&
        it.key() != "quantizer" && it.key() != "experiment")
      throw std::invalid_argument("config: unknown section `" + it.key() + "`");

  Config cfg;
  if (j.contains("system")) detail::parse_system(j.at("system"), cfg.system);
  if (cfg.system.p_st.empty()) cfg.system.p_st.assign(cfg.system.n_st, 1.0);
  if (j.contains("channel")) detail::parse_channel(j.at("channel"), cfg.channel);
  if (j.contains("agent")) detail::parse_agent(j.at("agent"), cfg.agent);
  if (j.contains("quantizer")) {
    detail::reject_unknown_keys(j.at("quantizer"), "quantizer", {"delta_big"});
    detail::read_into(j.at("quantizer"), "delta_big", cfg.agent.delta_big);
  }
  if (j.contains("experiment")) detail::parse_experiment(j.at("experiment"), cfg.experiment);

  cfg.system.validate();
  cfg.agent.validate();
  cfg.experiment.validate();
  return cfg;
}

inline Config load_config(const std::filesystem::path& path, bool with_env_overrides = true) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config: cannot parse " + path.string() + ": " + e.what());
  }
  if (with_env_overrides) apply_env_overrides(j);
  try {
    return config_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error("config: " + path.string() + ": " + e.what());
  }
}

inline nlohmann::json config_to_json(const Config& cfg) {
  nlohmann::json j;
  j["system"] = {{"n_st", cfg.system.n_st},
                 {"bandwidth_total", cfg.system.bandwidth_total},
                 {"p_st", cfg.system.p_st},
                 {"p_sat", cfg.system.p_sat},
                 {"noise", cfg.system.noise},
                 {"task_bits", cfg.system.task_bits},
                 {"intensity", cfg.system.intensity},
                 {"f_sat", cfg.system.f_sat},
                 {"f_tc", cfg.system.f_tc},
                 {"p_compute_sat", cfg.system.p_compute_sat},
                 {"lambda", cfg.system.lambda}};
  j["channel"]["mode"] =
      cfg.channel.mode == ChannelConfig::Mode::DirectSnr ? "direct_snr" : "path_loss";
  if (cfg.channel.mode == ChannelConfig::Mode::DirectSnr) {
    j["channel"]["snr_first_hop_db"] = cfg.channel.snr_first_hop_db;
    j["channel"]["snr_second_hop_db"] = cfg.channel.snr_second_hop_db;
  } else {
    auto link_json = [](const PathLossParams& p) {
      return nlohmann::json{{"antenna_gain", p.antenna_gain},
                            {"path_loss_exponent", p.path_loss_exponent},
                            {"carrier_hz", p.carrier_hz},
                            {"distance_m", p.distance_m}};
    };
    nlohmann::json links = nlohmann::json::array();
    for (const PathLossParams& p : cfg.channel.path_loss_st) links.push_back(link_json(p));
    j["channel"]["path_loss_st"] = links;
    j["channel"]["path_loss_tc"] = link_json(cfg.channel.path_loss_tc);
  }
  j["channel"]["fading"] = cfg.channel.fading == FadingKind::None ? "none" : "exponential";
  j["channel"]["deep_fade"] = {{"probability", cfg.channel.deep_fade.probability},
                               {"gain_factor", cfg.channel.deep_fade.gain_factor}};
  j["agent"] = {{"delta_train", cfg.agent.delta_train},
                {"batch_size", cfg.agent.batch_size},
                {"memory_capacity", cfg.agent.memory_capacity},
                {"hidden", cfg.agent.hidden},
                {"learning_rate", cfg.agent.adam.learning_rate},
                {"beta1", cfg.agent.adam.beta1},
                {"beta2", cfg.agent.adam.beta2},
                {"epsilon", cfg.agent.adam.epsilon},
                {"init_std", cfg.agent.init_std}};
  j["quantizer"] = {{"delta_big", cfg.agent.delta_big}};
  nlohmann::json algos = nlohmann::json::array();
  for (AlgorithmKind a : cfg.experiment.algorithms) algos.push_back(to_string(a));
  j["experiment"] = {{"total_frames", cfg.experiment.total_frames},
                     {"algorithms", algos},
                     {"seeds", cfg.experiment.seeds},
                     {"output_dir", cfg.experiment.output_dir},
                     {"compute_ratio", cfg.experiment.compute_ratio},
                     {"enum_guard", cfg.experiment.enum_guard},
                     {"bench_warmup", cfg.experiment.bench_warmup},
                     {"tail_window", cfg.experiment.tail_window}};
  return j;
}

}  // namespace drto

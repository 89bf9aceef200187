#pragma once

#include "drto/io_util.hpp"
#include "drto/neural.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>

namespace drto {

// Network checkpoints are JSON: a layer-dims header plus row-major parameter
// arrays (stored as doubles regardless of the in-memory scalar), with the
// optimizer moments alongside so experiments resume exactly.

template <typename Scalar>
nlohmann::json mlp_to_json(const MlpT<Scalar>& net) {
  std::vector<std::vector<double>> weights, biases;
  for (const auto& w : net.weights()) weights.emplace_back(w.begin(), w.end());
  for (const auto& b : net.biases()) biases.emplace_back(b.begin(), b.end());
  return {{"dims", net.dims()}, {"weights", weights}, {"biases", biases}};
}

template <typename Scalar = double>
MlpT<Scalar> mlp_from_json(const nlohmann::json& j) {
  MlpT<Scalar> net(j.at("dims").get<std::vector<std::size_t>>());
  const auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto biases = j.at("biases").get<std::vector<std::vector<double>>>();
  if (weights.size() != net.layer_count() || biases.size() != net.layer_count())
    throw std::invalid_argument("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    if (weights[l].size() != net.weights()[l].size() || biases[l].size() != net.biases()[l].size())
      throw std::invalid_argument("checkpoint: parameter shape mismatch at layer " +
                                  std::to_string(l));
    net.weights()[l].assign(weights[l].begin(), weights[l].end());
    net.biases()[l].assign(biases[l].begin(), biases[l].end());
  }
  return net;
}

template <typename Scalar>
nlohmann::json adam_to_json(const AdamStateT<Scalar>& s) {
  auto widen = [](const std::vector<std::vector<Scalar>>& v) {
    std::vector<std::vector<double>> out;
    for (const auto& inner : v) out.emplace_back(inner.begin(), inner.end());
    return out;
  };
  return {{"learning_rate", s.config.learning_rate},
          {"beta1", s.config.beta1},
          {"beta2", s.config.beta2},
          {"epsilon", s.config.epsilon},
          {"step", s.step},
          {"m_w", widen(s.m_w)},
          {"v_w", widen(s.v_w)},
          {"m_b", widen(s.m_b)},
          {"v_b", widen(s.v_b)}};
}

template <typename Scalar = double>
AdamStateT<Scalar> adam_from_json(const nlohmann::json& j) {
  auto narrow = [](const std::vector<std::vector<double>>& v) {
    std::vector<std::vector<Scalar>> out;
    for (const auto& inner : v) out.emplace_back(inner.begin(), inner.end());
    return out;
  };
  AdamStateT<Scalar> s;
  s.config.learning_rate = j.at("learning_rate").get<double>();
  s.config.beta1 = j.at("beta1").get<double>();
  s.config.beta2 = j.at("beta2").get<double>();
  s.config.epsilon = j.at("epsilon").get<double>();
  s.step = j.at("step").get<std::uint64_t>();
  s.m_w = narrow(j.at("m_w").get<std::vector<std::vector<double>>>());
  s.v_w = narrow(j.at("v_w").get<std::vector<std::vector<double>>>());
  s.m_b = narrow(j.at("m_b").get<std::vector<std::vector<double>>>());
  s.v_b = narrow(j.at("v_b").get<std::vector<std::vector<double>>>());
  return s;
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const MlpT<Scalar>& net,
                     const AdamStateT<Scalar>* opt = nullptr) {
  nlohmann::json j;
  j["network"] = mlp_to_json(net);
  if (opt != nullptr) j["adam"] = adam_to_json(*opt);
  atomic_write_file(path, j.dump(2) + "\n");
}

template <typename Scalar = double>
std::pair<MlpT<Scalar>, AdamStateT<Scalar>> load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  MlpT<Scalar> net = mlp_from_json<Scalar>(j.at("network"));
  AdamStateT<Scalar> opt = j.contains("adam") ? adam_from_json<Scalar>(j.at("adam"))
                                              : AdamStateT<Scalar>::for_net(net);
  return {std::move(net), std::move(opt)};
}

}  // namespace drto

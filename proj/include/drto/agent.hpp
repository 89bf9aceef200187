#pragma once

#include "drto/bandwidth_allocator.hpp"
#include "drto/neural.hpp"
#include "drto/quantizer.hpp"
#include "drto/system_model.hpp"

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace drto {

struct AgentConfig {
  std::size_t delta_train = 10;        // frames between training events
  std::size_t batch_size = 128;
  std::size_t delta_big = 64;          // candidate-count adjustment interval
  std::size_t memory_capacity = 1024;
  std::vector<std::size_t> hidden = {120, 80};
  AdamConfig adam;
  double init_std = 0.1;

  void validate() const {
    if (delta_train == 0 || batch_size == 0 || delta_big == 0 || memory_capacity == 0)
      throw std::invalid_argument("AgentConfig: intervals and sizes must be positive");
    if (hidden.empty()) throw std::invalid_argument("AgentConfig: need at least one hidden layer");
    for (std::size_t h : hidden)
      if (h == 0) throw std::invalid_argument("AgentConfig: zero-width hidden layer");
    if (!(init_std > 0.0)) throw std::invalid_argument("AgentConfig: init_std must be positive");
    if (!(adam.learning_rate > 0.0))
      throw std::invalid_argument("AgentConfig: learning rate must be positive");
  }
};

// Everything recorded about one frame. `decide_seconds` covers the decision
// path only (forward, quantize, per-candidate allocations, argmin);
// `step_seconds` additionally includes the memory push and any training.
struct FrameRecord {
  std::uint64_t frame = 0;
  OffloadDecision decision;
  std::size_t k_star = 0;  // winning candidate, 1-based
  std::size_t k_used = 0;  // candidate count of this frame
  std::optional<double> loss;
  std::optional<double> cost_ratio;  // filled by the harness when a reference optimum runs
  double decide_seconds = 0.0;
  double step_seconds = 0.0;
};

// Online offloading agent. Per frame: the policy network maps the normalized
// channel state to a relaxed location, quantization expands it into K_t
// binary candidates, each candidate gets its optimal bandwidth split, and the
// cheapest candidate wins. The winner is pushed to replay memory as the label
// for that channel state; the network trains on a sampled batch every
// delta_train frames, and K_t is re-tuned every delta_big frames.
class DrtoAgent {
 public:
  DrtoAgent(const SystemParams& params, const AgentConfig& cfg, std::vector<double> input_scale,
            std::uint64_t seed)
      : cfg_(cfg),
        rng_(seed),
        net_(make_dims(params.n_st, cfg), rng_, cfg.init_std),
        opt_(AdamStateT<float>::for_net(net_, cfg.adam)),
        memory_(cfg.memory_capacity),
        quant_(params.n_st, cfg.delta_big),
        input_scale_(std::move(input_scale)) {
    params.validate();
    cfg_.validate();
    if (input_scale_.size() != params.n_st + 1)
      throw std::invalid_argument("DrtoAgent: input scale must cover the N+1 gain slots");
    for (double s : input_scale_)
      if (!(std::isfinite(s) && s > 0.0))
        throw std::invalid_argument("DrtoAgent: input scale entries must be positive");
  }

  /// Decision path only; no learning side effects.
  FrameRecord decide(const SystemParams& params, const ChannelState& channel) {
    FrameRecord rec;
    decide_into(rec, params, channel);
    return rec;
  }

  /// Full frame: adjust K_t, decide, remember, train on schedule.
  FrameRecord step(const SystemParams& params, const ChannelState& channel, std::uint64_t frame) {
    if (frame == 0) throw std::invalid_argument("DrtoAgent::step: frames are 1-based");
    const auto t0 = Clock::now();
    try {
      quant_.maybe_adjust_k(frame, params.n_st);
      FrameRecord rec;
      decide_into(rec, params, channel);
      rec.frame = frame;
      quant_.record_best(rec.k_star);
      std::vector<double> label(rec.decision.x.begin(), rec.decision.x.end());
      memory_.push(input_, std::move(label));
      if (frame % cfg_.delta_train == 0) {
        memory_.sample_into(batch_, cfg_.batch_size, rng_);
        rec.loss = train_batch(net_, opt_, batch_);
      }
      rec.step_seconds = seconds_since(t0);
      return rec;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("DrtoAgent::step: frame " + std::to_string(frame) + ": " + e.what());
    }
  }

  std::vector<double> normalized_input(const ChannelState& channel) const {
    std::vector<double> input;
    normalized_input_into(channel, input);
    return input;
  }

  void normalized_input_into(const ChannelState& channel, std::vector<double>& input) const {
    channel.validate(input_scale_.size() - 1);
    input.resize(input_scale_.size());
    for (std::size_t i = 0; i + 1 < input_scale_.size(); ++i)
      input[i] = channel.h_st[i] / input_scale_[i];
    input.back() = channel.h_tc / input_scale_.back();
  }

  const PolicyNet& net() const { return net_; }
  PolicyNet& net() { return net_; }
  AdamStateT<float>& optimizer() { return opt_; }
  const ReplayMemory& memory() const { return memory_; }
  QuantizerState& quantizer() { return quant_; }
  const QuantizerState& quantizer() const { return quant_; }
  const AgentConfig& config() const { return cfg_; }

 private:
  using Clock = std::chrono::steady_clock;

  static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }

  static std::vector<std::size_t> make_dims(std::size_t n_st, const AgentConfig& cfg) {
    std::vector<std::size_t> dims;
    dims.reserve(cfg.hidden.size() + 2);
    dims.push_back(n_st + 1);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(n_st);
    return dims;
  }

  // Leaves the normalized input in input_ so step() can reuse it as the
  // memory key.
  void decide_into(FrameRecord& rec, const SystemParams& params, const ChannelState& channel) {
    const auto t0 = Clock::now();
    normalized_input_into(channel, input_);
    // Scratch-buffer forward; the per-frame latency is benchmarked, so the
    // decision path avoids per-call allocations.
    fwd_a_.assign(input_.begin(), input_.end());
    net_.run_layers(fwd_a_, fwd_z_);
    x_hat_.assign(fwd_a_.begin(), fwd_a_.end());
    const std::size_t k = quant_.k_current();
    const std::vector<std::vector<int>> candidates = quantize(x_hat_, k);

    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    AllocResult best_alloc;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const AllocProblem prob = build_problem(params, channel, candidates[i]);
      AllocResult res = solve_closed_form(prob);
      if (res.cost < best_cost) {
        best_cost = res.cost;
        best = i;
        best_alloc = std::move(res);
      }
    }

    rec.decision.x = candidates[best];
    rec.decision.alpha = std::move(best_alloc.alpha);
    rec.decision.cost = best_cost;
    rec.k_star = best + 1;
    rec.k_used = k;
    rec.decide_seconds = seconds_since(t0);
    rec.frame = channel.frame;
  }

  AgentConfig cfg_;
  Rng rng_;
  PolicyNet net_;
  AdamStateT<float> opt_;
  ReplayMemory memory_;
  QuantizerState quant_;
  std::vector<double> input_scale_;
  std::vector<double> input_;         // normalized-input scratch
  std::vector<float> fwd_a_, fwd_z_;  // forward-pass scratch
  std::vector<double> x_hat_;
  std::vector<TrainSample> batch_;    // training-batch scratch
};

}  // namespace drto

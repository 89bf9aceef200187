#pragma once

#include "drto/agent.hpp"
#include "drto/bandwidth_allocator.hpp"
#include "drto/system_model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace drto {

enum class BaselineKind { Enumeration, CoordinateDescent, Ddlo, PureTc, PureSat };

/// Optimal bandwidth for a fixed location vector. A non-finite closed-form
/// cost is mapped to the +inf sentinel so comparison loops can skip it.
inline OffloadDecision solve_for_location(const SystemParams& params, const ChannelState& channel,
                                          std::vector<int> x) {
  const AllocProblem prob = build_problem(params, channel, x);
  AllocResult res = solve_closed_form(prob);
  if (!std::isfinite(res.cost)) res.cost = std::numeric_limits<double>::infinity();
  return {std::move(x), std::move(res.alpha), res.cost};
}

/// Global optimum by trying all 2^N location vectors; ties go to the lowest
/// binary-counting order. Guarded against exponential blowup.
inline OffloadDecision enumerate_optimal(const SystemParams& params, const ChannelState& channel,
                                         std::size_t guard = 20) {
  params.validate();
  const std::size_t n = params.n_st;
  if (n > guard)
    throw std::invalid_argument("enumerate_optimal: n_st = " + std::to_string(n) +
                                " exceeds the 2^N guard of " + std::to_string(guard));
  OffloadDecision best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<int> x(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<int>((mask >> i) & 1u);
    OffloadDecision d = solve_for_location(params, channel, x);
    if (d.cost < best.cost) best = std::move(d);
  }
  return best;
}

// Steepest single-flip descent from the all-satellite start: each round
// evaluates every one-bit flip, takes the largest cost decrement (ties to the
// lowest ST index), and stops when no flip improves. `accepted_costs`, when
// given, receives the start cost followed by each accepted flip's cost.
inline OffloadDecision coordinate_descent(const SystemParams& params, const ChannelState& channel,
                                          std::vector<double>* accepted_costs = nullptr) {
  params.validate();
  const std::size_t n = params.n_st;
  std::vector<int> x(n, 1);
  OffloadDecision current = solve_for_location(params, channel, x);
  if (accepted_costs) accepted_costs->push_back(current.cost);
  for (;;) {
    std::size_t best_flip = n;
    OffloadDecision best;
    best.cost = current.cost;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] ^= 1;
      OffloadDecision cand = solve_for_location(params, channel, x);
      x[i] ^= 1;
      if (cand.cost < best.cost) {
        best = std::move(cand);
        best_flip = i;
      }
    }
    if (best_flip == n) break;
    x[best_flip] ^= 1;
    current = std::move(best);
    if (accepted_costs) accepted_costs->push_back(current.cost);
  }
  return current;
}

/// All-cloud or all-satellite location with the bandwidth still optimized.
inline OffloadDecision pure_fixed(const SystemParams& params, const ChannelState& channel,
                                  BaselineKind kind) {
  if (kind != BaselineKind::PureTc && kind != BaselineKind::PureSat)
    throw std::invalid_argument("pure_fixed: kind must be PureTc or PureSat");
  std::vector<int> x(params.n_st, kind == BaselineKind::PureSat ? 1 : 0);
  return solve_for_location(params, channel, std::move(x));
}

// Ensemble-of-networks baseline: every member maps the same channel state to
// its own rounded candidate, duplicates collapse, the cheapest candidate wins,
// and all members train on one shared replay memory on the same schedule.
// Members share the architecture and differ only in their weight draws.
class DdloEnsemble {
 public:
  DdloEnsemble(const SystemParams& params, const AgentConfig& cfg, std::vector<double> input_scale,
               std::uint64_t seed, std::size_t n_nets = 0)
      : cfg_(cfg), rng_(seed), memory_(cfg.memory_capacity), input_scale_(std::move(input_scale)) {
    params.validate();
    cfg_.validate();
    if (input_scale_.size() != params.n_st + 1)
      throw std::invalid_argument("DdloEnsemble: input scale must cover the N+1 gain slots");
    if (params.n_st > 64)
      throw std::invalid_argument("DdloEnsemble: candidate masks support at most 64 STs");
    const std::size_t count = n_nets == 0 ? params.n_st : n_nets;
    std::vector<std::size_t> dims;
    dims.push_back(params.n_st + 1);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(params.n_st);
    nets_.reserve(count);
    opts_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Rng net_rng(derive_seed(seed, i + 1));
      nets_.emplace_back(dims, net_rng, cfg.init_std);
      opts_.push_back(AdamStateT<float>::for_net(nets_.back(), cfg.adam));
    }
  }

  FrameRecord decide(const SystemParams& params, const ChannelState& channel) {
    FrameRecord rec;
    decide_into(rec, params, channel);
    return rec;
  }

  FrameRecord step(const SystemParams& params, const ChannelState& channel, std::uint64_t frame) {
    if (frame == 0) throw std::invalid_argument("DdloEnsemble::step: frames are 1-based");
    const auto t0 = std::chrono::steady_clock::now();
    FrameRecord rec;
    decide_into(rec, params, channel);
    rec.frame = frame;
    std::vector<double> label(rec.decision.x.begin(), rec.decision.x.end());
    memory_.push(input_, std::move(label));
    if (frame % cfg_.delta_train == 0) {
      double last_loss = 0.0;
      for (std::size_t i = 0; i < nets_.size(); ++i) {
        memory_.sample_into(batch_, cfg_.batch_size, rng_);
        last_loss = train_batch(nets_[i], opts_[i], batch_);
      }
      rec.loss = last_loss;
    }
    rec.step_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

  std::size_t size() const { return nets_.size(); }
  const PolicyNet& net(std::size_t i) const { return nets_.at(i); }
  PolicyNet& net(std::size_t i) { return nets_.at(i); }

 private:
  void decide_into(FrameRecord& rec, const SystemParams& params, const ChannelState& channel) {
    const auto t0 = std::chrono::steady_clock::now();
    channel.validate(input_scale_.size() - 1);
    input_.resize(input_scale_.size());
    for (std::size_t i = 0; i + 1 < input_scale_.size(); ++i)
      input_[i] = channel.h_st[i] / input_scale_[i];
    input_.back() = channel.h_tc / input_scale_.back();

    // Rounded outputs are deduplicated as bitmasks before any candidate
    // vector is materialized (converged members mostly agree).
    const std::size_t n = input_scale_.size() - 1;
    std::vector<std::vector<int>> candidates;
    candidates.reserve(nets_.size());
    masks_.clear();
    in_f_.assign(input_.begin(), input_.end());
    for (const PolicyNet& net : nets_) {
      fwd_a_ = in_f_;
      net.run_layers(fwd_a_, fwd_z_);
      std::uint64_t mask = 0;
      for (std::size_t i = 0; i < n; ++i) mask |= fwd_a_[i] > 0.5f ? (std::uint64_t{1} << i) : 0;
      if (std::find(masks_.begin(), masks_.end(), mask) != masks_.end()) continue;
      masks_.push_back(mask);
      std::vector<int> cand(n);
      for (std::size_t i = 0; i < n; ++i) cand[i] = static_cast<int>((mask >> i) & 1u);
      candidates.push_back(std::move(cand));
    }

    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    OffloadDecision best_decision;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      OffloadDecision d = solve_for_location(params, channel, candidates[i]);
      if (d.cost < best_cost) {
        best_cost = d.cost;
        best = i;
        best_decision = std::move(d);
      }
    }

    rec.decision = std::move(best_decision);
    rec.k_star = best + 1;
    rec.k_used = candidates.size();
    rec.frame = channel.frame;
    rec.decide_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  AgentConfig cfg_;
  Rng rng_;
  ReplayMemory memory_;
  std::vector<double> input_scale_;
  std::vector<PolicyNet> nets_;
  std::vector<AdamStateT<float>> opts_;
  std::vector<double> input_;                // normalized-input scratch
  std::vector<float> in_f_, fwd_a_, fwd_z_;  // forward-pass scratch
  std::vector<std::uint64_t> masks_;         // dedupe scratch
  std::vector<TrainSample> batch_;           // training-batch scratch
};

}  // namespace drto

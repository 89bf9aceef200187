#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace drto {

// Physical and task constants. Defaults reproduce the reference setup: an
// 800 MHz shared band, 100 MB tasks (8e8 bits, decimal megabytes), 1 W
// terminals against a 3 W satellite transmitter, a 0.4 GHz on-board CPU versus
// a 3 GHz ground cloud, and an even latency/energy weighting.
//
// All gains, powers and rates are linear units; dB appears only at the
// config/report boundary.
struct SystemParams {
  std::size_t n_st = 5;          // N, number of source terminals
  double bandwidth_total = 8e8;  // B, Hz
  std::vector<double> p_st;      // per-ST transmit power p_n, W
  double p_sat = 3.0;            // satellite transmit power, W
  double noise = 1e-9;           // receiver noise power N0, W
  double task_bits = 8e8;        // task size L, bits
  double intensity = 10.0;       // computational intensity k, cycles/bit
  double f_sat = 4e8;            // satellite edge CPU f1, cycles/s
  double f_tc = 3e9;             // terrestrial cloud CPU f0, cycles/s
  double p_compute_sat = 0.5;    // satellite computing power p_c, W
  double lambda = 0.5;           // latency weight; (1 - lambda) weighs energy

  static SystemParams defaults(std::size_t n = 5) {
    SystemParams p;
    p.n_st = n;
    p.p_st.assign(n, 1.0);
    return p;
  }

  void validate() const {
    if (n_st == 0) throw std::invalid_argument("SystemParams: n_st must be positive");
    if (p_st.size() != n_st)
      throw std::invalid_argument("SystemParams: p_st has " + std::to_string(p_st.size()) +
                                  " entries, expected n_st = " + std::to_string(n_st));
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(bandwidth_total) || !positive(p_sat) || !positive(noise) ||
        !positive(task_bits) || !positive(intensity) || !positive(f_sat) ||
        !positive(f_tc) || !positive(p_compute_sat))
      throw std::invalid_argument("SystemParams: physical quantities must be strictly positive");
    // Branch-free scan (false for NaN/inf); this runs on per-candidate hot
    // paths.
    bool ok = true;
    for (double p : p_st) ok &= (p > 0.0) & (p <= std::numeric_limits<double>::max());
    if (!ok)
      throw std::invalid_argument("SystemParams: p_st entries must be strictly positive");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("SystemParams: lambda must lie in [0, 1]");
  }
};

// Linear channel power gains observed in one time frame.
struct ChannelState {
  std::vector<double> h_st;  // gain of each ST toward the access satellite
  double h_tc = 0.0;         // gain of the satellite-to-cloud link
  std::uint64_t frame = 0;

  void validate(std::size_t n_st) const {
    if (h_st.size() != n_st)
      throw std::invalid_argument("ChannelState: expected " + std::to_string(n_st) +
                                  " ST gains, got " + std::to_string(h_st.size()));
    bool ok = true;
    for (double g : h_st) ok &= (g > 0.0) & (g <= std::numeric_limits<double>::max());
    if (!ok)
      throw std::invalid_argument("ChannelState: ST gains must be finite and strictly positive");
    if (!((h_tc > 0.0) & (h_tc <= std::numeric_limits<double>::max())))
      throw std::invalid_argument("ChannelState: h_tc must be finite and strictly positive");
  }
};

// One answer to the joint problem: execution sites x (1 = satellite edge,
// 0 = terrestrial cloud), the bandwidth fractions alpha over the 2N links
// (entry n: uplink of ST n; entry N+n: forwarding link of ST n), and the
// weighted cost of the pair.
struct OffloadDecision {
  std::vector<int> x;
  std::vector<double> alpha;
  double cost = 0.0;
};

struct PathCost {
  double latency = 0.0;  // seconds
  double energy = 0.0;   // joules
};

namespace detail {

inline void check_st_index(const SystemParams& params, std::size_t st) {
  if (st >= params.n_st)
    throw std::invalid_argument("ST index " + std::to_string(st) + " out of range [0, " +
                                std::to_string(params.n_st) + ")");
}

inline void check_fraction(double alpha, const char* where) {
  // A zero allocation leaves the link rate undefined, so it is a domain error
  // here; infeasible candidates are handled by the callers that need a
  // sentinel instead.
  if (!(alpha > 0.0) || alpha > 1.0 + 1e-9)
    throw std::domain_error(std::string(where) + ": bandwidth fraction must lie in (0, 1], got " +
                            std::to_string(alpha));
}

}  // namespace detail

/// Shannon rate of the ST -> satellite uplink under a fraction of the band.
inline double rate_first_hop(const SystemParams& params, const ChannelState& channel,
                             std::size_t st, double alpha_n) {
  detail::check_st_index(params, st);
  detail::check_fraction(alpha_n, "rate_first_hop");
  const double snr = params.p_st[st] * channel.h_st[st] / params.noise;
  return alpha_n * params.bandwidth_total * std::log2(1.0 + snr);
}

/// Shannon rate of the satellite -> cloud forwarding link.
inline double rate_second_hop(const SystemParams& params, const ChannelState& channel,
                              double alpha_fwd) {
  detail::check_fraction(alpha_fwd, "rate_second_hop");
  const double snr = params.p_sat * channel.h_tc / params.noise;
  return alpha_fwd * params.bandwidth_total * std::log2(1.0 + snr);
}

/// Latency and energy of executing ST `st`'s task on the satellite edge
/// server: uplink transfer plus on-board computation.
inline PathCost cost_sat_path(const SystemParams& params, const ChannelState& channel,
                              std::size_t st, double alpha_n) {
  const double rate = rate_first_hop(params, channel, st, alpha_n);
  const double t_up = params.task_bits / rate;
  const double t_cpu = params.intensity * params.task_bits / params.f_sat;
  return {t_up + t_cpu, params.p_st[st] * t_up + params.p_compute_sat * t_cpu};
}

/// Latency and energy of forwarding ST `st`'s task to the terrestrial cloud:
/// uplink, forwarding hop, and cloud computation. The grid-powered cloud's
/// computing energy is not billed.
inline PathCost cost_tc_path(const SystemParams& params, const ChannelState& channel,
                             std::size_t st, double alpha_n, double alpha_fwd) {
  const double r1 = rate_first_hop(params, channel, st, alpha_n);
  const double r2 = rate_second_hop(params, channel, alpha_fwd);
  const double t_up = params.task_bits / r1;
  const double t_fwd = params.task_bits / r2;
  const double t_cpu = params.intensity * params.task_bits / params.f_tc;
  return {t_up + t_fwd + t_cpu, params.p_st[st] * t_up + params.p_sat * t_fwd};
}

// Total weighted offloading cost
//   F(x, alpha) = sum_n x_n [l*T_sat + (1-l)*E_sat] + (1-x_n) [l*T_tc + (1-l)*E_tc].
// Every ST needs uplink bandwidth; cloud-executed tasks additionally need a
// positive forwarding fraction.
inline double eval_cost(const SystemParams& params, const ChannelState& channel,
                        const std::vector<int>& x, const std::vector<double>& alpha) {
  params.validate();
  channel.validate(params.n_st);
  const std::size_t n = params.n_st;
  if (x.size() != n)
    throw std::invalid_argument("eval_cost: x has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(n));
  if (alpha.size() != 2 * n)
    throw std::invalid_argument("eval_cost: alpha has " + std::to_string(alpha.size()) +
                                " entries, expected " + std::to_string(2 * n));
  double budget = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0))
      throw std::domain_error("eval_cost: alpha entries must be nonnegative");
    budget += a;
  }
  if (budget > 1.0 + 1e-9)
    throw std::domain_error("eval_cost: alpha sums to " + std::to_string(budget) +
                            ", exceeding the unit budget");

  const double l = params.lambda;
  double total = 0.0;
  for (std::size_t st = 0; st < n; ++st) {
    if (x[st] != 0 && x[st] != 1)
      throw std::invalid_argument("eval_cost: x entries must be binary");
    PathCost pc;
    if (x[st] == 1) {
      pc = cost_sat_path(params, channel, st, alpha[st]);
    } else {
      if (!(alpha[n + st] > 0.0))
        throw std::domain_error("eval_cost: ST " + std::to_string(st) +
                                " executes on the cloud but its forwarding fraction is zero");
      pc = cost_tc_path(params, channel, st, alpha[st], alpha[n + st]);
    }
    total += l * pc.latency + (1.0 - l) * pc.energy;
  }
  return total;
}

}  // namespace drto

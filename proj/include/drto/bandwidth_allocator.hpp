#pragma once

#include "drto/system_model.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace drto {

// Bandwidth subproblem at a fixed location vector x. Grouping the cost terms
// by link turns F into
//
//   F(alpha) = const_term + sum_j coeffs[j] / alpha[active[j]]
//
// where the active set holds every uplink (each ST transmits regardless of
// where its task runs) plus the forwarding link of each cloud-executed task.
// const_term collects the alpha-independent computation terms.
struct AllocProblem {
  std::vector<double> coeffs;       // c_j > 0, one per active link
  std::vector<std::size_t> active;  // link slots in [0, 2N)
  double const_term = 0.0;
  std::size_t n_slots = 0;          // total link slots, = 2N

  void validate() const {
    if (active.empty()) throw std::invalid_argument("AllocProblem: empty active set");
    if (active.size() != coeffs.size())
      throw std::invalid_argument("AllocProblem: coeffs/active size mismatch");
    bool ok = true;
    for (double c : coeffs) ok &= (c > 0.0) & (c <= std::numeric_limits<double>::max());
    if (!ok)
      throw std::invalid_argument("AllocProblem: coefficients must be finite and positive");
    if (!(std::isfinite(const_term) && const_term >= 0.0))
      throw std::invalid_argument("AllocProblem: const_term must be finite and nonnegative");
    bool slots_ok = true;
    for (std::size_t slot : active) slots_ok &= slot < n_slots;
    if (!slots_ok) throw std::invalid_argument("AllocProblem: active slot out of range");
  }
};

inline AllocProblem build_problem(const SystemParams& params, const ChannelState& channel,
                                  const std::vector<int>& x) {
  params.validate();
  channel.validate(params.n_st);
  const std::size_t n = params.n_st;
  if (x.size() != n)
    throw std::invalid_argument("build_problem: x has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(n));

  AllocProblem prob;
  prob.n_slots = 2 * n;
  prob.coeffs.reserve(2 * n);
  prob.active.reserve(2 * n);

  const double l = params.lambda;
  const double bits_over_band = params.task_bits / params.bandwidth_total;
  const double t_cpu_sat = params.intensity * params.task_bits / params.f_sat;
  const double t_cpu_tc = params.intensity * params.task_bits / params.f_tc;

  // Uplinks are always active.
  for (std::size_t st = 0; st < n; ++st) {
    const double snr = params.p_st[st] * channel.h_st[st] / params.noise;
    const double c = (l + (1.0 - l) * params.p_st[st]) * bits_over_band / std::log2(1.0 + snr);
    prob.coeffs.push_back(c);
    prob.active.push_back(st);
  }

  const double snr_fwd = params.p_sat * channel.h_tc / params.noise;
  const double c_fwd = (l + (1.0 - l) * params.p_sat) * bits_over_band / std::log2(1.0 + snr_fwd);

  for (std::size_t st = 0; st < n; ++st) {
    if (x[st] != 0 && x[st] != 1)
      throw std::invalid_argument("build_problem: x entries must be binary");
    if (x[st] == 1) {
      prob.const_term += l * t_cpu_sat + (1.0 - l) * params.p_compute_sat * t_cpu_sat;
    } else {
      prob.coeffs.push_back(c_fwd);
      prob.active.push_back(n + st);
      prob.const_term += l * t_cpu_tc;
    }
  }
  return prob;
}

struct AllocResult {
  std::vector<double> alpha;  // full-length (n_slots); inactive entries are 0
  double cost = 0.0;
};

// Minimizing sum c_j/a_j with sum a_j <= 1 uses the whole budget (the
// objective is decreasing in every a_j), and Cauchy-Schwarz gives
// a_j* = sqrt(c_j) / sum_i sqrt(c_i) with variable cost (sum_i sqrt(c_i))^2.
inline AllocResult solve_closed_form(const AllocProblem& prob) {
  prob.validate();
  const std::size_t m = prob.coeffs.size();
  const double* c = prob.coeffs.data();
  double sum_sqrt = 0.0;
#pragma omp simd reduction(+ : sum_sqrt)
  for (std::size_t j = 0; j < m; ++j) sum_sqrt += std::sqrt(c[j]);

  AllocResult res;
  res.alpha.assign(prob.n_slots, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    res.alpha[prob.active[j]] = std::sqrt(c[j]) / sum_sqrt;
  res.cost = prob.const_term + sum_sqrt * sum_sqrt;
  return res;
}

/// Relative spread of the stationarity quantity c_j / a_j^2 over active links
/// (zero at the exact optimum).
inline double kkt_spread(const AllocProblem& prob, const std::vector<double>& alpha) {
  prob.validate();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t j = 0; j < prob.coeffs.size(); ++j) {
    const double a = alpha.at(prob.active[j]);
    if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
    const double q = prob.coeffs[j] / (a * a);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return (hi - lo) / hi;
}

namespace detail {

// Euclidean projection onto the probability simplex {v >= 0, sum v = 1}.
inline void project_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& vi : v) vi = std::max(vi - theta, 0.0);
}

}  // namespace detail

// Independent numeric route for the same subproblem: projected-gradient
// descent on the simplex with a golden-section line search along the
// projected direction. Production code uses solve_closed_form; this solver
// backs the verification paths (tests, `verify-alloc`).
inline AllocResult solve_numeric_oracle(const AllocProblem& prob, double tol,
                                        std::size_t max_iter = 200000) {
  prob.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("solve_numeric_oracle: tol must be positive");

  const std::size_t m = prob.coeffs.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> a(m, 1.0 / static_cast<double>(m));

  auto value = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!(v[j] > 0.0)) return inf;
      s += prob.coeffs[j] / v[j];
    }
    return s;
  };

  double f = value(a);
  double step = 0.0;
  std::vector<double> trial(m), dir(m), probe(m);
  std::vector<double> recent;  // trailing costs for the non-convergence diagnostic
  std::size_t calm = 0;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double gmax = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      dir[j] = -prob.coeffs[j] / (a[j] * a[j]);  // gradient, reused as scratch
      gmax = std::max(gmax, -dir[j]);
    }
    if (step == 0.0) step = 1.0 / (static_cast<double>(m) * gmax);

    for (std::size_t j = 0; j < m; ++j) trial[j] = a[j] - step * dir[j];
    detail::project_simplex(trial);
    for (std::size_t j = 0; j < m; ++j) dir[j] = trial[j] - a[j];

    // Exact line search over s in [0, 1]; the restriction is convex (and +inf
    // where the segment leaves the positive orthant).
    auto along = [&](double s) {
      for (std::size_t j = 0; j < m; ++j) probe[j] = a[j] + s * dir[j];
      return value(probe);
    };
    const double golden = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double s1 = hi - golden * (hi - lo), s2 = lo + golden * (hi - lo);
    double f1 = along(s1), f2 = along(s2);
    for (int it = 0; it < 80; ++it) {
      if (f1 <= f2) {
        hi = s2;
        s2 = s1;
        f2 = f1;
        s1 = hi - golden * (hi - lo);
        f1 = along(s1);
      } else {
        lo = s1;
        s1 = s2;
        f1 = f2;
        s2 = lo + golden * (hi - lo);
        f2 = along(s2);
      }
    }
    const double s_best = f1 <= f2 ? s1 : s2;
    const double f_new = along(s_best);

    bool settled = false;
    if (f_new < f) {
      const double change = (f - f_new) / std::max(1.0, std::abs(f));
      for (std::size_t j = 0; j < m; ++j) a[j] += s_best * dir[j];
      // Renormalize drift so the iterate stays on the simplex.
      const double sum = std::accumulate(a.begin(), a.end(), 0.0);
      for (double& aj : a) aj /= sum;
      f = f_new;
      settled = change < tol;
      // Adapt the trial step to where the line search keeps landing.
      if (s_best > 0.8)
        step *= 2.0;
      else if (s_best < 0.2)
        step *= 0.5;
    } else {
      // No progress along this segment: either the projection is already a
      // fixed point (optimum) or the step overshot; shrink and retry.
      settled = (f_new - f) / std::max(1.0, std::abs(f)) < tol;
      step *= 0.25;
    }

    recent.push_back(f);
    if (recent.size() > 6) recent.erase(recent.begin());
    if (settled) {
      if (++calm >= 3) {
        AllocResult res;
        res.alpha.assign(prob.n_slots, 0.0);
        for (std::size_t j = 0; j < m; ++j) res.alpha[prob.active[j]] = a[j];
        res.cost = prob.const_term + f;
        return res;
      }
    } else {
      calm = 0;
    }
  }

  std::ostringstream msg;
  msg << "solve_numeric_oracle: no convergence after " << max_iter << " iterations; trailing costs:";
  for (double c : recent) msg << ' ' << c;
  throw std::runtime_error(msg.str());
}

}  // namespace drto

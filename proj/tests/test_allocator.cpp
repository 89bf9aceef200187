#include "drto/bandwidth_allocator.hpp"

#include "drto/rng.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace drto;
using Catch::Approx;

namespace {

AllocProblem raw_problem(std::vector<double> coeffs, double const_term = 0.0) {
  AllocProblem prob;
  prob.n_slots = 2 * coeffs.size();
  for (std::size_t j = 0; j < coeffs.size(); ++j) prob.active.push_back(j);
  prob.coeffs = std::move(coeffs);
  prob.const_term = const_term;
  return prob;
}

AllocProblem random_problem(Rng& rng, std::size_t max_links = 14) {
  const std::size_t m = 1 + rng.index(max_links);
  std::vector<double> coeffs;
  for (std::size_t j = 0; j < m; ++j)
    coeffs.push_back(std::pow(10.0, rng.uniform(-2.0, 2.0)));
  return raw_problem(std::move(coeffs), rng.uniform(0.0, 30.0));
}

}  // namespace

TEST_CASE("build_problem groups cost terms per link") {
  SystemParams params = SystemParams::defaults(1);
  ChannelState ch;
  ch.h_st = {3.0 * params.noise / params.p_st[0]};  // SNR 3 -> log2(4) = 2
  ch.h_tc = 3.0 * params.noise / params.p_sat;

  const AllocProblem prob = build_problem(params, ch, {1});
  REQUIRE(prob.active.size() == 1);
  CHECK(prob.active[0] == 0);
  CHECK(prob.coeffs[0] == Approx(0.5).epsilon(1e-12));
  CHECK(prob.const_term == Approx(15.0).epsilon(1e-12));  // 0.5*20 s + 0.5*10 J

  SECTION("forwarding links join the active set for cloud-executed tasks") {
    const AllocProblem tc = build_problem(params, ch, {0});
    REQUIRE(tc.active.size() == 2);
    CHECK(tc.active[1] == 1);
    // (0.5 + 0.5*3) * 1 / log2(4) = 1
    CHECK(tc.coeffs[1] == Approx(1.0).epsilon(1e-12));
    CHECK(tc.const_term == Approx(0.5 * 8e9 / 3e9).epsilon(1e-12));
  }
}

TEST_CASE("active set size tracks the location vector") {
  SystemParams params = SystemParams::defaults(4);
  ChannelState ch;
  ch.h_st.assign(4, 2e-9);
  ch.h_tc = 5e-9;
  CHECK(build_problem(params, ch, {1, 1, 1, 1}).active.size() == 4);
  CHECK(build_problem(params, ch, {0, 0, 0, 0}).active.size() == 8);
  CHECK(build_problem(params, ch, {1, 0, 1, 0}).active.size() == 6);
}

TEST_CASE("closed form solves the toy instance exactly") {
  const AllocProblem prob = raw_problem({1.0, 4.0});
  const AllocResult res = solve_closed_form(prob);
  CHECK(res.alpha[0] == Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(res.alpha[1] == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(res.cost == Approx(9.0).epsilon(1e-14));

  SECTION("grid search confirms the optimum") {
    const double grid = test::grid_alloc_cost({1.0, 4.0}, 1e-4);
    CHECK(grid >= res.cost - 1e-12);
    CHECK(grid == Approx(res.cost).epsilon(1e-5));
  }

  SECTION("equal coefficients split evenly") {
    const AllocResult even = solve_closed_form(raw_problem({0.7, 0.7}));
    CHECK(even.alpha[0] == Approx(0.5).epsilon(1e-14));
    CHECK(even.alpha[1] == Approx(0.5).epsilon(1e-14));
  }

  SECTION("a single active link takes the whole budget") {
    const AllocResult solo = solve_closed_form(raw_problem({2.5}));
    CHECK(solo.alpha[0] == 1.0);
    CHECK(solo.cost == Approx(2.5).epsilon(1e-14));
  }
}

TEST_CASE("numeric oracle agrees with the closed form") {
  SECTION("toy instance at tight tolerance") {
    const AllocResult res = solve_numeric_oracle(raw_problem({1.0, 4.0}), 1e-10);
    CHECK(std::abs(res.cost - 9.0) <= 9.0 * 1e-6);
  }

  SECTION("single link regardless of tolerance") {
    for (double tol : {1e-3, 1e-8, 1e-12}) {
      const AllocResult res = solve_numeric_oracle(raw_problem({3.3}), tol);
      CHECK(res.alpha[0] == Approx(1.0).epsilon(1e-9));
    }
  }

  SECTION("property sweep over random instances") {
    Rng rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const AllocProblem prob = random_problem(rng);
      const double closed = solve_closed_form(prob).cost;
      const double numeric = solve_numeric_oracle(prob, 1e-10).cost;
      worst = std::max(worst, std::abs(numeric - closed) / closed);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("optimality certificates of the closed form") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const AllocProblem prob = random_problem(rng);
    const AllocResult res = solve_closed_form(prob);

    // stationarity: c_j / a_j^2 constant over the active set
    CHECK(kkt_spread(prob, res.alpha) < 1e-6);

    // feasibility: full budget on the active set, zeros elsewhere
    double active_sum = 0.0;
    for (std::size_t slot : prob.active) active_sum += res.alpha[slot];
    CHECK(active_sum == Approx(1.0).epsilon(1e-12));
    double total = std::accumulate(res.alpha.begin(), res.alpha.end(), 0.0);
    CHECK(total == Approx(active_sum).epsilon(1e-12));

    // proportionality to sqrt(c)
    double scale = res.alpha[prob.active[0]] / std::sqrt(prob.coeffs[0]);
    for (std::size_t j = 0; j < prob.coeffs.size(); ++j)
      CHECK(res.alpha[prob.active[j]] ==
            Approx(scale * std::sqrt(prob.coeffs[j])).epsilon(1e-9));
  }
}

TEST_CASE("no feasible perturbation beats the closed form") {
  Rng rng(555);
  const AllocProblem prob = random_problem(rng, 8);
  const AllocResult res = solve_closed_form(prob);
  auto objective = [&](const std::vector<double>& frac) {
    double s = 0.0;
    for (std::size_t j = 0; j < prob.coeffs.size(); ++j) s += prob.coeffs[j] / frac[j];
    return prob.const_term + s;
  };
  for (int trial = 0; trial < 100; ++trial) {
    // random point on the simplex
    std::vector<double> frac(prob.coeffs.size());
    double sum = 0.0;
    for (double& f : frac) {
      f = rng.exponential();
      sum += f;
    }
    for (double& f : frac) f /= sum;
    CHECK(objective(frac) >= res.cost - 1e-9 * res.cost);
  }
}

TEST_CASE("solver cost matches the system-model evaluation") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(6);
    SystemParams params = SystemParams::defaults(n);
    ChannelState ch;
    for (std::size_t i = 0; i < n; ++i) ch.h_st.push_back(rng.uniform(1e-10, 1e-8));
    ch.h_tc = rng.uniform(1e-10, 1e-8);
    std::vector<int> x;
    for (std::size_t i = 0; i < n; ++i) x.push_back(static_cast<int>(rng.index(2)));

    const AllocProblem prob = build_problem(params, ch, x);
    const AllocResult res = solve_closed_form(prob);
    CHECK(res.cost == Approx(eval_cost(params, ch, x, res.alpha)).epsilon(1e-9));
  }
}

TEST_CASE("degenerate and invalid problems are rejected") {
  AllocProblem empty;
  empty.n_slots = 2;
  CHECK_THROWS_AS(solve_closed_form(empty), std::invalid_argument);
  CHECK_THROWS_AS(solve_numeric_oracle(empty, 1e-8), std::invalid_argument);

  AllocProblem bad = raw_problem({1.0, -2.0});
  CHECK_THROWS_AS(solve_closed_form(bad), std::invalid_argument);
  CHECK_THROWS_AS(solve_numeric_oracle(raw_problem({1.0}), 0.0), std::invalid_argument);

  SystemParams params = SystemParams::defaults(2);
  ChannelState ch;
  ch.h_st = {1e-9, 1e-9};
  ch.h_tc = 1e-9;
  CHECK_THROWS_AS(build_problem(params, ch, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(build_problem(params, ch, {1}), std::invalid_argument);
}

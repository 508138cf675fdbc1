// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "specagent/simulator.hpp"

using namespace specagent::sim;

namespace {

SimParams constant_params(double p) {
  SimParams s;
  s.r_base = LatencyDist::constant(10000);
  s.r_slm = LatencyDist::constant(3000);
  s.g_llm = LatencyDist::constant(2000);
  s.v = LatencyDist::constant(500);
  s.e_tool = LatencyDist::constant(2000);
  s.accept_prob = p;
  s.steps = 10000;
  s.seed = 42;
  return s;
}

SimParams exponential_params(double p, std::size_t steps) {
  SimParams s;
  s.r_base = LatencyDist::exponential(10000);
  s.r_slm = LatencyDist::exponential(3000);
  s.g_llm = LatencyDist::exponential(2000);
  s.v = LatencyDist::exponential(500);
  s.e_tool = LatencyDist::exponential(2000);
  s.accept_prob = p;
  s.steps = steps;
  s.seed = 5;
  return s;
}

// Straight per-step formula with the standard library's own distributions.
double monte_carlo_mean_step(double p, std::size_t n, bool prefetch) {
  std::mt19937 rng(12345);
  std::exponential_distribution<double> base(1.0 / 10000), slm(1.0 / 3000), llm(1.0 / 2000), ver(1.0 / 500),
      tool(1.0 / 2000);
  std::bernoulli_distribution acc(p);
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double draft = std::max(slm(rng), llm(rng));
    const double v = ver(rng), e = tool(rng), r = base(rng);
    if (acc(rng)) sum += draft + (prefetch ? std::max(v, e) : v + e);
    else sum += draft + v + r + e;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("constant latencies reproduce the closed form") {
  const auto r = simulate(constant_params(0.8));
  CHECK(r.mean_step_ms == 7500.0);
  CHECK(r.accepted_steps == 8000);
  CHECK(r.baseline_total_ms == 12000.0 * 10000);
  CHECK(r.speedup == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(expected_step_latency(constant_params(0.8)) == doctest::Approx(7500.0).epsilon(1e-12));
  CHECK(expected_baseline_step_latency(constant_params(0.8)) == 12000.0);
  const auto csv = to_csv(r);
  CHECK(csv.find("mean_step_ms,7500.000") != std::string::npos);
  CHECK(csv.find("speedup,1.600") != std::string::npos);
}

TEST_CASE("analytic collapse at the extremes") {
  CHECK(simulate(constant_params(1.0)).mean_step_ms == 3000 + 500 + 2000);
  CHECK(simulate(constant_params(0.0)).mean_step_ms == 3000 + 500 + 10000 + 2000);
  auto pf = constant_params(0.8);
  pf.prefetch = true;
  CHECK(expected_step_latency(pf) == doctest::Approx(7100.0).epsilon(1e-12));
  CHECK(simulate(pf).mean_step_ms == doctest::Approx(7100.0).epsilon(1e-12));
}

TEST_CASE("closed form refuses random latencies") {
  CHECK_THROWS_AS(expected_step_latency(exponential_params(0.5, 10)), NonConstantDistribution);
  CHECK_THROWS_AS(expected_baseline_step_latency(exponential_params(0.5, 10)), NonConstantDistribution);
}

TEST_CASE("validation") {
  auto p = constant_params(0.5);
  p.accept_prob = 1.5;
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);
  p = constant_params(0.5);
  p.steps = 0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = constant_params(0.5);
  p.v = LatencyDist::constant(-1);
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("same seed, same report") {
  const auto a = simulate(exponential_params(0.7, 2000));
  const auto b = simulate(exponential_params(0.7, 2000));
  CHECK(a == b);
  auto other = exponential_params(0.7, 2000);
  other.seed = 6;
  CHECK(simulate(other).total_ms != a.total_ms);
  auto bern = exponential_params(0.7, 2000);
  bern.sampling = AcceptanceSampling::Bernoulli;
  CHECK(simulate(bern) == simulate(bern));
}

TEST_CASE("exponential latencies agree with an independent Monte Carlo estimate") {
  for (bool prefetch : {false, true}) {
    auto p = exponential_params(0.8, 100000);
    p.prefetch = prefetch;
    const double sim = simulate(p).mean_step_ms;
    const double oracle = monte_carlo_mean_step(0.8, 1000000, prefetch);
    CHECK(std::abs(sim - oracle) / oracle < 0.01);
  }
  // E[max] of two exponentials is a + b - ab/(a+b).
  const double draft = 3000 + 2000 - 3000.0 * 2000 / 5000;
  CHECK(std::abs(monte_carlo_mean_step(0.8, 1000000, false) - (draft + 500 + 2000 + 0.2 * 10000)) / 8300 < 0.01);
}

TEST_CASE("speedup rises with the acceptance probability") {
  for (bool exponential : {false, true}) {
    double prev = 0;
    for (int i = 0; i <= 10; ++i) {
      const double p = i / 10.0;
      const auto r = simulate(exponential ? exponential_params(p, 20000) : constant_params(p));
      CHECK(r.speedup >= prev);
      prev = r.speedup;
    }
  }
}

TEST_CASE("event queue orders by time then insertion") {
  EventQueue q;
  std::vector<int> seen;
  q.schedule_at(5, [&] { seen.push_back(2); });
  q.schedule_at(1, [&] {
    seen.push_back(1);
    q.schedule_in(4, [&] { seen.push_back(3); });
  });
  q.run();
  CHECK(seen == std::vector<int>{1, 2, 3});
  CHECK(q.now() == 5);
}

TEST_CASE("sampler draws") {
  Sampler s(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform01();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(s.below(7) < 7);
  }
  CHECK(s.draw(LatencyDist::constant(3)) == 3.0);
  CHECK(s.draw(LatencyDist::exponential(3)) >= 0.0);
}

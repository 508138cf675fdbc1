// SPDX-License-Identifier: Apache-2.0
#include "specagent/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

namespace specagent::sim {

double Sampler::uniform01() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Sampler::below(std::uint64_t bound) noexcept {
  // Rejection sampling keeps the result unbiased and platform independent.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Sampler::draw(const LatencyDist& dist) noexcept {
  const double u = uniform01();
  if (dist.family == LatencyDist::Family::Constant) return dist.mean;
  return -dist.mean * std::log1p(-u);
}

void EventQueue::schedule_at(double time, Callback fn) {
  events_.push(Event{std::max(time, now_), seq_++, std::move(fn)});
}

void EventQueue::run() {
  while (!events_.empty()) {
    Event ev = events_.top();
    events_.pop();
    now_ = ev.time;
    ev.fn();
  }
}

void validate(const SimParams& p) {
  for (const auto* d : {&p.r_base, &p.r_slm, &p.g_llm, &p.v, &p.e_tool}) {
    if (!(d->mean >= 0.0) || !std::isfinite(d->mean)) throw std::invalid_argument("latency means must be finite and >= 0");
  }
  if (!(p.accept_prob >= 0.0 && p.accept_prob <= 1.0)) throw std::invalid_argument("accept_prob must be in [0, 1]");
  if (p.steps == 0) throw std::invalid_argument("steps must be >= 1");
}

namespace {

void require_constant(const SimParams& p) {
  for (const auto* d : {&p.r_base, &p.r_slm, &p.g_llm, &p.v, &p.e_tool}) {
    if (d->family != LatencyDist::Family::Constant) {
      throw NonConstantDistribution("closed-form expectation needs constant latencies");
    }
  }
}

struct StepDraws {
  double r_slm, g_llm, v, e_tool, r_base;
  double base_r, base_e;
};

/// Accepted-step mask. Quota: the first round(p * n) entries of a seeded
/// permutation, so the set only grows with p.
std::vector<bool> acceptance_mask(const SimParams& p, std::vector<double> const& coins) {
  const std::size_t n = p.steps;
  std::vector<bool> mask(n, false);
  if (p.sampling == AcceptanceSampling::Bernoulli) {
    for (std::size_t i = 0; i < n; ++i) mask[i] = coins[i] < p.accept_prob;
    return mask;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Sampler shuffle(p.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
  const auto quota = static_cast<std::size_t>(std::llround(p.accept_prob * static_cast<double>(n)));
  for (std::size_t i = 0; i < std::min(quota, n); ++i) mask[order[i]] = true;
  return mask;
}

}  // namespace

double expected_step_latency(const SimParams& p) {
  require_constant(p);
  const double draft = std::max(p.r_slm.mean, p.g_llm.mean);
  const double accept = p.prefetch ? draft + std::max(p.v.mean, p.e_tool.mean) : draft + p.v.mean + p.e_tool.mean;
  const double reject = draft + p.v.mean + p.r_base.mean + p.e_tool.mean;
  return p.accept_prob * accept + (1.0 - p.accept_prob) * reject;
}

double expected_baseline_step_latency(const SimParams& p) {
  require_constant(p);
  return p.r_base.mean + p.e_tool.mean;
}

SimReport simulate(const SimParams& p) {
  validate(p);
  Sampler rng(p.seed);
  std::vector<StepDraws> draws(p.steps);
  std::vector<double> coins(p.steps);
  // Every draw is consumed on every step so runs differing only in
  // accept_prob see the same latencies.
  for (std::size_t i = 0; i < p.steps; ++i) {
    auto& d = draws[i];
    d.r_slm = rng.draw(p.r_slm);
    d.g_llm = rng.draw(p.g_llm);
    d.v = rng.draw(p.v);
    d.e_tool = rng.draw(p.e_tool);
    d.r_base = rng.draw(p.r_base);
    d.base_r = rng.draw(p.r_base);
    d.base_e = rng.draw(p.e_tool);
    coins[i] = rng.uniform01();
  }
  const auto accepted = acceptance_mask(p, coins);

  SimReport report;
  report.step_ms.reserve(p.steps);
  report.baseline_step_ms.reserve(p.steps);

  EventQueue q;
  std::size_t i = 0;
  double step_start = 0.0;
  std::function<void()> start_step;

  auto finish_step = [&] {
    report.step_ms.push_back(q.now() - step_start);
    ++i;
    if (i < p.steps) q.schedule_in(0.0, start_step);
  };

  start_step = [&] {
    step_start = q.now();
    const StepDraws* d = &draws[i];
    const bool ok = accepted[i];
    if (ok) ++report.accepted_steps;
    auto joined = std::make_shared<int>(0);
    auto after_drafts = [&, d, ok, joined] {
      if (++*joined < 2) return;
      if (ok && p.prefetch) {
        auto pending = std::make_shared<int>(0);
        auto done = [&, pending] {
          if (++*pending == 2) finish_step();
        };
        q.schedule_in(d->v, done);
        q.schedule_in(d->e_tool, done);
        return;
      }
      q.schedule_in(d->v, [&, d, ok] {
        const double tail = ok ? d->e_tool : d->r_base + d->e_tool;
        q.schedule_in(tail, finish_step);
      });
    };
    q.schedule_in(d->r_slm, after_drafts);
    q.schedule_in(d->g_llm, after_drafts);
  };

  q.schedule_at(0.0, start_step);
  q.run();

  for (const auto& d : draws) report.baseline_step_ms.push_back(d.base_r + d.base_e);

  report.total_ms = std::accumulate(report.step_ms.begin(), report.step_ms.end(), 0.0);
  report.baseline_total_ms = std::accumulate(report.baseline_step_ms.begin(), report.baseline_step_ms.end(), 0.0);
  report.mean_step_ms = report.total_ms / static_cast<double>(p.steps);
  report.speedup = report.total_ms > 0.0 ? report.baseline_total_ms / report.total_ms : 0.0;
  return report;
}

std::string to_csv(const SimReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "metric,value\nsteps,%zu\naccepted_steps,%zu\nmean_step_ms,%.3f\ntotal_ms,%.3f\n"
                "baseline_total_ms,%.3f\nspeedup,%.3f\n",
                r.step_ms.size(), r.accepted_steps, r.mean_step_ms, r.total_ms, r.baseline_total_ms, r.speedup);
  return buf;
}

}  // namespace specagent::sim

// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Discrete-event latency model of the draft/verify pipeline.
 *
 * Per step: both drafts start together and join at max(r_slm, g_llm); the
 * critic pass takes v; an accepted step then runs its tool (e_tool), a
 * rejected step first regenerates with full reasoning (r_base). With prefetch
 * the accepted path overlaps verification and the tool. The baseline runs
 * r_base + e_tool per step.
 *
 * Acceptance is drawn either as independent Bernoulli trials or, by default,
 * as an exact quota of round(accept_prob * steps) accepted steps at seeded
 * random positions. The quota makes constant-latency runs reproduce the
 * closed-form expectation exactly, and the accepted sets are nested in
 * accept_prob for a fixed seed.
 */

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace specagent::sim {

class NonConstantDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LatencyDist {
  enum class Family { Constant, Exponential };
  Family family = Family::Constant;
  double mean = 0.0;

  static LatencyDist constant(double mean) { return {Family::Constant, mean}; }
  static LatencyDist exponential(double mean) { return {Family::Exponential, mean}; }
  bool operator==(const LatencyDist&) const = default;
};

enum class AcceptanceSampling { Quota, Bernoulli };

struct SimParams {
  LatencyDist r_base;
  LatencyDist r_slm;
  LatencyDist g_llm;
  LatencyDist v;
  LatencyDist e_tool;
  double accept_prob = 1.0;
  std::size_t steps = 1;
  std::uint64_t seed = 0;
  bool prefetch = false;
  AcceptanceSampling sampling = AcceptanceSampling::Quota;
};

/// Throws std::invalid_argument for negative means, accept_prob outside
/// [0, 1] or zero steps.
void validate(const SimParams& params);

struct SimReport {
  double mean_step_ms = 0.0;
  double total_ms = 0.0;
  double baseline_total_ms = 0.0;
  double speedup = 0.0;
  std::size_t accepted_steps = 0;
  std::vector<double> step_ms;
  std::vector<double> baseline_step_ms;

  bool operator==(const SimReport&) const = default;
};

/// Closed-form expected step latency. Throws NonConstantDistribution.
double expected_step_latency(const SimParams& params);
double expected_baseline_step_latency(const SimParams& params);

SimReport simulate(const SimParams& params);

/// Summary table: metric,value rows.
std::string to_csv(const SimReport& report);

/// Portable draws from mt19937_64 (no implementation-defined distributions).
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}
  double uniform01() noexcept;  // [0, 1)
  std::uint64_t below(std::uint64_t bound) noexcept;  // [0, bound)
  double draw(const LatencyDist& dist) noexcept;

 private:
  std::mt19937_64 engine_;
};

/// Minimal event loop: callbacks ordered by (time, insertion order).
class EventQueue {
 public:
  using Callback = std::function<void()>;

  void schedule_at(double time, Callback fn);
  void schedule_in(double delay, Callback fn) { schedule_at(now_ + delay, std::move(fn)); }
  void run();
  double now() const noexcept { return now_; }

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    Callback fn;
    bool operator>(const Event& o) const noexcept { return time != o.time ? time > o.time : seq > o.seq; }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
};

}  // namespace specagent::sim

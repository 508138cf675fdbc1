// SPDX-License-Identifier: Apache-2.0
#pragma once

// Random valid trajectories for round-trip tests.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "specagent/core.hpp"

namespace testsupport {

using namespace specagent;

class TrajectoryGenerator {
 public:
  explicit TrajectoryGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string text(std::size_t max_len = 24) {
    static const std::vector<std::string> units = {"a", "b", "c", " ", "X", "Z", "\"", "\\", "\n", "\t", "{",
                                                   "}", "=", ",", ".", ":", "/", "\xC3\xA9", "\xE2\x82\xAC"};
    std::string s;
    const auto n = pick(max_len);
    for (std::size_t i = 0; i < n; ++i) s += units[pick(units.size() - 1)];
    return s;
  }

  std::string nonempty(std::size_t max_len = 24) {
    auto s = text(max_len);
    return s.empty() ? "x" : s;
  }

  std::vector<double> logprobs(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = -std::uniform_real_distribution<double>(0.0, 8.0)(rng_);
    return v;
  }

  ReasoningTrace reasoning() {
    ReasoningTrace r;
    r.text = nonempty(60);
    r.token_count = 1 + pick(30);
    if (pick(1)) r.token_logprobs = logprobs(r.token_count);
    return r;
  }

  Action action(bool allow_finish) {
    switch (pick(allow_finish ? 3 : 2)) {
      case 0: return Action::search(nonempty());
      case 1: return Action::visit("https://h" + std::to_string(pick(99)) + ".example/" + text(8), nonempty());
      case 2: return Action::other_tool(nonempty(6), {{text(4), text(6)}, {nonempty(3), text(3)}});
      default: return Action::finish(nonempty());
    }
  }

  Verdict verdict(bool accept) {
    Verdict v;
    switch (pick(2)) {
      case 0: {
        v.source = VerdictSource::Critic;
        v.p_acc = std::uniform_real_distribution<double>(1e-6, 1.0)(rng_);
        v.p_rej = std::uniform_real_distribution<double>(1e-6, 1.0)(rng_);
        v.score = std::log(v.p_acc) - std::log(v.p_rej);
        v.threshold = accept ? v.score - 0.5 : v.score + 0.5;
        break;
      }
      case 1:
        v.source = VerdictSource::Match;
        v.score = -static_cast<double>(pick(5));
        v.threshold = accept ? v.score : v.score + 1;
        break;
      default:
        v.source = VerdictSource::Fixed;
        v.score = accept ? 1 : -1;
        v.threshold = 0;
    }
    v.accepted = accept;
    return v;
  }

  Step step(bool last) {
    Step s;
    const auto prov = pick(2);
    s.provenance = prov == 0 ? Provenance::System2Draft : prov == 1 ? Provenance::System1Draft : Provenance::Fallback;
    s.verdict = verdict(s.provenance != Provenance::Fallback);
    if (s.provenance != Provenance::System1Draft && pick(3) > 0) s.reasoning = reasoning();
    s.action = action(last);
    s.action_logprobs = logprobs(pick(6));
    s.observation.kind = static_cast<ObservationKind>(pick(4));
    s.observation.payload = text(80);
    s.observation.latency = Millis{static_cast<long>(pick(3000))};
    s.timing.draft_slm_ms = Millis{static_cast<long>(pick(3000))};
    s.timing.draft_llm_ms = Millis{static_cast<long>(pick(3000))};
    s.timing.verify_ms = Millis{static_cast<long>(pick(500))};
    s.timing.tool_ms = Millis{static_cast<long>(pick(2000))};
    s.timing.fallback_reasoning_ms = Millis{static_cast<long>(pick(9000))};
    s.timing.wall_step_ms = s.timing.tool_ms + Millis{static_cast<long>(pick(10000))};
    for (int d = 0; d < 2; ++d) {
      DraftRecord r;
      r.source = d == 0 ? DraftSource::System2 : DraftSource::System1;
      r.latency = Millis{static_cast<long>(pick(3000))};
      if (pick(4) == 0) {
        r.error = nonempty();
      } else {
        r.action = action(true);
        r.action_logprobs = logprobs(pick(5));
        if (d == 0 && pick(1)) r.reasoning = reasoning();
      }
      s.drafts.push_back(std::move(r));
    }
    s.prefetch_discarded = pick(1) == 1;
    return s;
  }

  Trajectory trajectory() {
    Trajectory t;
    t.task_id = "task-" + std::to_string(pick(1000));
    t.question = nonempty(40);
    t.config_digest = "0123456789abcdef";
    const auto n = pick(8);
    for (std::size_t i = 0; i < n; ++i) t.steps.push_back(step(i + 1 == n));
    if (!t.steps.empty() && t.steps.back().action.kind() == ActionKind::Finish) {
      t.final_answer = t.steps.back().action.as<FinishAction>()->answer;
    }
    return t;
  }

 private:
  std::size_t pick(std::size_t max_inclusive) {
    return std::uniform_int_distribution<std::size_t>(0, max_inclusive)(rng_);
  }

  std::mt19937_64 rng_;
};

}  // namespace testsupport

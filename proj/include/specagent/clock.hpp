// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>

#include "specagent/core.hpp"

namespace specagent {

/**
 * Monotonic time source for step timing.
 *
 * Operations report their own latency; the orchestrator calls account() with
 * the critical-path duration of each phase. A real clock ignores account()
 * because the time already elapsed, while ManualClock advances by exactly that
 * amount. This keeps scripted runs deterministic without sleeping.
 */
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Millis now() const = 0;
  virtual void account(Millis elapsed) = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

  Millis now() const override {
    return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - origin_);
  }
  void account(Millis) override {}

 private:
  std::chrono::steady_clock::time_point origin_;
};

class ManualClock final : public Clock {
 public:
  Millis now() const override { return Millis{now_.load()}; }
  void account(Millis elapsed) override { now_ += elapsed.count(); }

 private:
  std::atomic<Millis::rep> now_{0};
};

/// Measures a real operation's duration.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  Millis elapsed() const {
    return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start_);
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace specagent

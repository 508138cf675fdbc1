// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * The agent loop under draft/verify.
 *
 * Every step drafts with both pathways, selects one draft, verifies it, and
 * either executes the draft's action or falls back to a full-reasoning
 * generation from the large model. Under the semantic policy the large model
 * only reasons on fallback steps; that is what takes its reasoning off the
 * critical path.
 *
 * run_baseline() is the comparator: the large model reasons at every step.
 */

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specagent/backends.hpp"
#include "specagent/clock.hpp"
#include "specagent/context.hpp"
#include "specagent/core.hpp"
#include "specagent/speculation.hpp"
#include "specagent/tools.hpp"
#include "specagent/verification.hpp"

namespace specagent {

struct VerifierPolicy {
  enum class Kind { Semantic, Exact, EditDistance, AlwaysAccept, AlwaysReject };
  Kind kind = Kind::Semantic;
  std::size_t limit = 0;  // EditDistance only

  bool operator==(const VerifierPolicy&) const = default;
};

/// "semantic", "exact", "edit_distance:<n>", "always_accept", "always_reject".
std::string to_string(const VerifierPolicy& policy);
VerifierPolicy parse_verifier_policy(std::string_view text);

struct RunConfig {
  double tau = 0.0;
  std::size_t tau_think = 512;
  std::size_t max_steps = 30;
  VerifierPolicy verifier_policy;
  bool prefetch = false;
  std::uint64_t seed = 0;
  std::size_t window = 8;
  std::size_t observation_cap = 8192;
  std::size_t top_k = 20;
  double epsilon = kDefaultEpsilon;
  VariantSets variants;
  DecodingParams slm_params;
  DecodingParams llm_params;
  std::string instructions = kDefaultAgentInstructions;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate(const RunConfig& config);

/// Canonical JSON of every field; stable across runs.
std::string run_config_json(const RunConfig& config);
/// Applies the fields present in a JSON object onto `base`; unknown fields
/// are rejected.
RunConfig run_config_from_json(std::string_view json_text, RunConfig base = {});

/// 16 hex digits of FNV-1a over run_config_json().
std::string config_digest(const RunConfig& config);

enum class RunStatus { Finished, StepBudgetExhausted, BackendUnavailable };

std::string_view to_string(RunStatus status) noexcept;

struct RunReport {
  Trajectory trajectory;
  std::size_t accept_count = 0;
  std::size_t fallback_count = 0;
  std::size_t step_count = 0;
  double intervention_rate = 0.0;
  Millis wall_ms{0};
  RunStatus status = RunStatus::Finished;
  std::optional<std::string> error;
};

/// fallback / steps, 0 when there are no steps.
double intervention_rate(std::size_t fallback_count, std::size_t step_count) noexcept;

class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loop state between steps.
struct AgentState {
  AgentContext context;
  std::size_t step_index = 0;
  bool finished = false;
};

class Orchestrator {
 public:
  Orchestrator(Backends backends, std::shared_ptr<ToolExecutor> tools, Clock& clock, RunConfig config);

  RunReport run_task(const std::string& question, const std::string& task_id = "task");
  RunReport run_baseline(const std::string& question, const std::string& task_id = "task");

  /// One draft/verify/execute step. Appends to the state's context.
  /// Throws BackendUnavailable when the fallback generation fails.
  Step step(AgentState& state);

  /// One full-reasoning step from the large model, no speculation.
  Step baseline_step(AgentState& state);

  const RunConfig& config() const noexcept { return config_; }

 private:
  using StepFn = Step (Orchestrator::*)(AgentState&);
  RunReport run(const std::string& question, const std::string& task_id, StepFn fn);

  struct Regenerated {
    ParsedOutput output;
    Millis latency{0};
  };
  /// Large model, explicit reasoning, pre-step context.
  Regenerated regenerate(const std::string& prompt, std::size_t step);

  void append_to_context(AgentState& state, const Step& step) const;
  Observation run_tool(const Action& action, Step& step);

  Backends backends_;
  std::shared_ptr<ToolExecutor> tools_;
  Clock& clock_;
  RunConfig config_;
  Drafter drafter_;
  std::string digest_;
};

/// Runs `count` independent tasks with at most `parallel` in flight. Results
/// keep input order.
std::vector<RunReport> run_tasks_parallel(std::size_t count, std::size_t parallel,
                                          const std::function<RunReport(std::size_t)>& run_one);

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Domain types shared by every stage of the speculate/verify loop.
 *
 * An Action is the unit of speculation: one of Search, Visit, Finish or an
 * opaque OtherTool envelope. Actions are validated on construction and have a
 * canonical one-line rendering that matching verifiers, caches and prompts
 * use as their equality surface:
 *
 *   search{query="a b"}
 *   visit{url="u",instruction="i"}
 *   finish{answer="42"}
 *   tool{name="calc",args={"a"="1","b"="2"}}
 *
 * Values are double-quoted; backslash, quote and control characters are
 * escaped so the rendering stays on one line and is injective.
 */

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace specagent {

using Millis = std::chrono::milliseconds;

/// Thrown when a constructed value violates a documented invariant.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ============================================================================
// Actions
// ============================================================================

enum class ActionKind { Search, Visit, Finish, OtherTool };

struct SearchAction {
  std::string query;
  bool operator==(const SearchAction&) const = default;
};

struct VisitAction {
  std::string url;
  std::string instruction;
  bool operator==(const VisitAction&) const = default;
};

struct FinishAction {
  std::string answer;
  bool operator==(const FinishAction&) const = default;
};

struct OtherToolAction {
  std::string name;
  std::map<std::string, std::string> args;
  bool operator==(const OtherToolAction&) const = default;
};

class Action {
 public:
  using Variant = std::variant<SearchAction, VisitAction, FinishAction, OtherToolAction>;

  // Factories validate; there is no way to build an Action with an empty
  // required field.
  static Action search(std::string query);
  static Action visit(std::string url, std::string instruction);
  static Action finish(std::string answer);
  static Action other_tool(std::string name, std::map<std::string, std::string> args = {});

  ActionKind kind() const noexcept { return static_cast<ActionKind>(value_.index()); }
  const Variant& value() const noexcept { return value_; }

  template <typename T>
  const T* as() const noexcept {
    return std::get_if<T>(&value_);
  }

  bool operator==(const Action&) const = default;

 private:
  explicit Action(Variant v) : value_(std::move(v)) {}
  Variant value_;
};

ActionKind action_kind(const Action& action) noexcept;
std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> parse_action_kind(std::string_view text) noexcept;

/// Canonical one-line rendering; render_action(a) == render_action(b) iff a == b.
std::string render_action(const Action& action);

/// Inverse of render_action. Throws std::invalid_argument on malformed input.
Action parse_rendered_action(std::string_view text);

// ============================================================================
// Reasoning, observations, verdicts
// ============================================================================

struct ReasoningTrace {
  std::string text;
  std::size_t token_count = 0;
  std::vector<double> token_logprobs;  // natural log; may be empty

  bool operator==(const ReasoningTrace&) const = default;
};

enum class ObservationKind { SearchResults, Extraction, AnswerEcho, ToolOutput, ToolError };

std::string_view to_string(ObservationKind kind) noexcept;
std::optional<ObservationKind> parse_observation_kind(std::string_view text) noexcept;

struct Observation {
  ObservationKind kind = ObservationKind::ToolOutput;
  std::string payload;
  Millis latency{0};

  bool operator==(const Observation&) const = default;
};

/// Where a verdict came from. Only Critic verdicts carry meaningful
/// probabilities; the others record the decision of a non-probabilistic policy.
enum class VerdictSource { Critic, Match, Fixed, NoDraft };

std::string_view to_string(VerdictSource source) noexcept;
std::optional<VerdictSource> parse_verdict_source(std::string_view text) noexcept;

struct Verdict {
  VerdictSource source = VerdictSource::Critic;
  double p_acc = 1.0;
  double p_rej = 1.0;
  double score = 0.0;
  bool accepted = false;
  double threshold = 0.0;

  bool operator==(const Verdict&) const = default;
};

// ============================================================================
// Steps and trajectories
// ============================================================================

enum class Provenance { System2Draft, System1Draft, Fallback };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view text) noexcept;

enum class DraftSource { System2, System1 };

std::string_view to_string(DraftSource s) noexcept;
std::optional<DraftSource> parse_draft_source(std::string_view text) noexcept;

struct TimingBreakdown {
  Millis draft_slm_ms{0};
  Millis draft_llm_ms{0};
  Millis verify_ms{0};
  Millis tool_ms{0};
  Millis fallback_reasoning_ms{0};
  Millis wall_step_ms{0};

  bool operator==(const TimingBreakdown&) const = default;
};

/// What one drafting pathway produced at a step, kept for offline analysis
/// whether or not it was selected.
struct DraftRecord {
  DraftSource source = DraftSource::System2;
  std::optional<Action> action;
  std::optional<ReasoningTrace> reasoning;
  std::vector<double> action_logprobs;
  Millis latency{0};
  std::optional<std::string> error;

  bool operator==(const DraftRecord&) const = default;
};

struct Step {
  std::optional<ReasoningTrace> reasoning;
  Action action = Action::finish("?");
  std::vector<double> action_logprobs;
  Observation observation;
  Provenance provenance = Provenance::Fallback;
  std::optional<Verdict> verdict;
  TimingBreakdown timing;
  std::vector<DraftRecord> drafts;
  bool prefetch_discarded = false;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::string task_id;
  std::string question;
  std::vector<Step> steps;
  std::optional<std::string> final_answer;
  std::string config_digest;

  bool operator==(const Trajectory&) const = default;
};

/// Throws InvariantViolation on the first broken invariant.
void validate(const TimingBreakdown& timing);
void validate(const ReasoningTrace& trace);
void validate(const Verdict& verdict);
void validate(const Step& step);
void validate(const Trajectory& trajectory);

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Heterogeneous drafting.
 *
 * Each step issues two drafts concurrently: a System 2 draft from the small
 * model with explicit reasoning, and a System 1 draft from the large model
 * with reasoning suppressed. select_draft() keeps the small-model draft for
 * Search (and for Finish / other tools), hands Visit to the large-model draft,
 * except when the small model reasoned for more than tau_think tokens, in
 * which case its full (reasoning, action) draft is kept.
 */

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "specagent/backends.hpp"
#include "specagent/clock.hpp"
#include "specagent/core.hpp"

namespace specagent {

class ActionParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BothDraftsFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model generation split into reasoning and a parsed action.
struct ParsedOutput {
  std::optional<ReasoningTrace> reasoning;
  Action action = Action::finish("?");
  std::vector<double> action_logprobs;
};

/**
 * Parses a generation under the action grammar:
 *
 *   [<think> reasoning </think>] action
 *
 * where action is one of
 *   <tool_call>{"name": "search", "arguments": {"query": "..."}}</tool_call>
 *   <tool_call>{"name": "visit", "arguments": {"url": "...", "instruction": "..."}}</tool_call>
 *   <tool_call>{"name": "finish", "arguments": {"answer": "..."}}</tool_call>
 *   <tool_call>{"name": "<other>", "arguments": {...}}</tool_call>
 *   <answer>...</answer>
 *   a canonical rendering such as search{query="..."} on its own line.
 *
 * Tokens are attributed to the reasoning when they start before the end of
 * the </think> tag. Without a token list, reasoning length falls back to a
 * whitespace word count. Throws ActionParseError.
 */
ParsedOutput parse_model_output(const BackendResponse& response);

struct Draft {
  DraftSource source = DraftSource::System2;
  std::optional<ReasoningTrace> reasoning;  // always empty for System1
  Action action = Action::finish("?");
  std::vector<double> action_logprobs;
  BackendResponse raw;

  bool operator==(const Draft&) const = default;
};

struct DraftFailure {
  DraftSource source = DraftSource::System2;
  std::string message;
  Millis latency{0};

  bool operator==(const DraftFailure&) const = default;
};

using DraftOutcome = std::variant<Draft, DraftFailure>;

struct DraftPair {
  DraftOutcome system2 = DraftFailure{DraftSource::System2, "not issued", Millis{0}};
  DraftOutcome system1 = DraftFailure{DraftSource::System1, "not issued", Millis{0}};
  Millis wall{0};

  const Draft* system2_draft() const noexcept { return std::get_if<Draft>(&system2); }
  const Draft* system1_draft() const noexcept { return std::get_if<Draft>(&system1); }
};

Millis latency_of(const DraftOutcome& outcome) noexcept;
DraftRecord to_record(const DraftOutcome& outcome);

/// Builds a draft from a raw response; System1 drafts drop any reasoning the
/// model produced despite the directive. Throws ActionParseError.
Draft make_draft(DraftSource source, BackendResponse raw);

struct SelectionPolicy {
  std::size_t tau_think = 512;
};

/// Reasoning tokens of the draft; 0 when it has no reasoning.
std::size_t reasoning_length(const Draft& draft) noexcept;

/// Applies the action-aware selection rule. Throws BothDraftsFailed.
Draft select_draft(const DraftPair& pair, const SelectionPolicy& policy);

struct DrafterConfig {
  DecodingParams slm_params;
  DecodingParams llm_params;
};

class Drafter {
 public:
  Drafter(Backends backends, Clock& clock, DrafterConfig config = {})
      : backends_(std::move(backends)), clock_(clock), config_(config) {}

  /// Issues both drafts concurrently and joins them; the clock advances by
  /// the slower side. Each side fails independently and is recorded as a
  /// DraftFailure, so a pair where both failed is still returned (selection
  /// then raises BothDraftsFailed).
  DraftPair draft_pair(const std::string& prompt, std::size_t step);

 private:
  DraftOutcome issue(DraftSource source, const std::string& prompt, std::size_t step);

  Backends backends_;
  Clock& clock_;
  DrafterConfig config_;
};

}  // namespace specagent

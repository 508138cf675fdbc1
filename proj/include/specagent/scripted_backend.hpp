// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Deterministic scripted model backend.
 *
 * A scenario document lists, per (role, step, mode), the exact response the
 * backend returns and the latency it reports. Scenario documents are JSON:
 *
 *   {
 *     "version": 1,
 *     "task_id": "demo",                       // optional
 *     "question": "What is ...?",              // optional
 *     "entries": [
 *       {"role": "slm", "step": 0, "mode": "with_reasoning",
 *        "text": "<think>...</think>\n<tool_call>{...}</tool_call>",
 *        "tokens": ["<think>", "..."], "logprobs": [-0.1, ...],
 *        "latency_ms": 300},
 *       {"role": "critic", "step": 0, "topk": [["Yes", -0.105], ["No", -2.303]],
 *        "latency_ms": 50},
 *       {"role": "llm", "step": 3, "mode": "action_only", "error": "timeout",
 *        "latency_ms": 500}
 *     ]
 *   }
 *
 * Roles: slm, llm, critic. Modes: with_reasoning, action_only (critic entries
 * take no mode). Optional per-entry fields beyond the generation payload:
 * finish_reason (stop|length|error) and error (timeout|wire|malformed), which
 * makes the call fail after the scripted latency. Unknown fields are rejected.
 */

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "specagent/backends.hpp"

namespace specagent {

struct ScenarioKey {
  Role role = Role::SLM;
  std::size_t step = 0;
  GenerationMode mode = GenerationMode::WithReasoning;

  auto operator<=>(const ScenarioKey&) const = default;
};

std::string to_string(const ScenarioKey& key);

struct ScriptedFailure {
  BackendErrorKind kind = BackendErrorKind::Timeout;
  bool operator==(const ScriptedFailure&) const = default;
};

struct ScenarioEntry {
  std::variant<BackendResponse, NextTokenDistribution, ScriptedFailure> payload;
  Millis latency{0};
};

struct ScenarioScript {
  std::string task_id;
  std::string question;
  std::map<ScenarioKey, ScenarioEntry> entries;
};

/// Error in a scenario document. line/column are 1-based; 0 when unknown
/// (schema errors are reported by entry index instead).
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class DuplicateKeyError : public std::runtime_error {
 public:
  DuplicateKeyError(const std::string& what, ScenarioKey key) : std::runtime_error(what), key_(key) {}
  const ScenarioKey& key() const noexcept { return key_; }

 private:
  ScenarioKey key_;
};

ScenarioScript load_scenario(std::string_view document);
ScenarioScript load_scenario_file(const std::filesystem::path& path);

struct CallRecord {
  ScenarioKey key;
  bool judge = false;
  bool operator==(const CallRecord&) const = default;
};

class ScriptedBackend final : public ModelBackend {
 public:
  explicit ScriptedBackend(ScenarioScript script) : script_(std::move(script)) {}

  BackendResponse generate(const GenerationRequest& request) override;
  NextTokenDistribution judge_next_token(const JudgeRequest& request) override;

  /// Every call in arrival order, including failed ones.
  std::vector<CallRecord> calls() const;
  std::size_t count_calls(Role role, std::optional<GenerationMode> mode = std::nullopt) const;

  const ScenarioScript& script() const noexcept { return script_; }

 private:
  const ScenarioEntry& lookup(const ScenarioKey& key, bool judge);

  const ScenarioScript script_;
  mutable std::mutex mutex_;
  std::vector<CallRecord> calls_;
};

}  // namespace specagent

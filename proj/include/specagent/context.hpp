// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specagent/core.hpp"

namespace specagent {

/// One completed step as it appears in the accumulated context.
struct ContextEntry {
  std::optional<std::string> reasoning;
  std::string action;  // canonical rendering
  std::string observation;
};

/// The agent state s_t: the question plus everything appended so far.
struct AgentContext {
  std::string question;
  std::vector<ContextEntry> entries;
};

/// Default instructions given to every drafting and fallback generation.
extern const char* const kDefaultAgentInstructions;

/// Full prompt for a generation: instructions, question and history.
std::string render_agent_prompt(const AgentContext& context, const std::string& instructions);

/// History section only, restricted to the most recent `window` entries.
/// Each entry starts with a "[Step N]" marker (1-based, absolute index).
std::string render_history(const AgentContext& context, std::size_t window);

}  // namespace specagent

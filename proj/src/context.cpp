// SPDX-License-Identifier: Apache-2.0
#include "specagent/context.hpp"

#include <algorithm>

namespace specagent {

const char* const kDefaultAgentInstructions =
    "You are a research agent. Answer the user's question by calling tools one step at a time.\n"
    "Available tools:\n"
    "- search(query): web search returning URLs with snippets.\n"
    "- visit(url, instruction): read a web page and extract what the instruction asks for.\n"
    "- finish(answer): give the final answer.\n"
    "Think inside <think></think> when reasoning is allowed, then emit exactly one call as\n"
    "<tool_call>{\"name\": \"search\", \"arguments\": {\"query\": \"...\"}}</tool_call>";

std::string render_history(const AgentContext& context, std::size_t window) {
  std::string out;
  const std::size_t n = context.entries.size();
  const std::size_t first = n > window ? n - window : 0;
  for (std::size_t i = first; i < n; ++i) {
    const auto& e = context.entries[i];
    if (!out.empty()) out += "\n";
    out += "[Step " + std::to_string(i + 1) + "]\n";
    if (e.reasoning) out += "Reasoning: " + *e.reasoning + "\n";
    out += "Action: " + e.action + "\n";
    out += "Observation: " + e.observation + "\n";
  }
  return out;
}

std::string render_agent_prompt(const AgentContext& context, const std::string& instructions) {
  std::string out = instructions;
  out += "\n\nUser's Goal: " + context.question + "\n";
  if (!context.entries.empty()) {
    out += "\n" + render_history(context, context.entries.size());
  }
  out += "\nNext step:";
  return out;
}

}  // namespace specagent

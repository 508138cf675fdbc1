// SPDX-License-Identifier: Apache-2.0
#include "specagent/speculation.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <sstream>

#include <json.hpp>

namespace specagent {

using nlohmann::json;

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kToolOpen = "<tool_call>";
constexpr std::string_view kToolClose = "</tool_call>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t word_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

std::string arg_string(const json& args, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (!args.contains(name)) continue;
    const auto& v = args[name];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array() && !v.empty() && v[0].is_string()) return v[0].get<std::string>();
  }
  return {};
}

Action action_from_tool_call(std::string_view body) {
  json call;
  try {
    call = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ActionParseError(std::string("tool_call is not JSON: ") + e.what());
  }
  if (!call.is_object() || !call.contains("name") || !call["name"].is_string()) {
    throw ActionParseError("tool_call lacks a name");
  }
  json args = call.value("arguments", json::object());
  if (args.is_string()) {
    try {
      args = json::parse(args.get<std::string>());
    } catch (const json::parse_error& e) {
      throw ActionParseError(std::string("tool_call arguments are not JSON: ") + e.what());
    }
  }
  if (!args.is_object()) throw ActionParseError("tool_call arguments must be an object");

  const auto name = call["name"].get<std::string>();
  try {
    if (name == "search") return Action::search(arg_string(args, {"query", "q"}));
    if (name == "visit") return Action::visit(arg_string(args, {"url"}), arg_string(args, {"instruction", "goal"}));
    if (name == "finish") return Action::finish(arg_string(args, {"answer"}));
    std::map<std::string, std::string> flat;
    for (const auto& [k, v] : args.items()) flat[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return Action::other_tool(name, std::move(flat));
  } catch (const std::invalid_argument& e) {
    throw ActionParseError(std::string("invalid ") + name + " call: " + e.what());
  }
}

Action parse_action_segment(std::string_view rest) {
  if (auto open = rest.find(kToolOpen); open != std::string_view::npos) {
    auto body_start = open + kToolOpen.size();
    auto close = rest.find(kToolClose, body_start);
    if (close == std::string_view::npos) throw ActionParseError("unterminated <tool_call>");
    return action_from_tool_call(rest.substr(body_start, close - body_start));
  }
  if (auto open = rest.find(kAnswerOpen); open != std::string_view::npos) {
    auto body_start = open + kAnswerOpen.size();
    auto close = rest.find(kAnswerClose, body_start);
    if (close == std::string_view::npos) throw ActionParseError("unterminated <answer>");
    auto answer = trim(rest.substr(body_start, close - body_start));
    if (answer.empty()) throw ActionParseError("empty <answer>");
    return Action::finish(std::move(answer));
  }
  std::istringstream lines{std::string(rest)};
  for (std::string line; std::getline(lines, line);) {
    auto t = trim(line);
    if (t.empty()) continue;
    try {
      return parse_rendered_action(t);
    } catch (const std::invalid_argument&) {
    }
  }
  throw ActionParseError("no action found in model output");
}

}  // namespace

ParsedOutput parse_model_output(const BackendResponse& response) {
  const std::string& text = response.text;
  ParsedOutput out;

  std::size_t action_start = 0;
  std::optional<std::string> reasoning_text;
  const auto close = text.find(kThinkClose);
  if (close != std::string::npos) {
    const auto open = text.find(kThinkOpen);
    if (open == std::string::npos || open < close) {
      const auto start = open == std::string::npos ? 0 : open + kThinkOpen.size();
      auto body = trim(std::string_view(text).substr(start, close - start));
      if (!body.empty()) reasoning_text = std::move(body);
      action_start = close + kThinkClose.size();
    }
  }
  out.action = parse_action_segment(std::string_view(text).substr(action_start));

  const auto& tokens = response.tokens;
  const auto& logprobs = response.token_logprobs;
  std::string joined;
  for (const auto& t : tokens) joined += t;

  std::size_t reasoning_tokens = 0;
  bool attributed = false;
  if (!tokens.empty() && joined == text) {
    // Whitespace between the reasoning block and the action belongs to neither.
    std::size_t first_action_byte = action_start;
    while (first_action_byte < text.size() && std::isspace(static_cast<unsigned char>(text[first_action_byte]))) {
      ++first_action_byte;
    }
    std::size_t offset = 0;
    for (const auto& t : tokens) {
      if (offset >= first_action_byte) break;
      ++reasoning_tokens;
      offset += t.size();
    }
    attributed = true;
  } else if (!tokens.empty() && joined == text.substr(action_start)) {
    // Reasoning came back out of band; the token stream covers the action only.
    attributed = true;
  }

  if (attributed && !logprobs.empty()) {
    out.action_logprobs.assign(logprobs.begin() + static_cast<std::ptrdiff_t>(reasoning_tokens), logprobs.end());
  }

  if (reasoning_text) {
    ReasoningTrace trace;
    trace.text = *reasoning_text;
    if (attributed && reasoning_tokens > 0) {
      trace.token_count = reasoning_tokens;
      if (!logprobs.empty()) {
        trace.token_logprobs.assign(logprobs.begin(), logprobs.begin() + static_cast<std::ptrdiff_t>(reasoning_tokens));
      }
    } else {
      trace.token_count = word_count(*reasoning_text);
    }
    out.reasoning = std::move(trace);
  }
  return out;
}

Draft make_draft(DraftSource source, BackendResponse raw) {
  auto parsed = parse_model_output(raw);
  Draft d;
  d.source = source;
  if (source == DraftSource::System2) d.reasoning = std::move(parsed.reasoning);
  d.action = std::move(parsed.action);
  d.action_logprobs = std::move(parsed.action_logprobs);
  d.raw = std::move(raw);
  return d;
}

Millis latency_of(const DraftOutcome& outcome) noexcept {
  if (const auto* d = std::get_if<Draft>(&outcome)) return d->raw.latency;
  return std::get<DraftFailure>(outcome).latency;
}

DraftRecord to_record(const DraftOutcome& outcome) {
  DraftRecord r;
  if (const auto* d = std::get_if<Draft>(&outcome)) {
    r.source = d->source;
    r.action = d->action;
    r.reasoning = d->reasoning;
    r.action_logprobs = d->action_logprobs;
    r.latency = d->raw.latency;
  } else {
    const auto& f = std::get<DraftFailure>(outcome);
    r.source = f.source;
    r.latency = f.latency;
    r.error = f.message;
  }
  return r;
}

std::size_t reasoning_length(const Draft& draft) noexcept {
  return draft.reasoning ? draft.reasoning->token_count : 0;
}

Draft select_draft(const DraftPair& pair, const SelectionPolicy& policy) {
  const Draft* small = pair.system2_draft();
  const Draft* large = pair.system1_draft();
  if (!small && !large) throw BothDraftsFailed("both drafts failed");
  if (!small) return *large;
  if (!large) return *small;
  if (small->action.kind() != ActionKind::Visit) return *small;
  return reasoning_length(*small) > policy.tau_think ? *small : *large;
}

DraftOutcome Drafter::issue(DraftSource source, const std::string& prompt, std::size_t step) {
  GenerationRequest req;
  req.step = step;
  req.context = prompt;
  if (source == DraftSource::System2) {
    req.role = Role::SLM;
    req.mode = GenerationMode::WithReasoning;
    req.params = config_.slm_params;
  } else {
    req.role = Role::LLM;
    req.mode = GenerationMode::ActionOnly;
    req.params = config_.llm_params;
  }
  BackendResponse raw;
  try {
    raw = backends_.for_role(req.role).generate(req);
  } catch (const BackendError& e) {
    return DraftFailure{source, std::string(to_string(e.kind())) + ": " + e.what(), e.latency()};
  }
  const auto latency = raw.latency;
  try {
    return make_draft(source, std::move(raw));
  } catch (const ActionParseError& e) {
    return DraftFailure{source, std::string("unparseable: ") + e.what(), latency};
  }
}

DraftPair Drafter::draft_pair(const std::string& prompt, std::size_t step) {
  if (prompt.empty()) throw std::invalid_argument("draft prompt must be non-empty");
  const Millis start = clock_.now();
  auto small = std::async(std::launch::async, [&] { return issue(DraftSource::System2, prompt, step); });
  auto large = std::async(std::launch::async, [&] { return issue(DraftSource::System1, prompt, step); });
  DraftPair pair;
  pair.system2 = small.get();
  pair.system1 = large.get();
  clock_.account(std::max(latency_of(pair.system2), latency_of(pair.system1)));
  pair.wall = clock_.now() - start;
  return pair;
}

}  // namespace specagent

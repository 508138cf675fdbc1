// SPDX-License-Identifier: Apache-2.0
#include "specagent/trace.hpp"

#include <optional>

#include <json.hpp>

namespace specagent {

using nlohmann::json;

namespace {

json reasoning_json(const std::optional<ReasoningTrace>& r) {
  if (!r) return nullptr;
  return {{"text", r->text}, {"token_count", r->token_count}, {"token_logprobs", r->token_logprobs}};
}

std::optional<ReasoningTrace> reasoning_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  ReasoningTrace r;
  r.text = j.at("text").get<std::string>();
  r.token_count = j.at("token_count").get<std::size_t>();
  r.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
  return r;
}

json step_json(const Step& s, std::size_t index) {
  json drafts = json::array();
  for (const auto& d : s.drafts) {
    drafts.push_back({{"source", std::string(to_string(d.source))},
                      {"action", d.action ? json(render_action(*d.action)) : json(nullptr)},
                      {"reasoning", reasoning_json(d.reasoning)},
                      {"action_logprobs", d.action_logprobs},
                      {"latency_ms", d.latency.count()},
                      {"error", d.error ? json(*d.error) : json(nullptr)}});
  }
  json verdict = nullptr;
  if (s.verdict) {
    const auto& v = *s.verdict;
    verdict = {{"source", std::string(to_string(v.source))},
               {"p_acc", v.p_acc},
               {"p_rej", v.p_rej},
               {"score", v.score},
               {"accepted", v.accepted},
               {"threshold", v.threshold}};
  }
  const auto& t = s.timing;
  return {{"record", "step"},
          {"index", index},
          {"reasoning", reasoning_json(s.reasoning)},
          {"action", render_action(s.action)},
          {"action_logprobs", s.action_logprobs},
          {"observation",
           {{"kind", std::string(to_string(s.observation.kind))},
            {"payload", s.observation.payload},
            {"latency_ms", s.observation.latency.count()}}},
          {"provenance", std::string(to_string(s.provenance))},
          {"verdict", verdict},
          {"timing",
           {{"draft_slm_ms", t.draft_slm_ms.count()},
            {"draft_llm_ms", t.draft_llm_ms.count()},
            {"verify_ms", t.verify_ms.count()},
            {"tool_ms", t.tool_ms.count()},
            {"fallback_reasoning_ms", t.fallback_reasoning_ms.count()},
            {"wall_step_ms", t.wall_step_ms.count()}}},
          {"drafts", drafts},
          {"prefetch_discarded", s.prefetch_discarded}};
}

template <typename T, typename Parse>
T enum_field(const json& j, const char* name, Parse parse) {
  const auto text = j.at(name).get<std::string>();
  auto v = parse(text);
  if (!v) throw std::invalid_argument(std::string("unknown ") + name + " '" + text + "'");
  return *v;
}

Millis millis(const json& j, const char* name) { return Millis{j.at(name).get<std::int64_t>()}; }

Step step_from(const json& j) {
  Step s;
  s.reasoning = reasoning_from(j.at("reasoning"));
  s.action = parse_rendered_action(j.at("action").get<std::string>());
  s.action_logprobs = j.at("action_logprobs").get<std::vector<double>>();
  const auto& o = j.at("observation");
  s.observation.kind = enum_field<ObservationKind>(o, "kind", parse_observation_kind);
  s.observation.payload = o.at("payload").get<std::string>();
  s.observation.latency = millis(o, "latency_ms");
  s.provenance = enum_field<Provenance>(j, "provenance", parse_provenance);
  if (const auto& v = j.at("verdict"); !v.is_null()) {
    Verdict verdict;
    verdict.source = enum_field<VerdictSource>(v, "source", parse_verdict_source);
    verdict.p_acc = v.at("p_acc").get<double>();
    verdict.p_rej = v.at("p_rej").get<double>();
    verdict.score = v.at("score").get<double>();
    verdict.accepted = v.at("accepted").get<bool>();
    verdict.threshold = v.at("threshold").get<double>();
    s.verdict = verdict;
  }
  const auto& t = j.at("timing");
  s.timing.draft_slm_ms = millis(t, "draft_slm_ms");
  s.timing.draft_llm_ms = millis(t, "draft_llm_ms");
  s.timing.verify_ms = millis(t, "verify_ms");
  s.timing.tool_ms = millis(t, "tool_ms");
  s.timing.fallback_reasoning_ms = millis(t, "fallback_reasoning_ms");
  s.timing.wall_step_ms = millis(t, "wall_step_ms");
  for (const auto& d : j.at("drafts")) {
    DraftRecord r;
    r.source = enum_field<DraftSource>(d, "source", parse_draft_source);
    if (!d.at("action").is_null()) r.action = parse_rendered_action(d["action"].get<std::string>());
    r.reasoning = reasoning_from(d.at("reasoning"));
    r.action_logprobs = d.at("action_logprobs").get<std::vector<double>>();
    r.latency = millis(d, "latency_ms");
    if (!d.at("error").is_null()) r.error = d["error"].get<std::string>();
    s.drafts.push_back(std::move(r));
  }
  s.prefetch_discarded = j.at("prefetch_discarded").get<bool>();
  return s;
}

struct Line {
  std::string_view text;
  std::size_t record;
};

std::vector<Line> split_records(std::string_view text) {
  std::vector<Line> lines;
  std::size_t record = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back({line, record});
    ++record;
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

json parse_record(const Line& line) {
  try {
    auto j = json::parse(line.text);
    if (!j.is_object() || !j.contains("record")) throw TraceParseError("record is not a trace object", line.record);
    return j;
  } catch (const json::parse_error& e) {
    throw TraceParseError(std::string("record is not JSON: ") + e.what(), line.record);
  }
}

/// Parses one trajectory starting at lines[pos]; advances pos past it.
Trajectory parse_one(const std::vector<Line>& lines, std::size_t& pos) {
  const Line& head_line = lines[pos];
  const json head = parse_record(head_line);
  if (head["record"] != "header") throw TraceParseError("expected a header record", head_line.record);
  Trajectory t;
  std::size_t steps = 0;
  try {
    if (head.at("version").get<int>() != kTraceVersion) {
      throw TraceParseError("unsupported trace version", head_line.record);
    }
    t.task_id = head.at("task_id").get<std::string>();
    t.question = head.at("question").get<std::string>();
    t.config_digest = head.at("config_digest").get<std::string>();
    if (!head.at("final_answer").is_null()) t.final_answer = head["final_answer"].get<std::string>();
    steps = head.at("steps").get<std::size_t>();
  } catch (const json::exception& e) {
    throw TraceParseError(std::string("bad header: ") + e.what(), head_line.record);
  }
  ++pos;
  for (std::size_t i = 0; i < steps; ++i, ++pos) {
    if (pos >= lines.size()) {
      throw TraceParseError("trace ends after " + std::to_string(i) + " of " + std::to_string(steps) + " steps",
                            lines.empty() ? 0 : lines.back().record + 1);
    }
    const Line& line = lines[pos];
    const json rec = parse_record(line);
    if (rec["record"] != "step") throw TraceParseError("expected a step record", line.record);
    try {
      if (rec.at("index").get<std::size_t>() != i) throw TraceParseError("step index out of order", line.record);
      t.steps.push_back(step_from(rec));
      validate(t.steps.back());
    } catch (const json::exception& e) {
      throw TraceParseError(std::string("bad step: ") + e.what(), line.record);
    } catch (const std::invalid_argument& e) {
      throw TraceParseError(std::string("bad step: ") + e.what(), line.record);
    } catch (const InvariantViolation& e) {
      throw TraceParseError(std::string("invalid step: ") + e.what(), line.record);
    }
  }
  try {
    validate(t);
  } catch (const InvariantViolation& e) {
    throw TraceParseError(std::string("invalid trajectory: ") + e.what(), head_line.record);
  }
  return t;
}

}  // namespace

std::string serialize_trace(const Trajectory& trajectory) {
  json head = {{"record", "header"},
               {"version", kTraceVersion},
               {"task_id", trajectory.task_id},
               {"question", trajectory.question},
               {"config_digest", trajectory.config_digest},
               {"final_answer", trajectory.final_answer ? json(*trajectory.final_answer) : json(nullptr)},
               {"steps", trajectory.steps.size()}};
  std::string out = head.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    out += step_json(trajectory.steps[i], i).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

Trajectory parse_trace(std::string_view text) {
  const auto lines = split_records(text);
  if (lines.empty()) throw TraceParseError("empty trace: missing header", 0);
  std::size_t pos = 0;
  auto t = parse_one(lines, pos);
  if (pos != lines.size()) throw TraceParseError("unexpected record after trajectory", lines[pos].record);
  return t;
}

std::vector<Trajectory> parse_traces(std::string_view text) {
  const auto lines = split_records(text);
  std::vector<Trajectory> out;
  std::size_t pos = 0;
  while (pos < lines.size()) out.push_back(parse_one(lines, pos));
  return out;
}

}  // namespace specagent

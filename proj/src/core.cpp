// SPDX-License-Identifier: Apache-2.0
#include "specagent/core.hpp"

#include <cmath>
#include <cstdio>

namespace specagent {

namespace {

void require_non_empty(const std::string& value, const char* what) {
  if (value.empty()) {
    throw std::invalid_argument(std::string("action field must be non-empty: ") + what);
  }
}

void append_quoted(std::string& out, std::string_view value) {
  out.push_back('"');
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

// Recursive-descent reader for the canonical grammar.
class RenderedReader {
 public:
  explicit RenderedReader(std::string_view text) : text_(text) {}

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool peek(char c) const { return pos_ < text_.size() && text_[pos_] == c; }

  std::string quoted() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= text_.size()) fail("dangling escape");
      char e = text_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'x': {
          if (pos_ + 2 > text_.size()) fail("short hex escape");
          auto hex = std::string(text_.substr(pos_, 2));
          pos_ += 2;
          out.push_back(static_cast<char>(std::stoi(hex, nullptr, 16)));
          break;
        }
        default: fail("unknown escape");
      }
    }
    return out;
  }

  void field(const char* name, std::string& into) {
    if (identifier() != name) fail(std::string("expected field ") + name);
    expect('=');
    into = quoted();
  }

  void finish() {
    if (pos_ != text_.size()) fail("trailing characters");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("malformed rendered action at offset " + std::to_string(pos_) + ": " + why);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Action Action::search(std::string query) {
  require_non_empty(query, "query");
  return Action(SearchAction{std::move(query)});
}

Action Action::visit(std::string url, std::string instruction) {
  require_non_empty(url, "url");
  require_non_empty(instruction, "instruction");
  return Action(VisitAction{std::move(url), std::move(instruction)});
}

Action Action::finish(std::string answer) {
  require_non_empty(answer, "answer");
  return Action(FinishAction{std::move(answer)});
}

Action Action::other_tool(std::string name, std::map<std::string, std::string> args) {
  require_non_empty(name, "tool_name");
  return Action(OtherToolAction{std::move(name), std::move(args)});
}

ActionKind action_kind(const Action& action) noexcept { return action.kind(); }

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::Search: return "search";
    case ActionKind::Visit: return "visit";
    case ActionKind::Finish: return "finish";
    case ActionKind::OtherTool: return "tool";
  }
  return "?";
}

std::optional<ActionKind> parse_action_kind(std::string_view text) noexcept {
  if (text == "search") return ActionKind::Search;
  if (text == "visit") return ActionKind::Visit;
  if (text == "finish") return ActionKind::Finish;
  if (text == "tool") return ActionKind::OtherTool;
  return std::nullopt;
}

std::string render_action(const Action& action) {
  std::string out{to_string(action.kind())};
  out.push_back('{');
  std::visit(
      [&out](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SearchAction>) {
          out += "query=";
          append_quoted(out, a.query);
        } else if constexpr (std::is_same_v<T, VisitAction>) {
          out += "url=";
          append_quoted(out, a.url);
          out += ",instruction=";
          append_quoted(out, a.instruction);
        } else if constexpr (std::is_same_v<T, FinishAction>) {
          out += "answer=";
          append_quoted(out, a.answer);
        } else {
          out += "name=";
          append_quoted(out, a.name);
          out += ",args={";
          bool first = true;
          for (const auto& [key, value] : a.args) {  // std::map iterates sorted
            if (!first) out.push_back(',');
            first = false;
            append_quoted(out, key);
            out.push_back('=');
            append_quoted(out, value);
          }
          out.push_back('}');
        }
      },
      action.value());
  out.push_back('}');
  return out;
}

Action parse_rendered_action(std::string_view text) {
  RenderedReader r(text);
  auto tag = r.identifier();
  auto kind = parse_action_kind(tag);
  if (!kind) r.fail("unknown action tag '" + tag + "'");
  r.expect('{');
  std::optional<Action> result;
  switch (*kind) {
    case ActionKind::Search: {
      std::string q;
      r.field("query", q);
      result = Action::search(std::move(q));
      break;
    }
    case ActionKind::Visit: {
      std::string url, instruction;
      r.field("url", url);
      r.expect(',');
      r.field("instruction", instruction);
      result = Action::visit(std::move(url), std::move(instruction));
      break;
    }
    case ActionKind::Finish: {
      std::string answer;
      r.field("answer", answer);
      result = Action::finish(std::move(answer));
      break;
    }
    case ActionKind::OtherTool: {
      std::string name;
      r.field("name", name);
      r.expect(',');
      if (r.identifier() != "args") r.fail("expected field args");
      r.expect('=');
      r.expect('{');
      std::map<std::string, std::string> args;
      while (!r.peek('}')) {
        if (!args.empty()) r.expect(',');
        auto key = r.quoted();
        r.expect('=');
        auto value = r.quoted();
        if (!args.emplace(std::move(key), std::move(value)).second) r.fail("duplicate argument key");
      }
      r.expect('}');
      result = Action::other_tool(std::move(name), std::move(args));
      break;
    }
  }
  r.expect('}');
  r.finish();
  return *result;
}

std::string_view to_string(ObservationKind kind) noexcept {
  switch (kind) {
    case ObservationKind::SearchResults: return "search_results";
    case ObservationKind::Extraction: return "extraction";
    case ObservationKind::AnswerEcho: return "answer_echo";
    case ObservationKind::ToolOutput: return "tool_output";
    case ObservationKind::ToolError: return "tool_error";
  }
  return "?";
}

std::optional<ObservationKind> parse_observation_kind(std::string_view text) noexcept {
  for (auto k : {ObservationKind::SearchResults, ObservationKind::Extraction, ObservationKind::AnswerEcho,
                 ObservationKind::ToolOutput, ObservationKind::ToolError}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(VerdictSource source) noexcept {
  switch (source) {
    case VerdictSource::Critic: return "critic";
    case VerdictSource::Match: return "match";
    case VerdictSource::Fixed: return "fixed";
    case VerdictSource::NoDraft: return "no_draft";
  }
  return "?";
}

std::optional<VerdictSource> parse_verdict_source(std::string_view text) noexcept {
  for (auto s : {VerdictSource::Critic, VerdictSource::Match, VerdictSource::Fixed, VerdictSource::NoDraft}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::System2Draft: return "system2_draft";
    case Provenance::System1Draft: return "system1_draft";
    case Provenance::Fallback: return "fallback";
  }
  return "?";
}

std::optional<Provenance> parse_provenance(std::string_view text) noexcept {
  for (auto p : {Provenance::System2Draft, Provenance::System1Draft, Provenance::Fallback}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::string_view to_string(DraftSource s) noexcept {
  return s == DraftSource::System2 ? "system2" : "system1";
}

std::optional<DraftSource> parse_draft_source(std::string_view text) noexcept {
  if (text == "system2") return DraftSource::System2;
  if (text == "system1") return DraftSource::System1;
  return std::nullopt;
}

void validate(const TimingBreakdown& t) {
  for (auto d : {t.draft_slm_ms, t.draft_llm_ms, t.verify_ms, t.tool_ms, t.fallback_reasoning_ms, t.wall_step_ms}) {
    if (d.count() < 0) throw InvariantViolation("timing field is negative");
  }
  if (t.wall_step_ms < t.tool_ms) throw InvariantViolation("wall_step_ms < tool_ms");
}

void validate(const ReasoningTrace& trace) {
  if (!trace.token_logprobs.empty() && trace.token_logprobs.size() != trace.token_count) {
    throw InvariantViolation("reasoning token_count differs from logprob count");
  }
  for (double lp : trace.token_logprobs) {
    if (!(lp <= 0.0)) throw InvariantViolation("reasoning logprob > 0");
  }
}

void validate(const Verdict& v) {
  if (v.source == VerdictSource::NoDraft) {
    if (v.accepted) throw InvariantViolation("no-draft verdict cannot accept");
    return;
  }
  if (v.source == VerdictSource::Critic) {
    if (!(v.p_acc > 0.0 && v.p_acc <= 1.0) || !(v.p_rej > 0.0 && v.p_rej <= 1.0)) {
      throw InvariantViolation("critic probabilities outside (0,1]");
    }
    if (v.score != std::log(v.p_acc) - std::log(v.p_rej)) {
      throw InvariantViolation("critic score is not ln(p_acc) - ln(p_rej)");
    }
  }
  if (v.accepted != (v.score >= v.threshold)) {
    throw InvariantViolation("accepted disagrees with score >= threshold");
  }
}

void validate(const Step& step) {
  validate(step.timing);
  if (step.reasoning) validate(*step.reasoning);
  if (step.observation.latency.count() < 0) throw InvariantViolation("observation latency < 0");
  if (step.verdict) validate(*step.verdict);
  if (step.provenance == Provenance::Fallback) {
    if (!step.verdict || step.verdict->accepted) {
      throw InvariantViolation("fallback step requires a rejecting verdict");
    }
  } else if (!step.verdict || !step.verdict->accepted) {
    throw InvariantViolation("draft step requires an accepting verdict");
  }
  if (step.provenance == Provenance::System1Draft && step.reasoning) {
    throw InvariantViolation("system1 step carries reasoning");
  }
}

void validate(const Trajectory& trajectory) {
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    validate(trajectory.steps[i]);
    if (trajectory.steps[i].action.kind() == ActionKind::Finish && i + 1 != trajectory.steps.size()) {
      throw InvariantViolation("finish step is not the last step");
    }
  }
}

}  // namespace specagent

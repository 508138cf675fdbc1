// SPDX-License-Identifier: Apache-2.0
#pragma once

// Test helpers: scripted scenario construction and small independent oracles.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "specagent/clock.hpp"
#include "specagent/orchestrator.hpp"
#include "specagent/scripted_backend.hpp"
#include "specagent/tools.hpp"

namespace testsupport {

using namespace specagent;

/// <tool_call> text for an action, the way a chat model would emit it.
inline std::string tool_call_text(const Action& a) {
  nlohmann::json args = nlohmann::json::object();
  std::string name;
  if (auto* s = a.as<SearchAction>()) {
    name = "search";
    args["query"] = s->query;
  } else if (auto* v = a.as<VisitAction>()) {
    name = "visit";
    args["url"] = v->url;
    args["instruction"] = v->instruction;
  } else if (auto* f = a.as<FinishAction>()) {
    name = "finish";
    args["answer"] = f->answer;
  } else {
    auto* o = a.as<OtherToolAction>();
    name = o->name;
    for (const auto& [k, v] : o->args) args[k] = v;
  }
  return "<tool_call>" + nlohmann::json{{"name", name}, {"arguments", args}}.dump() + "</tool_call>";
}

/// Splits text into word-ish tokens whose concatenation is the text.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur += c;
    if (c == ' ' || c == '>' || c == '\n') {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// A generation whose tokens tile the text. Reasoning tokens get
/// `reasoning_lp`, action tokens `action_lp`.
inline BackendResponse generation(const std::optional<std::string>& reasoning, const Action& action,
                                  double action_lp = -0.2, double reasoning_lp = -0.5) {
  BackendResponse r;
  if (reasoning) {
    for (auto& t : tokenize("<think>" + *reasoning + "</think>\n")) {
      r.tokens.push_back(t);
      r.token_logprobs.push_back(reasoning_lp);
    }
  }
  for (auto& t : tokenize(tool_call_text(action))) {
    r.tokens.push_back(t);
    r.token_logprobs.push_back(action_lp);
  }
  for (const auto& t : r.tokens) r.text += t;
  return r;
}

/// Critic top-20 list with the given Yes/No logprobs and negligible filler.
inline NextTokenDistribution critic_topk(double yes_lp, double no_lp) {
  NextTokenDistribution d;
  d.entries = {{"Yes", yes_lp}, {"No", no_lp}};
  for (int i = 0; i < 18; ++i) d.entries.push_back({"filler" + std::to_string(i), -20.0 - 0.01 * i});
  std::stable_sort(d.entries.begin(), d.entries.end(),
                   [](const TokenLogprob& a, const TokenLogprob& b) { return a.logprob > b.logprob; });
  d.k = d.entries.size();
  return d;
}

struct Latencies {
  Millis slm{1200};
  Millis llm_action{900};
  Millis critic{250};
  Millis llm_reason{5000};
  Millis search{800};
  Millis visit{1500};
};

/// An aligned scenario: every pathway proposes `actions[i]` at step i (or
/// `draft_override[i]` for the drafts), the critic accepts unless i is in
/// `rejects`, and the large model's full-reasoning generation is scripted at
/// every step so the baseline can run on the same script.
struct AlignedScenario {
  std::vector<Action> actions;
  std::set<std::size_t> rejects;
  std::map<std::size_t, Action> draft_override;
  Latencies lat;
  std::size_t slm_reasoning_words = 8;
  double yes_accept = -0.05, no_accept = -3.0;
  double yes_reject = -2.5, no_reject = -0.1;

  ScenarioScript script() const {
    ScenarioScript s;
    s.task_id = "aligned";
    s.question = "What is the answer?";
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const Action& draft = draft_override.count(i) ? draft_override.at(i) : actions[i];
      std::string words;
      for (std::size_t w = 0; w < slm_reasoning_words; ++w) words += (w ? " w" : "w") + std::to_string(w);
      auto slm = generation(words, draft, -0.6);
      auto llm_a = generation(std::nullopt, draft, -0.3);
      auto llm_r = generation("careful " + words, actions[i], -0.1);
      s.entries[{Role::SLM, i, GenerationMode::WithReasoning}] = {slm, lat.slm};
      s.entries[{Role::LLM, i, GenerationMode::ActionOnly}] = {llm_a, lat.llm_action};
      s.entries[{Role::LLM, i, GenerationMode::WithReasoning}] = {llm_r, lat.llm_reason};
      const bool reject = rejects.count(i) > 0;
      s.entries[{Role::Critic, i, GenerationMode::ActionOnly}] = {
          critic_topk(reject ? yes_reject : yes_accept, reject ? no_reject : no_accept), lat.critic};
    }
    return s;
  }

  /// Fixtures for every search/visit in actions and overrides.
  std::shared_ptr<FixtureToolBackend> fixtures() const {
    std::map<std::string, FixtureToolBackend::SearchFixture> searches;
    std::map<std::string, FixtureToolBackend::VisitFixture> visits;
    auto add = [&](const Action& a) {
      if (auto* s = a.as<SearchAction>()) {
        searches[s->query] = {{{"https://example.org/" + std::to_string(searches.size()), "Result", "snippet for " + s->query}},
                              lat.search};
      } else if (auto* v = a.as<VisitAction>()) {
        visits[v->url] = {"page body of " + v->url, lat.visit};
      }
    };
    for (const auto& a : actions) add(a);
    for (const auto& [_, a] : draft_override) add(a);
    return std::make_shared<FixtureToolBackend>(std::move(searches), std::move(visits));
  }
};

/// search, visit, search, visit, ..., finish(answer)
inline std::vector<Action> alternating_actions(std::size_t n, const std::string& answer = "42") {
  std::vector<Action> out;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i % 2 == 0) out.push_back(Action::search("query " + std::to_string(i)));
    else out.push_back(Action::visit("https://site" + std::to_string(i) + ".example/page", "extract facts"));
  }
  out.push_back(Action::finish(answer));
  return out;
}

struct Harness {
  std::shared_ptr<ScriptedBackend> model;
  std::shared_ptr<FixtureToolBackend> tool_backend;
  std::shared_ptr<ToolExecutor> tools;
  ManualClock clock;
  std::unique_ptr<Orchestrator> orch;

  Harness(const AlignedScenario& sc, RunConfig config = {}, ToolsConfig tools_config = {}) {
    model = std::make_shared<ScriptedBackend>(sc.script());
    tool_backend = sc.fixtures();
    tools = std::make_shared<ToolExecutor>(tool_backend, tools_config);
    orch = std::make_unique<Orchestrator>(Backends{model, model, model}, tools, clock, config);
  }
};

/// Textbook O(nm) Levenshtein over bytes, full matrix.
inline std::size_t levenshtein_oracle(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

}  // namespace testsupport

#ifdef DOCTEST_LIBRARY_INCLUDED
namespace doctest {
template <>
struct StringMaker<specagent::Millis> {
  static String convert(const specagent::Millis& ms) { return (std::to_string(ms.count()) + "ms").c_str(); }
};
}  // namespace doctest
#endif

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "specagent/core.hpp"

using namespace specagent;

TEST_CASE("action factories reject empty required fields") {
  CHECK_THROWS_AS(Action::search(""), std::invalid_argument);
  CHECK_THROWS_AS(Action::visit("", "x"), std::invalid_argument);
  CHECK_THROWS_AS(Action::finish(""), std::invalid_argument);
  CHECK_THROWS_AS(Action::other_tool(""), std::invalid_argument);
  CHECK_THROWS_AS(Action::visit("https://a.example", ""), std::invalid_argument);
}

TEST_CASE("canonical rendering") {
  CHECK(render_action(Action::search("paris population")) == R"(search{query="paris population"})");
  CHECK(render_action(Action::visit("https://x.org/a", "get \"title\"")) ==
        R"(visit{url="https://x.org/a",instruction="get \"title\""})");
  CHECK(render_action(Action::finish("a\nb\\c")) == R"(finish{answer="a\nb\\c"})");
  CHECK(render_action(Action::other_tool("calc", {{"b", "2"}, {"a", "1"}})) == R"(tool{name="calc",args={"a"="1","b"="2"}})");
  CHECK(render_action(Action::search(std::string("x\x01y"))) == R"(search{query="x\x01y"})");
}

TEST_CASE("kind names round trip") {
  for (auto k : {ActionKind::Search, ActionKind::Visit, ActionKind::Finish, ActionKind::OtherTool}) {
    CHECK(parse_action_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_action_kind("browse").has_value());
}

TEST_CASE("parse_rendered_action inverts render_action") {
  const std::vector<Action> samples = {
      Action::search("q"), Action::search("with \"quotes\" and \\ slashes\t\r\n"),
      Action::visit("https://e.org/?a=1&b=2", "summarize"), Action::finish("done"),
      Action::other_tool("py", {{"code", "print(1)"}, {"x", ""}}), Action::other_tool("noargs")};
  for (const auto& a : samples) CHECK(parse_rendered_action(render_action(a)) == a);
  CHECK_THROWS_AS(parse_rendered_action("search{query=\"x\""), std::invalid_argument);
  CHECK_THROWS_AS(parse_rendered_action("jump{}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rendered_action(R"(search{query="x"} trailing)"), std::invalid_argument);
}

TEST_CASE("rendering is injective over a brute-force alphabet") {
  // Every short string over an alphabet rich in delimiters, across kinds.
  const std::string alphabet = std::string("a\"\\{},=\n ") + '\0';
  std::vector<std::string> strings = {""};
  for (int len = 1; len <= 3; ++len) {
    std::vector<std::string> next;
    for (const auto& s : strings) {
      if (s.size() + 1 != static_cast<std::size_t>(len)) continue;
      for (char c : alphabet) next.push_back(s + c);
    }
    strings.insert(strings.end(), next.begin(), next.end());
  }
  std::set<std::string> seen;
  std::size_t actions = 0;
  for (const auto& s : strings) {
    if (s.empty()) continue;
    for (const auto& a : {Action::search(s), Action::finish(s), Action::visit("u", s), Action::visit(s, "u"),
                          Action::other_tool("t", {{s, "v"}})}) {
      const auto r = render_action(a);
      CHECK(seen.insert(r).second);
      CHECK(parse_rendered_action(r) == a);
      ++actions;
    }
  }
  CHECK(seen.size() == actions);
}

TEST_CASE("verdict validation") {
  Verdict v;
  v.source = VerdictSource::Critic;
  v.p_acc = 0.9;
  v.p_rej = 0.1;
  v.score = std::log(0.9) - std::log(0.1);
  v.threshold = 0.0;
  v.accepted = true;
  CHECK_NOTHROW(validate(v));
  v.accepted = false;
  CHECK_THROWS_AS(validate(v), InvariantViolation);
  v.accepted = true;
  v.score = 1.0;
  CHECK_THROWS_AS(validate(v), InvariantViolation);
  v.score = std::log(0.9) - std::log(0.1);
  v.p_acc = 0.0;
  CHECK_THROWS_AS(validate(v), InvariantViolation);
}

TEST_CASE("step and trajectory validation") {
  Step s;
  s.action = Action::search("q");
  s.observation = {ObservationKind::SearchResults, "r", Millis{5}};
  s.provenance = Provenance::System1Draft;
  Verdict ok;
  ok.source = VerdictSource::Fixed;
  ok.score = 1;
  ok.accepted = true;
  s.verdict = ok;
  CHECK_NOTHROW(validate(s));

  SUBCASE("system1 steps carry no reasoning") {
    s.reasoning = ReasoningTrace{"because", 1, {}};
    CHECK_THROWS_AS(validate(s), InvariantViolation);
  }
  SUBCASE("fallback requires a rejecting verdict") {
    s.provenance = Provenance::Fallback;
    CHECK_THROWS_AS(validate(s), InvariantViolation);
  }
  SUBCASE("negative durations are rejected") {
    s.timing.tool_ms = Millis{-1};
    CHECK_THROWS_AS(validate(s), InvariantViolation);
  }
  SUBCASE("finish must be last") {
    Trajectory t;
    Step fin = s;
    fin.action = Action::finish("x");
    fin.observation = {ObservationKind::AnswerEcho, "x", Millis{0}};
    t.steps = {fin, s};
    CHECK_THROWS_AS(validate(t), InvariantViolation);
    t.steps = {s, fin};
    t.final_answer = "x";
    CHECK_NOTHROW(validate(t));
  }
}

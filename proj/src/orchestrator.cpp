// SPDX-License-Identifier: Apache-2.0
#include "specagent/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <future>
#include <thread>

#include <json.hpp>

namespace specagent {

using nlohmann::json;

// ============================================================================
// Configuration
// ============================================================================

std::string to_string(const VerifierPolicy& policy) {
  switch (policy.kind) {
    case VerifierPolicy::Kind::Semantic: return "semantic";
    case VerifierPolicy::Kind::Exact: return "exact";
    case VerifierPolicy::Kind::EditDistance: return "edit_distance:" + std::to_string(policy.limit);
    case VerifierPolicy::Kind::AlwaysAccept: return "always_accept";
    case VerifierPolicy::Kind::AlwaysReject: return "always_reject";
  }
  return "?";
}

VerifierPolicy parse_verifier_policy(std::string_view text) {
  if (text == "semantic") return {VerifierPolicy::Kind::Semantic, 0};
  if (text == "exact") return {VerifierPolicy::Kind::Exact, 0};
  if (text == "always_accept") return {VerifierPolicy::Kind::AlwaysAccept, 0};
  if (text == "always_reject") return {VerifierPolicy::Kind::AlwaysReject, 0};
  constexpr std::string_view prefix = "edit_distance:";
  if (text.substr(0, prefix.size()) == prefix) {
    const auto digits = std::string(text.substr(prefix.size()));
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      return {VerifierPolicy::Kind::EditDistance, static_cast<std::size_t>(std::stoull(digits))};
    }
  }
  throw std::invalid_argument("unknown verifier policy '" + std::string(text) + "'");
}

void validate(const RunConfig& c) {
  if (c.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (c.tau_think < 1) throw std::invalid_argument("tau_think must be positive");
  if (c.window < 1) throw std::invalid_argument("window must be positive");
  if (c.top_k < kMinJudgeTopK) throw std::invalid_argument("top_k must be >= 20");
  if (!(c.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (c.observation_cap < 1) throw std::invalid_argument("observation_cap must be positive");
  validate(c.variants);
}

namespace {

json params_json(const DecodingParams& p) {
  json j = {{"max_tokens", p.max_tokens}};
  j["temperature"] = p.temperature ? json(*p.temperature) : json(nullptr);
  j["top_p"] = p.top_p ? json(*p.top_p) : json(nullptr);
  j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  return j;
}

DecodingParams params_from_json(const json& j, DecodingParams p) {
  for (const auto& [k, v] : j.items()) {
    if (k == "max_tokens") {
      p.max_tokens = v.get<int>();
    } else if (k == "temperature") {
      p.temperature = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    } else if (k == "top_p") {
      p.top_p = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    } else if (k == "seed") {
      p.seed = v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>());
    } else {
      throw std::invalid_argument("unknown decoding parameter '" + k + "'");
    }
  }
  return p;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string run_config_json(const RunConfig& c) {
  json j = {{"tau", c.tau},
            {"tau_think", c.tau_think},
            {"max_steps", c.max_steps},
            {"verifier_policy", to_string(c.verifier_policy)},
            {"prefetch", c.prefetch},
            {"seed", c.seed},
            {"window", c.window},
            {"observation_cap", c.observation_cap},
            {"top_k", c.top_k},
            {"epsilon", c.epsilon},
            {"affirmative", c.variants.affirmative},
            {"negative", c.variants.negative},
            {"slm_params", params_json(c.slm_params)},
            {"llm_params", params_json(c.llm_params)},
            {"instructions", c.instructions}};
  return j.dump();
}

RunConfig run_config_from_json(std::string_view json_text, RunConfig c) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("run config must be an object");
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "tau") c.tau = v.get<double>();
      else if (k == "tau_think") c.tau_think = v.get<std::size_t>();
      else if (k == "max_steps") c.max_steps = v.get<std::size_t>();
      else if (k == "verifier_policy") c.verifier_policy = parse_verifier_policy(v.get<std::string>());
      else if (k == "prefetch") c.prefetch = v.get<bool>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "window") c.window = v.get<std::size_t>();
      else if (k == "observation_cap") c.observation_cap = v.get<std::size_t>();
      else if (k == "top_k") c.top_k = v.get<std::size_t>();
      else if (k == "epsilon") c.epsilon = v.get<double>();
      else if (k == "affirmative") c.variants.affirmative = v.get<std::set<std::string>>();
      else if (k == "negative") c.variants.negative = v.get<std::set<std::string>>();
      else if (k == "slm_params") c.slm_params = params_from_json(v, c.slm_params);
      else if (k == "llm_params") c.llm_params = params_from_json(v, c.llm_params);
      else if (k == "instructions") c.instructions = v.get<std::string>();
      else throw std::invalid_argument("unknown run config field '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("run config: ") + e.what());
  }
  return c;
}

std::string config_digest(const RunConfig& config) { return fnv1a_hex(run_config_json(config)); }

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::Finished: return "finished";
    case RunStatus::StepBudgetExhausted: return "step_budget_exhausted";
    case RunStatus::BackendUnavailable: return "backend_unavailable";
  }
  return "?";
}

double intervention_rate(std::size_t fallback_count, std::size_t step_count) noexcept {
  return step_count == 0 ? 0.0 : static_cast<double>(fallback_count) / static_cast<double>(step_count);
}

// ============================================================================
// Orchestrator
// ============================================================================

Orchestrator::Orchestrator(Backends backends, std::shared_ptr<ToolExecutor> tools, Clock& clock, RunConfig config)
    : backends_(std::move(backends)),
      tools_(std::move(tools)),
      clock_(clock),
      config_(std::move(config)),
      drafter_(backends_, clock_, DrafterConfig{config_.slm_params, config_.llm_params}),
      digest_(config_digest(config_)) {
  validate(config_);
  if (!tools_) throw std::invalid_argument("orchestrator requires a tool executor");
}

Orchestrator::Regenerated Orchestrator::regenerate(const std::string& prompt, std::size_t step) {
  GenerationRequest req;
  req.role = Role::LLM;
  req.step = step;
  req.context = prompt;
  req.mode = GenerationMode::WithReasoning;
  req.params = config_.llm_params;
  BackendResponse raw;
  try {
    raw = backends_.for_role(Role::LLM).generate(req);
  } catch (const BackendError& e) {
    throw BackendUnavailable("full-reasoning generation failed at step " + std::to_string(step) + ": " + e.what());
  }
  try {
    return {parse_model_output(raw), raw.latency};
  } catch (const ActionParseError& e) {
    throw BackendUnavailable("full-reasoning generation at step " + std::to_string(step) +
                             " produced no action: " + e.what());
  }
}

Observation Orchestrator::run_tool(const Action& action, Step& step) {
  auto obs = tools_->execute(action);
  clock_.account(obs.latency);
  step.timing.tool_ms += obs.latency;
  return obs;
}

void Orchestrator::append_to_context(AgentState& state, const Step& step) const {
  ContextEntry entry;
  if (step.reasoning) entry.reasoning = step.reasoning->text;
  entry.action = render_action(step.action);
  entry.observation = truncate_with_marker(step.observation.payload, config_.observation_cap);
  state.context.entries.push_back(std::move(entry));
}

Step Orchestrator::step(AgentState& state) {
  if (state.finished) throw std::logic_error("step() called after the task finished");
  const std::size_t index = state.step_index;
  const Millis start = clock_.now();
  const std::string prompt = render_agent_prompt(state.context, config_.instructions);

  Step step;
  const DraftPair pair = drafter_.draft_pair(prompt, index);
  step.timing.draft_slm_ms = latency_of(pair.system2);
  step.timing.draft_llm_ms = latency_of(pair.system1);
  step.drafts = {to_record(pair.system2), to_record(pair.system1)};

  std::optional<Draft> selected;
  try {
    selected = select_draft(pair, SelectionPolicy{config_.tau_think});
  } catch (const BothDraftsFailed&) {
  }

  std::optional<Observation> observation;
  std::optional<Regenerated> regenerated;  // filled when the large model already reasoned
  Verdict verdict = no_draft_verdict(config_.tau);

  if (selected) {
    const ReasoningTrace* reasoning = selected->reasoning ? &*selected->reasoning : nullptr;
    switch (config_.verifier_policy.kind) {
      case VerifierPolicy::Kind::Semantic: {
        SemanticVerifier verifier(backends_.for_role(Role::Critic),
                                  SemanticVerifierConfig{config_.tau, config_.window, config_.top_k, config_.epsilon,
                                                         config_.variants});
        if (config_.prefetch) {
          CancellationToken cancel;
          auto prefetch = std::async(std::launch::async, [&] {
            return tools_->execute(selected->action, cancel, ToolExecutor::CacheMode::ReadOnly);
          });
          auto result = verifier.verify(state.context, reasoning, selected->action, index);
          if (!result.verdict.accepted) cancel.cancel();
          auto prefetched = prefetch.get();
          verdict = result.verdict;
          step.timing.verify_ms = result.latency;
          if (verdict.accepted) {
            clock_.account(std::max(result.latency, prefetched.latency));
            tools_->remember(selected->action, prefetched);
            step.timing.tool_ms = prefetched.latency;
            observation = std::move(prefetched);
          } else {
            clock_.account(result.latency);
            step.prefetch_discarded = true;
          }
        } else {
          auto result = verifier.verify(state.context, reasoning, selected->action, index);
          clock_.account(result.latency);
          verdict = result.verdict;
          step.timing.verify_ms = result.latency;
        }
        break;
      }
      case VerifierPolicy::Kind::AlwaysAccept:
      case VerifierPolicy::Kind::AlwaysReject:
        verdict = fixed_verdict(config_.verifier_policy.kind == VerifierPolicy::Kind::AlwaysAccept);
        break;
      case VerifierPolicy::Kind::Exact:
      case VerifierPolicy::Kind::EditDistance: {
        // The reference action comes from full reasoning, which runs while the
        // draft's action executes speculatively.
        auto base = std::async(std::launch::async, [&] { return regenerate(prompt, index); });
        auto speculative = tools_->execute(selected->action, {}, ToolExecutor::CacheMode::ReadOnly);
        regenerated = base.get();
        clock_.account(std::max(regenerated->latency, speculative.latency));
        step.timing.fallback_reasoning_ms = regenerated->latency;
        const auto policy = config_.verifier_policy.kind == VerifierPolicy::Kind::Exact
                                ? MatchPolicy::exact()
                                : MatchPolicy::within(config_.verifier_policy.limit);
        verdict = match_verdict(selected->action, regenerated->output.action, policy);
        if (verdict.accepted) {
          tools_->remember(selected->action, speculative);
          step.timing.tool_ms = speculative.latency;
          observation = std::move(speculative);
        } else {
          step.prefetch_discarded = true;
        }
        break;
      }
    }
  }

  step.verdict = verdict;
  if (verdict.accepted) {
    step.provenance = selected->source == DraftSource::System2 ? Provenance::System2Draft : Provenance::System1Draft;
    step.reasoning = selected->reasoning;
    step.action = selected->action;
    step.action_logprobs = selected->action_logprobs;
    step.observation = observation ? std::move(*observation) : run_tool(step.action, step);
  } else {
    if (!regenerated) {
      regenerated = regenerate(prompt, index);
      clock_.account(regenerated->latency);
      step.timing.fallback_reasoning_ms = regenerated->latency;
    }
    step.provenance = Provenance::Fallback;
    step.reasoning = std::move(regenerated->output.reasoning);
    step.action = std::move(regenerated->output.action);
    step.action_logprobs = std::move(regenerated->output.action_logprobs);
    step.observation = run_tool(step.action, step);
  }

  step.timing.wall_step_ms = clock_.now() - start;
  append_to_context(state, step);
  state.step_index += 1;
  state.finished = step.action.kind() == ActionKind::Finish;
  return step;
}

Step Orchestrator::baseline_step(AgentState& state) {
  if (state.finished) throw std::logic_error("baseline_step() called after the task finished");
  const std::size_t index = state.step_index;
  const Millis start = clock_.now();
  const std::string prompt = render_agent_prompt(state.context, config_.instructions);

  Step step;
  auto regenerated = regenerate(prompt, index);
  clock_.account(regenerated.latency);
  step.timing.fallback_reasoning_ms = regenerated.latency;
  step.provenance = Provenance::Fallback;
  step.verdict = fixed_verdict(false);
  step.reasoning = std::move(regenerated.output.reasoning);
  step.action = std::move(regenerated.output.action);
  step.action_logprobs = std::move(regenerated.output.action_logprobs);
  step.observation = run_tool(step.action, step);
  step.timing.wall_step_ms = clock_.now() - start;

  append_to_context(state, step);
  state.step_index += 1;
  state.finished = step.action.kind() == ActionKind::Finish;
  return step;
}

RunReport Orchestrator::run(const std::string& question, const std::string& task_id, StepFn fn) {
  RunReport report;
  report.trajectory.task_id = task_id;
  report.trajectory.question = question;
  report.trajectory.config_digest = digest_;

  AgentState state;
  state.context.question = question;
  const Millis start = clock_.now();
  report.status = RunStatus::StepBudgetExhausted;
  try {
    while (state.step_index < config_.max_steps) {
      Step s = (this->*fn)(state);
      if (s.provenance == Provenance::Fallback) {
        ++report.fallback_count;
      } else {
        ++report.accept_count;
      }
      if (state.finished) report.trajectory.final_answer = s.action.as<FinishAction>()->answer;
      report.trajectory.steps.push_back(std::move(s));
      if (state.finished) {
        report.status = RunStatus::Finished;
        break;
      }
    }
  } catch (const BackendUnavailable& e) {
    report.status = RunStatus::BackendUnavailable;
    report.error = e.what();
  }
  report.step_count = report.trajectory.steps.size();
  report.intervention_rate = intervention_rate(report.fallback_count, report.step_count);
  report.wall_ms = clock_.now() - start;
  return report;
}

RunReport Orchestrator::run_task(const std::string& question, const std::string& task_id) {
  return run(question, task_id, &Orchestrator::step);
}

RunReport Orchestrator::run_baseline(const std::string& question, const std::string& task_id) {
  return run(question, task_id, &Orchestrator::baseline_step);
}

std::vector<RunReport> run_tasks_parallel(std::size_t count, std::size_t parallel,
                                          const std::function<RunReport(std::size_t)>& run_one) {
  std::vector<RunReport> reports(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        reports[i] = run_one(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallel, count));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

}  // namespace specagent

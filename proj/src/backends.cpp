// SPDX-License-Identifier: Apache-2.0
#include "specagent/backends.hpp"

#include <cmath>

namespace specagent {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::SLM: return "slm";
    case Role::LLM: return "llm";
    case Role::Critic: return "critic";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
  for (auto r : {Role::SLM, Role::LLM, Role::Critic}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::string_view to_string(GenerationMode mode) noexcept {
  return mode == GenerationMode::WithReasoning ? "with_reasoning" : "action_only";
}

std::optional<GenerationMode> parse_generation_mode(std::string_view text) noexcept {
  if (text == "with_reasoning") return GenerationMode::WithReasoning;
  if (text == "action_only") return GenerationMode::ActionOnly;
  return std::nullopt;
}

std::string_view to_string(FinishReason reason) noexcept {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "?";
}

std::optional<FinishReason> parse_finish_reason(std::string_view text) noexcept {
  for (auto r : {FinishReason::Stop, FinishReason::Length, FinishReason::Error}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::string_view to_string(BackendErrorKind kind) noexcept {
  switch (kind) {
    case BackendErrorKind::Timeout: return "timeout";
    case BackendErrorKind::WireError: return "wire";
    case BackendErrorKind::MalformedResponse: return "malformed";
    case BackendErrorKind::InsufficientTopK: return "insufficient_topk";
  }
  return "?";
}

void validate(const NextTokenDistribution& dist) {
  if (dist.entries.size() != dist.k) throw InvariantViolation("distribution size differs from k");
  double mass = 0.0;
  for (std::size_t i = 0; i < dist.entries.size(); ++i) {
    const double lp = dist.entries[i].logprob;
    if (!(lp <= 0.0)) throw InvariantViolation("distribution logprob > 0");
    if (i > 0 && lp > dist.entries[i - 1].logprob) throw InvariantViolation("distribution not sorted descending");
    mass += std::exp(lp);
  }
  if (mass > 1.0 + 1e-6) throw InvariantViolation("distribution mass exceeds 1");
}

void validate(const BackendResponse& response) {
  if (!response.token_logprobs.empty() && response.tokens.size() != response.token_logprobs.size()) {
    throw InvariantViolation("tokens and token_logprobs differ in length");
  }
  for (double lp : response.token_logprobs) {
    if (!(lp <= 0.0)) throw InvariantViolation("token logprob > 0");
  }
  if (response.latency.count() < 0) throw InvariantViolation("negative latency");
}

void check_preconditions(const GenerationRequest& request) {
  if (request.context.empty()) throw std::invalid_argument("generation context must be non-empty");
  if (request.params.max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

void check_preconditions(const JudgeRequest& request) {
  if (request.prompt.empty()) throw std::invalid_argument("judge prompt must be non-empty");
  if (request.k < kMinJudgeTopK) {
    throw std::invalid_argument("judge top-k must be at least " + std::to_string(kMinJudgeTopK));
  }
}

ModelBackend& Backends::for_role(Role role) const {
  const std::shared_ptr<ModelBackend>* slot = nullptr;
  switch (role) {
    case Role::SLM: slot = &slm; break;
    case Role::LLM: slot = &llm; break;
    case Role::Critic: slot = &critic; break;
  }
  if (!slot || !*slot) throw std::logic_error("no backend configured for role " + std::string(to_string(role)));
  return **slot;
}

}  // namespace specagent

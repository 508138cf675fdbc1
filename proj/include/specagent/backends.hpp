// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "specagent/core.hpp"

namespace specagent {

enum class Role { SLM, LLM, Critic };
enum class GenerationMode { WithReasoning, ActionOnly };
enum class FinishReason { Stop, Length, Error };

std::string_view to_string(Role role) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;
std::string_view to_string(GenerationMode mode) noexcept;
std::optional<GenerationMode> parse_generation_mode(std::string_view text) noexcept;
std::string_view to_string(FinishReason reason) noexcept;
std::optional<FinishReason> parse_finish_reason(std::string_view text) noexcept;

struct DecodingParams {
  int max_tokens = 4096;
  // No claim of fidelity to any published setting; purely configuration.
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<std::uint64_t> seed;
};

struct BackendResponse {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;  // natural log; when present, one per token
  FinishReason finish_reason = FinishReason::Stop;
  Millis latency{0};

  bool operator==(const BackendResponse&) const = default;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  bool operator==(const TokenLogprob&) const = default;
};

/// Top-k next-token candidates, sorted by logprob descending.
struct NextTokenDistribution {
  std::vector<TokenLogprob> entries;
  std::size_t k = 0;
  Millis latency{0};

  bool operator==(const NextTokenDistribution&) const = default;
};

/// Throws InvariantViolation if the entries are unsorted, the count differs
/// from k, or the probability mass exceeds 1 + 1e-6.
void validate(const NextTokenDistribution& dist);
void validate(const BackendResponse& response);

enum class BackendErrorKind { Timeout, WireError, MalformedResponse, InsufficientTopK };

std::string_view to_string(BackendErrorKind kind) noexcept;

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what, Millis latency = Millis{0})
      : std::runtime_error(what), kind_(kind), latency_(latency) {}
  BackendErrorKind kind() const noexcept { return kind_; }
  /// Time spent before the failure surfaced.
  Millis latency() const noexcept { return latency_; }

 private:
  BackendErrorKind kind_;
  Millis latency_;
};

struct GenerationRequest {
  Role role = Role::SLM;
  std::size_t step = 0;  // loop step index; scripted backends key on it
  std::string context;
  GenerationMode mode = GenerationMode::WithReasoning;
  DecodingParams params;
};

struct JudgeRequest {
  Role role = Role::Critic;
  std::size_t step = 0;
  std::string prompt;
  std::size_t k = 20;
};

/// Minimum top-k accepted by judge_next_token.
inline constexpr std::size_t kMinJudgeTopK = 20;

/// Uniform model contract. Implementations must accept concurrent calls.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  /// Throws BackendError; std::invalid_argument on precondition violations.
  virtual BackendResponse generate(const GenerationRequest& request) = 0;
  virtual NextTokenDistribution judge_next_token(const JudgeRequest& request) = 0;
};

/// Shared preconditions, checked by every implementation.
void check_preconditions(const GenerationRequest& request);
void check_preconditions(const JudgeRequest& request);

/// The three model roles of a speculative run. The same backend may serve
/// more than one role.
struct Backends {
  std::shared_ptr<ModelBackend> slm;
  std::shared_ptr<ModelBackend> llm;
  std::shared_ptr<ModelBackend> critic;

  ModelBackend& for_role(Role role) const;
};

}  // namespace specagent

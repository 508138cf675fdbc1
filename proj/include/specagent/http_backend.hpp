// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "specagent/backends.hpp"

namespace specagent {

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
struct HttpBackendConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the bearer token; empty = none
  int timeout_ms = 120000;
  int max_retries = 2;
  int backoff_initial_ms = 250;

  std::string system_prompt;
  /// Appended to the system prompt for ActionOnly generations.
  std::string action_only_directive =
      "Respond with the next action only. Do not think step by step and do not write any reasoning.";
  /// Also ask the server to disable its reasoning channel for ActionOnly
  /// generations (chat_template_kwargs.enable_thinking = false).
  bool suppress_reasoning_channel = true;
};

/**
 * Chat-completion client that requests per-token logprobs.
 *
 * generate() asks for logprobs on the sampled tokens; judge_next_token()
 * generates a single token and returns its top-k alternatives. Transport
 * failures are retried up to max_retries times with exponential backoff.
 */
class HttpChatBackend final : public ModelBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  BackendResponse generate(const GenerationRequest& request) override;
  NextTokenDistribution judge_next_token(const JudgeRequest& request) override;

  const HttpBackendConfig& config() const noexcept { return config_; }

  /// Request bodies, exposed for inspection in tests.
  std::string build_generate_body(const GenerationRequest& request) const;
  std::string build_judge_body(const JudgeRequest& request) const;

 private:
  std::string post(const std::string& body, Millis& elapsed) const;

  HttpBackendConfig config_;
  std::string auth_token_;
};

/// Parses a chat-completions response body. Reasoning returned in a separate
/// reasoning_content field is folded back in as a leading <think> block.
/// Throws BackendError(MalformedResponse).
BackendResponse parse_chat_completion(std::string_view body);

/// Parses the first generated token's top_logprobs. Throws
/// BackendError(InsufficientTopK) when fewer than k alternatives are present.
NextTokenDistribution parse_judge_completion(std::string_view body, std::size_t k);

}  // namespace specagent

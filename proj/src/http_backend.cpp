// SPDX-License-Identifier: Apache-2.0
#include "specagent/http_backend.hpp"

#include <algorithm>

#include <json.hpp>

#include "http_client.hpp"

namespace specagent {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw BackendError(BackendErrorKind::MalformedResponse, "malformed chat completion: " + why);
}

const json& first_choice(const json& doc) {
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    malformed("missing choices");
  }
  return doc["choices"][0];
}

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
}

}  // namespace

BackendResponse parse_chat_completion(std::string_view body) {
  const json doc = parse_body(body);
  const json& choice = first_choice(doc);
  BackendResponse out;
  try {
    const json& message = choice.at("message");
    std::string content = message.contains("content") && message["content"].is_string()
                              ? message["content"].get<std::string>()
                              : std::string();
    if (message.contains("reasoning_content") && message["reasoning_content"].is_string()) {
      out.text = "<think>" + message["reasoning_content"].get<std::string>() + "</think>\n" + content;
    } else {
      out.text = std::move(content);
    }
    const std::string reason = choice.value("finish_reason", std::string("stop"));
    out.finish_reason = reason == "length" ? FinishReason::Length
                        : (reason == "stop" || reason == "tool_calls") ? FinishReason::Stop
                                                                        : FinishReason::Error;
    if (choice.contains("logprobs") && choice["logprobs"].is_object() && choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
      for (const auto& tok : choice["logprobs"]["content"]) {
        out.tokens.push_back(tok.at("token").get<std::string>());
        out.token_logprobs.push_back(std::min(0.0, tok.at("logprob").get<double>()));
      }
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return out;
}

NextTokenDistribution parse_judge_completion(std::string_view body, std::size_t k) {
  const json doc = parse_body(body);
  const json& choice = first_choice(doc);
  NextTokenDistribution dist;
  try {
    const json& content = choice.at("logprobs").at("content");
    if (!content.is_array() || content.empty()) malformed("no generated token");
    for (const auto& alt : content[0].at("top_logprobs")) {
      dist.entries.push_back({alt.at("token").get<std::string>(), std::min(0.0, alt.at("logprob").get<double>())});
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  if (dist.entries.size() < k) {
    throw BackendError(BackendErrorKind::InsufficientTopK, "endpoint returned " + std::to_string(dist.entries.size()) +
                                                               " alternatives, wanted " + std::to_string(k));
  }
  std::stable_sort(dist.entries.begin(), dist.entries.end(),
                   [](const TokenLogprob& a, const TokenLogprob& b) { return a.logprob > b.logprob; });
  dist.entries.resize(k);
  dist.k = k;
  return dist;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : config_(std::move(config)), auth_token_(detail::token_from_env(config_.api_key_env)) {
  if (config_.base_url.empty()) throw std::invalid_argument("http backend requires base_url");
  if (config_.timeout_ms <= 0) throw std::invalid_argument("http backend timeout_ms must be positive");
}

std::string HttpChatBackend::build_generate_body(const GenerationRequest& request) const {
  std::string system = config_.system_prompt;
  if (request.mode == GenerationMode::ActionOnly) {
    if (!system.empty()) system += "\n\n";
    system += config_.action_only_directive;
  }
  json messages = json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", request.context}});

  json body = {{"model", config_.model},
               {"messages", messages},
               {"max_tokens", request.params.max_tokens},
               {"logprobs", true}};
  if (request.params.temperature) body["temperature"] = *request.params.temperature;
  if (request.params.top_p) body["top_p"] = *request.params.top_p;
  if (request.params.seed) body["seed"] = *request.params.seed;
  if (request.mode == GenerationMode::ActionOnly && config_.suppress_reasoning_channel) {
    body["chat_template_kwargs"] = {{"enable_thinking", false}};
  }
  return body.dump();
}

std::string HttpChatBackend::build_judge_body(const JudgeRequest& request) const {
  json body = {{"model", config_.model},
               {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
               {"max_tokens", 1},
               {"temperature", 0.0},
               {"logprobs", true},
               {"top_logprobs", request.k},
               {"chat_template_kwargs", {{"enable_thinking", false}}}};
  return body.dump();
}

std::string HttpChatBackend::post(const std::string& body, Millis& elapsed) const {
  detail::HttpOptions options;
  options.timeout_ms = config_.timeout_ms;
  options.max_retries = config_.max_retries;
  options.backoff_initial_ms = config_.backoff_initial_ms;
  if (!auth_token_.empty()) options.headers.emplace_back("Authorization", "Bearer " + auth_token_);
  try {
    auto reply = detail::http_post(config_.base_url, config_.path, body, options);
    elapsed = reply.elapsed;
    return std::move(reply.body);
  } catch (const detail::HttpTransportError& e) {
    throw BackendError(e.timeout() ? BackendErrorKind::Timeout : BackendErrorKind::WireError, e.what(), e.elapsed());
  }
}

BackendResponse HttpChatBackend::generate(const GenerationRequest& request) {
  check_preconditions(request);
  Millis elapsed{0};
  const auto body = post(build_generate_body(request), elapsed);
  auto response = parse_chat_completion(body);
  response.latency = elapsed;
  return response;
}

NextTokenDistribution HttpChatBackend::judge_next_token(const JudgeRequest& request) {
  check_preconditions(request);
  Millis elapsed{0};
  const auto body = post(build_judge_body(request), elapsed);
  auto dist = parse_judge_completion(body, request.k);
  dist.latency = elapsed;
  return dist;
}

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Internal blocking HTTP helper shared by the model and tool clients.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specagent/core.hpp"

namespace specagent::detail {

struct HttpOptions {
  int timeout_ms = 30000;
  int max_retries = 2;
  int backoff_initial_ms = 250;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpReply {
  int status = 0;
  std::string body;
  Millis elapsed{0};
};

class HttpTransportError : public std::runtime_error {
 public:
  HttpTransportError(const std::string& what, bool timeout, int status, Millis elapsed)
      : std::runtime_error(what), timeout_(timeout), status_(status), elapsed_(elapsed) {}
  bool timeout() const noexcept { return timeout_; }
  int status() const noexcept { return status_; }
  Millis elapsed() const noexcept { return elapsed_; }

 private:
  bool timeout_;
  int status_;
  Millis elapsed_;
};

/// Retries transport failures, 429 and 5xx. Throws HttpTransportError once the
/// retry budget is spent or on any other non-2xx status.
HttpReply http_post(const std::string& base_url, const std::string& path, const std::string& body,
                    const HttpOptions& options);
HttpReply http_get(const std::string& base_url, const std::string& path, const HttpOptions& options);

std::string url_encode(const std::string& value);

/// Bearer token from the named environment variable; empty when unset.
std::string token_from_env(const std::string& variable);

}  // namespace specagent::detail

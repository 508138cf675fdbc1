// SPDX-License-Identifier: Apache-2.0
#include "http_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "specagent/clock.hpp"

namespace specagent::detail {

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

template <typename Call>
HttpReply with_retries(const std::string& base_url, const HttpOptions& options, Call&& call) {
  Stopwatch total;
  int backoff = options.backoff_initial_ms;
  for (int attempt = 0;; ++attempt) {
    httplib::Client client(base_url);
    client.set_connection_timeout(std::chrono::milliseconds(options.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(options.timeout_ms));

    httplib::Headers headers;
    for (const auto& [k, v] : options.headers) headers.emplace(k, v);

    httplib::Result result = call(client, headers);
    const bool last = attempt >= options.max_retries;
    if (result) {
      const int status = result->status;
      if (status >= 200 && status < 300) return HttpReply{status, result->body, total.elapsed()};
      if (last || !retryable_status(status)) {
        throw HttpTransportError("HTTP " + std::to_string(status) + " from " + base_url, false, status,
                                 total.elapsed());
      }
    } else {
      const auto err = result.error();
      const bool timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      if (last) {
        throw HttpTransportError("request to " + base_url + " failed: " + httplib::to_string(err), timeout, 0,
                                 total.elapsed());
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
    backoff *= 2;
  }
}

}  // namespace

HttpReply http_post(const std::string& base_url, const std::string& path, const std::string& body,
                    const HttpOptions& options) {
  return with_retries(base_url, options, [&](httplib::Client& c, const httplib::Headers& h) {
    return c.Post(path, h, body, "application/json");
  });
}

HttpReply http_get(const std::string& base_url, const std::string& path, const HttpOptions& options) {
  return with_retries(base_url, options, [&](httplib::Client& c, const httplib::Headers& h) { return c.Get(path, h); });
}

std::string url_encode(const std::string& value) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : value) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string token_from_env(const std::string& variable) {
  if (variable.empty()) return {};
  const char* value = std::getenv(variable.c_str());
  return value ? std::string(value) : std::string();
}

}  // namespace specagent::detail

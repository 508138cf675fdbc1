// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "specagent/backends.hpp"
#include "specagent/core.hpp"

namespace specagent {

struct SearchItem {
  std::string url;
  std::string title;
  std::string snippet;
  bool operator==(const SearchItem&) const = default;
};

struct SearchResults {
  std::vector<SearchItem> items;
  std::string query_echo;
  bool operator==(const SearchResults&) const = default;
};

struct Extraction {
  std::string url;
  std::string instruction_echo;
  std::string content;
  bool operator==(const Extraction&) const = default;
};

template <typename T>
struct ToolResult {
  T value;
  Millis latency{0};
};

enum class ToolErrorKind { ToolTimeout, NoFixture, WireError, Unsupported };

std::string_view to_string(ToolErrorKind kind) noexcept;

class ToolError : public std::runtime_error {
 public:
  ToolError(ToolErrorKind kind, const std::string& what, Millis latency = Millis{0})
      : std::runtime_error(what), kind_(kind), latency_(latency) {}
  ToolErrorKind kind() const noexcept { return kind_; }
  Millis latency() const noexcept { return latency_; }

 private:
  ToolErrorKind kind_;
  Millis latency_;
};

/// Shared cancellation flag. Copies observe the same state.
class CancellationToken {
 public:
  CancellationToken() : flag_(std::make_shared<std::atomic<bool>>(false)) {}
  void cancel() const noexcept { flag_->store(true); }
  bool cancelled() const noexcept { return flag_->load(); }

 private:
  std::shared_ptr<std::atomic<bool>> flag_;
};

/// http(s)://host[...] with no whitespace.
bool is_valid_url(std::string_view url) noexcept;

class ToolBackend {
 public:
  virtual ~ToolBackend() = default;
  virtual ToolResult<SearchResults> search(const std::string& query, const CancellationToken& cancel) = 0;
  virtual ToolResult<Extraction> visit(const std::string& url, const std::string& instruction,
                                       const CancellationToken& cancel) = 0;
  virtual ToolResult<std::string> call_other(const OtherToolAction& call, const CancellationToken& cancel) = 0;
};

/**
 * Fixture tool backend keyed by exact query text and exact URL.
 *
 *   {
 *     "version": 1,
 *     "search": {"capital of France": {"latency_ms": 800,
 *                 "items": [{"url": "...", "title": "...", "snippet": "..."}]}},
 *     "visit":  {"http://a": {"latency_ms": 1200, "content": "..."}}
 *   }
 *
 * OtherTool calls are rejected with ToolErrorKind::Unsupported.
 */
class FixtureToolBackend final : public ToolBackend {
 public:
  struct SearchFixture {
    std::vector<SearchItem> items;
    Millis latency{0};
  };
  struct VisitFixture {
    std::string content;
    Millis latency{0};
  };

  FixtureToolBackend() = default;
  FixtureToolBackend(std::map<std::string, SearchFixture> searches, std::map<std::string, VisitFixture> visits)
      : searches_(std::move(searches)), visits_(std::move(visits)) {}
  /// Moves the fixtures; call counters start over.
  FixtureToolBackend(FixtureToolBackend&& other) noexcept
      : searches_(std::move(other.searches_)), visits_(std::move(other.visits_)) {}

  static FixtureToolBackend parse(std::string_view document);
  static FixtureToolBackend load(const std::filesystem::path& path);

  ToolResult<SearchResults> search(const std::string& query, const CancellationToken& cancel) override;
  ToolResult<Extraction> visit(const std::string& url, const std::string& instruction,
                               const CancellationToken& cancel) override;
  ToolResult<std::string> call_other(const OtherToolAction& call, const CancellationToken& cancel) override;

  std::size_t search_calls() const noexcept { return search_calls_.load(); }
  std::size_t visit_calls() const noexcept { return visit_calls_.load(); }
  std::size_t total_calls() const noexcept { return search_calls() + visit_calls() + other_calls_.load(); }

 private:
  std::map<std::string, SearchFixture> searches_;
  std::map<std::string, VisitFixture> visits_;
  std::atomic<std::size_t> search_calls_{0};
  std::atomic<std::size_t> visit_calls_{0};
  std::atomic<std::size_t> other_calls_{0};
};

struct HttpToolConfig {
  // Web search: GET {search_base_url}{search_path}?q=...&count=N, Bing-style
  // response (webPages.value[].{url,name,snippet}).
  std::string search_base_url;
  std::string search_path = "/v7.0/search";
  std::string search_key_env;
  std::string search_key_header = "Ocp-Apim-Subscription-Key";
  std::size_t search_count = 10;

  // Page reader: GET {reader_base_url}/{url} returning page text.
  std::string reader_base_url;
  std::string reader_key_env;

  // OtherTool pass-through: POST {other_tool_base_url}/tools/{name} with the
  // args as a JSON object; the response body is the tool output. Empty
  // rejects OtherTool calls.
  std::string other_tool_base_url;

  int timeout_ms = 30000;
  int max_retries = 2;
  int backoff_initial_ms = 250;
};

/**
 * Live tool backend. Visit fetches the page through the reader endpoint and,
 * when a summarizer model is attached, asks it to extract the content relevant
 * to the instruction.
 */
class HttpToolBackend final : public ToolBackend {
 public:
  HttpToolBackend(HttpToolConfig config, std::shared_ptr<ModelBackend> summarizer = nullptr);

  ToolResult<SearchResults> search(const std::string& query, const CancellationToken& cancel) override;
  ToolResult<Extraction> visit(const std::string& url, const std::string& instruction,
                               const CancellationToken& cancel) override;
  ToolResult<std::string> call_other(const OtherToolAction& call, const CancellationToken& cancel) override;

 private:
  HttpToolConfig config_;
  std::shared_ptr<ModelBackend> summarizer_;
};

/// Thread-safe LRU map.
template <typename K, typename V>
class LruCache {
 public:
  explicit LruCache(std::size_t capacity) : capacity_(capacity) {}

  std::optional<V> get(const K& key) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
  }

  void put(const K& key, V value) {
    if (capacity_ == 0) return;
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
      it->second->second = std::move(value);
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    order_.emplace_front(key, std::move(value));
    index_[key] = order_.begin();
    if (order_.size() > capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::pair<K, V>> order_;
  std::unordered_map<K, typename std::list<std::pair<K, V>>::iterator> index_;
};

struct ToolsConfig {
  std::size_t max_results = 10;
  std::size_t content_cap = 8192;
  std::size_t cache_capacity = 1024;
  bool cache_enabled = true;
};

inline constexpr std::string_view kTruncationMarker = "\n[...truncated]";

/// Truncates to at most `cap` bytes including the marker, never splitting a
/// UTF-8 sequence. Text within the cap is returned unchanged.
std::string truncate_with_marker(std::string text, std::size_t cap);

std::string render_search_results(const SearchResults& results);
std::string render_extraction(const Extraction& extraction);

/**
 * Front door for tool execution: validates actions, enforces result caps,
 * and caches observations keyed by the canonical rendered action. Cache hits
 * report zero latency.
 */
class ToolExecutor {
 public:
  enum class CacheMode { ReadWrite, ReadOnly };

  ToolExecutor(std::shared_ptr<ToolBackend> backend, ToolsConfig config = {});

  /// Throws std::invalid_argument on precondition violations, ToolError otherwise.
  ToolResult<SearchResults> execute_search(const std::string& query, const CancellationToken& cancel = {});
  ToolResult<Extraction> execute_visit(const std::string& url, const std::string& instruction,
                                       const CancellationToken& cancel = {});

  /// Runs any action and always yields an Observation; tool failures become
  /// ToolError observations. Finish echoes the answer without a backend call.
  Observation execute(const Action& action, const CancellationToken& cancel = {},
                      CacheMode mode = CacheMode::ReadWrite);

  /// Stores an observation obtained with CacheMode::ReadOnly.
  void remember(const Action& action, const Observation& observation);

  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  const ToolsConfig& config() const noexcept { return config_; }
  ToolBackend& backend() noexcept { return *backend_; }

 private:
  Observation run_uncached(const Action& action, const CancellationToken& cancel);

  std::shared_ptr<ToolBackend> backend_;
  ToolsConfig config_;
  LruCache<std::string, Observation> cache_;
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#include "specagent/tools.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "http_client.hpp"

namespace specagent {

using nlohmann::json;

std::string_view to_string(ToolErrorKind kind) noexcept {
  switch (kind) {
    case ToolErrorKind::ToolTimeout: return "tool_timeout";
    case ToolErrorKind::NoFixture: return "no_fixture";
    case ToolErrorKind::WireError: return "wire_error";
    case ToolErrorKind::Unsupported: return "unsupported";
  }
  return "?";
}

bool is_valid_url(std::string_view url) noexcept {
  std::string_view rest;
  if (url.substr(0, 7) == "http://") {
    rest = url.substr(7);
  } else if (url.substr(0, 8) == "https://") {
    rest = url.substr(8);
  } else {
    return false;
  }
  const auto host_end = rest.find_first_of("/?#");
  const auto host = rest.substr(0, host_end);
  if (host.empty() || host.front() == ':' || host.front() == '.') return false;
  return std::none_of(url.begin(), url.end(),
                      [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '<' || c == '>'; });
}

std::string truncate_with_marker(std::string text, std::size_t cap) {
  if (text.size() <= cap) return text;
  if (cap <= kTruncationMarker.size()) return std::string(kTruncationMarker.substr(0, cap));
  std::size_t keep = cap - kTruncationMarker.size();
  // Back off over UTF-8 continuation bytes.
  while (keep > 0 && (static_cast<unsigned char>(text[keep]) & 0xC0) == 0x80) --keep;
  text.resize(keep);
  text += kTruncationMarker;
  return text;
}

std::string render_search_results(const SearchResults& results) {
  std::ostringstream out;
  out << "Search results for \"" << results.query_echo << "\":";
  if (results.items.empty()) out << "\n(no results)";
  for (std::size_t i = 0; i < results.items.size(); ++i) {
    const auto& item = results.items[i];
    out << "\n[" << (i + 1) << "] " << item.title << "\nURL: " << item.url;
    if (!item.snippet.empty()) out << "\n" << item.snippet;
  }
  return out.str();
}

std::string render_extraction(const Extraction& extraction) {
  return "Content of " + extraction.url + " (" + extraction.instruction_echo + "):\n" + extraction.content;
}

// ============================================================================
// Fixture backend
// ============================================================================

FixtureToolBackend FixtureToolBackend::parse(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("fixture parse error: ") + e.what());
  }
  if (!doc.is_object() || doc.value("version", 0) != 1) {
    throw std::runtime_error("fixture: unsupported or missing version (expected 1)");
  }
  for (const auto& [name, _] : doc.items()) {
    if (name != "version" && name != "search" && name != "visit") {
      throw std::runtime_error("fixture: unknown top-level field '" + name + "'");
    }
  }
  std::map<std::string, SearchFixture> searches;
  std::map<std::string, VisitFixture> visits;
  try {
    if (doc.contains("search")) {
      for (const auto& [query, body] : doc["search"].items()) {
        SearchFixture f;
        f.latency = Millis{body.value("latency_ms", std::int64_t{0})};
        for (const auto& item : body.at("items")) {
          SearchItem si{item.at("url").get<std::string>(), item.value("title", std::string()),
                        item.value("snippet", std::string())};
          if (si.url.empty()) throw std::runtime_error("fixture: empty url in search '" + query + "'");
          f.items.push_back(std::move(si));
        }
        searches.emplace(query, std::move(f));
      }
    }
    if (doc.contains("visit")) {
      for (const auto& [url, body] : doc["visit"].items()) {
        VisitFixture f;
        f.latency = Millis{body.value("latency_ms", std::int64_t{0})};
        f.content = body.at("content").get<std::string>();
        visits.emplace(url, std::move(f));
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("fixture schema error: ") + e.what());
  }
  return FixtureToolBackend(std::move(searches), std::move(visits));
}

FixtureToolBackend FixtureToolBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fixture file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

ToolResult<SearchResults> FixtureToolBackend::search(const std::string& query, const CancellationToken&) {
  ++search_calls_;
  auto it = searches_.find(query);
  if (it == searches_.end()) throw ToolError(ToolErrorKind::NoFixture, "no search fixture for query \"" + query + "\"");
  return {SearchResults{it->second.items, query}, it->second.latency};
}

ToolResult<Extraction> FixtureToolBackend::visit(const std::string& url, const std::string& instruction,
                                                 const CancellationToken&) {
  ++visit_calls_;
  auto it = visits_.find(url);
  if (it == visits_.end()) throw ToolError(ToolErrorKind::NoFixture, "no visit fixture for " + url);
  return {Extraction{url, instruction, it->second.content}, it->second.latency};
}

ToolResult<std::string> FixtureToolBackend::call_other(const OtherToolAction& call, const CancellationToken&) {
  ++other_calls_;
  throw ToolError(ToolErrorKind::Unsupported, "tool '" + call.name + "' is not available in fixture mode");
}

// ============================================================================
// HTTP backend
// ============================================================================

namespace {

detail::HttpOptions options_for(const HttpToolConfig& c) {
  detail::HttpOptions o;
  o.timeout_ms = c.timeout_ms;
  o.max_retries = c.max_retries;
  o.backoff_initial_ms = c.backoff_initial_ms;
  return o;
}

[[noreturn]] void rethrow_transport(const detail::HttpTransportError& e) {
  throw ToolError(e.timeout() ? ToolErrorKind::ToolTimeout : ToolErrorKind::WireError, e.what(), e.elapsed());
}

}  // namespace

HttpToolBackend::HttpToolBackend(HttpToolConfig config, std::shared_ptr<ModelBackend> summarizer)
    : config_(std::move(config)), summarizer_(std::move(summarizer)) {}

ToolResult<SearchResults> HttpToolBackend::search(const std::string& query, const CancellationToken& cancel) {
  if (config_.search_base_url.empty()) throw ToolError(ToolErrorKind::Unsupported, "no search endpoint configured");
  if (cancel.cancelled()) throw ToolError(ToolErrorKind::WireError, "cancelled");
  auto options = options_for(config_);
  if (auto key = detail::token_from_env(config_.search_key_env); !key.empty()) {
    options.headers.emplace_back(config_.search_key_header, key);
  }
  const std::string path = config_.search_path + "?q=" + detail::url_encode(query) +
                           "&count=" + std::to_string(config_.search_count);
  try {
    auto reply = detail::http_get(config_.search_base_url, path, options);
    SearchResults results{{}, query};
    const auto doc = json::parse(reply.body);
    if (doc.contains("webPages") && doc["webPages"].contains("value")) {
      for (const auto& v : doc["webPages"]["value"]) {
        SearchItem item{v.value("url", std::string()), v.value("name", std::string()),
                        v.value("snippet", std::string())};
        if (!item.url.empty()) results.items.push_back(std::move(item));
      }
    }
    return {std::move(results), reply.elapsed};
  } catch (const detail::HttpTransportError& e) {
    rethrow_transport(e);
  } catch (const json::exception& e) {
    throw ToolError(ToolErrorKind::WireError, std::string("malformed search response: ") + e.what());
  }
}

ToolResult<Extraction> HttpToolBackend::visit(const std::string& url, const std::string& instruction,
                                              const CancellationToken& cancel) {
  if (config_.reader_base_url.empty()) throw ToolError(ToolErrorKind::Unsupported, "no reader endpoint configured");
  if (cancel.cancelled()) throw ToolError(ToolErrorKind::WireError, "cancelled");
  auto options = options_for(config_);
  if (auto key = detail::token_from_env(config_.reader_key_env); !key.empty()) {
    options.headers.emplace_back("Authorization", "Bearer " + key);
  }
  detail::HttpReply page;
  try {
    page = detail::http_get(config_.reader_base_url, "/" + url, options);
  } catch (const detail::HttpTransportError& e) {
    rethrow_transport(e);
  }
  Extraction extraction{url, instruction, page.body};
  Millis latency = page.elapsed;
  if (summarizer_ && !cancel.cancelled()) {
    GenerationRequest req;
    req.role = Role::LLM;
    req.mode = GenerationMode::ActionOnly;
    req.context = "Extract the information from the page below that is relevant to this instruction: " +
                  instruction + "\n\n" + page.body;
    try {
      auto summary = summarizer_->generate(req);
      extraction.content = summary.text;
      latency += summary.latency;
    } catch (const BackendError& e) {
      throw ToolError(e.kind() == BackendErrorKind::Timeout ? ToolErrorKind::ToolTimeout : ToolErrorKind::WireError,
                      std::string("summarizer failed: ") + e.what(), latency + e.latency());
    }
  }
  return {std::move(extraction), latency};
}

ToolResult<std::string> HttpToolBackend::call_other(const OtherToolAction& call, const CancellationToken& cancel) {
  if (config_.other_tool_base_url.empty()) {
    throw ToolError(ToolErrorKind::Unsupported, "tool '" + call.name + "' has no configured endpoint");
  }
  if (cancel.cancelled()) throw ToolError(ToolErrorKind::WireError, "cancelled");
  json args = json::object();
  for (const auto& [k, v] : call.args) args[k] = v;
  try {
    auto reply = detail::http_post(config_.other_tool_base_url, "/tools/" + detail::url_encode(call.name), args.dump(),
                                   options_for(config_));
    return {std::move(reply.body), reply.elapsed};
  } catch (const detail::HttpTransportError& e) {
    rethrow_transport(e);
  }
}

// ============================================================================
// Executor
// ============================================================================

ToolExecutor::ToolExecutor(std::shared_ptr<ToolBackend> backend, ToolsConfig config)
    : backend_(std::move(backend)), config_(config), cache_(config.cache_enabled ? config.cache_capacity : 0) {
  if (!backend_) throw std::invalid_argument("tool executor requires a backend");
}

ToolResult<SearchResults> ToolExecutor::execute_search(const std::string& query, const CancellationToken& cancel) {
  if (query.empty()) throw std::invalid_argument("search query must be non-empty");
  auto result = backend_->search(query, cancel);
  if (result.value.items.size() > config_.max_results) result.value.items.resize(config_.max_results);
  return result;
}

ToolResult<Extraction> ToolExecutor::execute_visit(const std::string& url, const std::string& instruction,
                                                   const CancellationToken& cancel) {
  if (!is_valid_url(url)) throw std::invalid_argument("malformed url: " + url);
  if (instruction.empty()) throw std::invalid_argument("visit instruction must be non-empty");
  auto result = backend_->visit(url, instruction, cancel);
  result.value.content = truncate_with_marker(std::move(result.value.content), config_.content_cap);
  return result;
}

Observation ToolExecutor::run_uncached(const Action& action, const CancellationToken& cancel) {
  try {
    switch (action.kind()) {
      case ActionKind::Search: {
        auto r = execute_search(action.as<SearchAction>()->query, cancel);
        return {ObservationKind::SearchResults, render_search_results(r.value), r.latency};
      }
      case ActionKind::Visit: {
        const auto* v = action.as<VisitAction>();
        auto r = execute_visit(v->url, v->instruction, cancel);
        return {ObservationKind::Extraction, render_extraction(r.value), r.latency};
      }
      case ActionKind::Finish:
        return {ObservationKind::AnswerEcho, action.as<FinishAction>()->answer, Millis{0}};
      case ActionKind::OtherTool: {
        auto r = backend_->call_other(*action.as<OtherToolAction>(), cancel);
        return {ObservationKind::ToolOutput, truncate_with_marker(std::move(r.value), config_.content_cap), r.latency};
      }
    }
  } catch (const ToolError& e) {
    return {ObservationKind::ToolError, std::string(to_string(e.kind())) + ": " + e.what(), e.latency()};
  } catch (const std::invalid_argument& e) {
    return {ObservationKind::ToolError, std::string("invalid_action: ") + e.what(), Millis{0}};
  }
  return {ObservationKind::ToolError, "unreachable", Millis{0}};
}

Observation ToolExecutor::execute(const Action& action, const CancellationToken& cancel, CacheMode mode) {
  if (action.kind() == ActionKind::Finish) return run_uncached(action, cancel);
  const auto key = render_action(action);
  if (auto hit = cache_.get(key)) {
    ++cache_hits_;
    hit->latency = Millis{0};
    return *hit;
  }
  auto observation = run_uncached(action, cancel);
  if (mode == CacheMode::ReadWrite) remember(action, observation);
  return observation;
}

void ToolExecutor::remember(const Action& action, const Observation& observation) {
  // Failures are not cached; a retry may succeed.
  if (observation.kind == ObservationKind::ToolError || action.kind() == ActionKind::Finish) return;
  cache_.put(render_action(action), observation);
}

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#include "specagent/scripted_backend.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace specagent {

using nlohmann::json;

namespace {

std::pair<std::size_t, std::size_t> line_and_column(std::string_view doc, std::size_t byte) {
  std::size_t line = 1, column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, doc.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (doc[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

[[noreturn]] void schema_error(std::size_t index, const std::string& why) {
  throw ScenarioParseError("scenario entries[" + std::to_string(index) + "]: " + why, 0, 0);
}

template <typename T>
T get_field(const json& obj, const char* name, std::size_t index) {
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception& e) {
    schema_error(index, std::string("field '") + name + "': " + e.what());
  }
}

ScenarioEntry parse_entry(const json& e, std::size_t index, ScenarioKey& key) {
  static const std::set<std::string> kKnown = {"role",     "step",  "mode",       "text",          "tokens",
                                               "logprobs", "topk",  "latency_ms", "finish_reason", "error"};
  if (!e.is_object()) schema_error(index, "entry must be an object");
  for (const auto& [name, _] : e.items()) {
    if (!kKnown.count(name)) schema_error(index, "unknown field '" + name + "'");
  }

  auto role = parse_role(get_field<std::string>(e, "role", index));
  if (!role) schema_error(index, "unknown role");
  key.role = *role;
  const auto step = get_field<std::int64_t>(e, "step", index);
  if (step < 0) schema_error(index, "step must be non-negative");
  key.step = static_cast<std::size_t>(step);

  if (key.role == Role::Critic) {
    key.mode = GenerationMode::ActionOnly;
    if (e.contains("mode") && e["mode"] != "action_only") schema_error(index, "critic entries take no mode");
  } else {
    auto mode = parse_generation_mode(get_field<std::string>(e, "mode", index));
    if (!mode) schema_error(index, "unknown mode");
    key.mode = *mode;
  }

  ScenarioEntry entry;
  const auto latency = e.contains("latency_ms") ? get_field<std::int64_t>(e, "latency_ms", index) : 0;
  if (latency < 0) schema_error(index, "latency_ms must be non-negative");
  entry.latency = Millis{latency};

  if (e.contains("error")) {
    const auto what = get_field<std::string>(e, "error", index);
    ScriptedFailure failure;
    if (what == "timeout") {
      failure.kind = BackendErrorKind::Timeout;
    } else if (what == "wire") {
      failure.kind = BackendErrorKind::WireError;
    } else if (what == "malformed") {
      failure.kind = BackendErrorKind::MalformedResponse;
    } else {
      schema_error(index, "unknown error kind '" + what + "'");
    }
    for (const char* f : {"text", "tokens", "logprobs", "topk"}) {
      if (e.contains(f)) schema_error(index, std::string("error entries cannot carry '") + f + "'");
    }
    entry.payload = failure;
    return entry;
  }

  if (key.role == Role::Critic) {
    for (const char* f : {"text", "tokens", "logprobs", "finish_reason"}) {
      if (e.contains(f)) schema_error(index, std::string("critic entries cannot carry '") + f + "'");
    }
    NextTokenDistribution dist;
    const auto& topk = e.contains("topk") ? e["topk"] : json();
    if (!topk.is_array() || topk.empty()) schema_error(index, "critic entry needs a non-empty topk list");
    for (const auto& pair : topk) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number()) {
        schema_error(index, "topk items must be [token, logprob] pairs");
      }
      dist.entries.push_back({pair[0].get<std::string>(), pair[1].get<double>()});
    }
    std::stable_sort(dist.entries.begin(), dist.entries.end(),
                     [](const TokenLogprob& a, const TokenLogprob& b) { return a.logprob > b.logprob; });
    dist.k = dist.entries.size();
    dist.latency = entry.latency;
    try {
      validate(dist);
    } catch (const InvariantViolation& v) {
      schema_error(index, v.what());
    }
    entry.payload = std::move(dist);
    return entry;
  }

  if (e.contains("topk")) schema_error(index, "only critic entries carry 'topk'");
  BackendResponse response;
  response.text = get_field<std::string>(e, "text", index);
  if (e.contains("tokens")) response.tokens = get_field<std::vector<std::string>>(e, "tokens", index);
  if (e.contains("logprobs")) response.token_logprobs = get_field<std::vector<double>>(e, "logprobs", index);
  if (e.contains("finish_reason")) {
    auto reason = parse_finish_reason(get_field<std::string>(e, "finish_reason", index));
    if (!reason) schema_error(index, "unknown finish_reason");
    response.finish_reason = *reason;
  }
  response.latency = entry.latency;
  try {
    validate(response);
  } catch (const InvariantViolation& v) {
    schema_error(index, v.what());
  }
  entry.payload = std::move(response);
  return entry;
}

}  // namespace

std::string to_string(const ScenarioKey& key) {
  return "(" + std::string(to_string(key.role)) + "," + std::to_string(key.step) + "," +
         std::string(to_string(key.mode)) + ")";
}

ScenarioScript load_scenario(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    auto [line, column] = line_and_column(document, e.byte);
    throw ScenarioParseError("scenario parse error at line " + std::to_string(line) + ", column " +
                                 std::to_string(column) + ": " + e.what(),
                             line, column);
  }
  if (!doc.is_object()) throw ScenarioParseError("scenario document must be an object", 1, 1);
  for (const auto& [name, _] : doc.items()) {
    if (name != "version" && name != "entries" && name != "task_id" && name != "question") {
      throw ScenarioParseError("scenario: unknown top-level field '" + name + "'", 0, 0);
    }
  }
  if (!doc.contains("version") || doc["version"] != 1) {
    throw ScenarioParseError("scenario: unsupported or missing version (expected 1)", 0, 0);
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw ScenarioParseError("scenario: 'entries' must be a list", 0, 0);
  }

  ScenarioScript script;
  if (doc.contains("task_id")) script.task_id = doc["task_id"].get<std::string>();
  if (doc.contains("question")) script.question = doc["question"].get<std::string>();
  const auto& entries = doc["entries"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ScenarioKey key;
    auto entry = parse_entry(entries[i], i, key);
    if (!script.entries.emplace(key, std::move(entry)).second) {
      throw DuplicateKeyError("scenario: duplicate key " + to_string(key) + " at entries[" + std::to_string(i) + "]",
                              key);
    }
  }
  return script;
}

ScenarioScript load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

const ScenarioEntry& ScriptedBackend::lookup(const ScenarioKey& key, bool judge) {
  {
    std::lock_guard lock(mutex_);
    calls_.push_back({key, judge});
  }
  auto it = script_.entries.find(key);
  if (it == script_.entries.end()) {
    throw BackendError(BackendErrorKind::MalformedResponse, "no scripted entry for " + to_string(key));
  }
  if (const auto* failure = std::get_if<ScriptedFailure>(&it->second.payload)) {
    throw BackendError(failure->kind, "scripted failure for " + to_string(key), it->second.latency);
  }
  return it->second;
}

BackendResponse ScriptedBackend::generate(const GenerationRequest& request) {
  check_preconditions(request);
  const ScenarioKey key{request.role, request.step, request.mode};
  const auto& entry = lookup(key, false);
  const auto* response = std::get_if<BackendResponse>(&entry.payload);
  if (!response) {
    throw BackendError(BackendErrorKind::MalformedResponse, "scripted entry " + to_string(key) + " is not a generation");
  }
  BackendResponse out = *response;
  out.latency = entry.latency;
  return out;
}

NextTokenDistribution ScriptedBackend::judge_next_token(const JudgeRequest& request) {
  check_preconditions(request);
  const ScenarioKey key{request.role, request.step, GenerationMode::ActionOnly};
  const auto& entry = lookup(key, true);
  const auto* dist = std::get_if<NextTokenDistribution>(&entry.payload);
  if (!dist) {
    throw BackendError(BackendErrorKind::MalformedResponse, "scripted entry " + to_string(key) + " is not a top-k list");
  }
  // A scripted list is the whole support; it is not padded up to k.
  NextTokenDistribution out = *dist;
  if (out.entries.size() > request.k) out.entries.resize(request.k);
  out.k = out.entries.size();
  out.latency = entry.latency;
  return out;
}

std::vector<CallRecord> ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t ScriptedBackend::count_calls(Role role, std::optional<GenerationMode> mode) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(calls_.begin(), calls_.end(), [&](const CallRecord& c) {
    return c.key.role == role && (!mode || c.key.mode == *mode);
  }));
}

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Line-delimited trace format, version 1.
 *
 * Each trajectory is one header record followed by one record per step, one
 * JSON object per line with keys in sorted order:
 *
 *   {"config_digest":"..","final_answer":null,"question":"..","record":"header",
 *    "steps":3,"task_id":"..","version":1}
 *   {"action":"search{query=\"..\"}","action_logprobs":[..],"drafts":[..],
 *    "index":0,"observation":{"kind":"search_results","latency_ms":800,"payload":".."},
 *    "prefetch_discarded":false,"provenance":"system2_draft","reasoning":{..}|null,
 *    "record":"step","timing":{..},"verdict":{..}|null}
 *
 * Serialization is deterministic: equal trajectories produce identical bytes.
 */

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "specagent/core.hpp"

namespace specagent {

inline constexpr int kTraceVersion = 1;

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& what, std::size_t record) : std::runtime_error(what), record_(record) {}
  /// 0-based record (line) index within the parsed text.
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

std::string serialize_trace(const Trajectory& trajectory);
Trajectory parse_trace(std::string_view text);

/// Several trajectories written back to back.
std::vector<Trajectory> parse_traces(std::string_view text);

}  // namespace specagent

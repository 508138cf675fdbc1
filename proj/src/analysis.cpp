// SPDX-License-Identifier: Apache-2.0
#include "specagent/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "http_client.hpp"

namespace specagent::analysis {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double token_entropy_proxy(std::span<const double> logprobs) {
  if (logprobs.empty()) throw EmptyInput("token_entropy_proxy needs at least one logprob");
  double sum = 0.0;
  for (double lp : logprobs) sum -= lp;
  return sum / static_cast<double>(logprobs.size());
}

double nearest_rank_percentile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInput("percentile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("percentile must be in (0, 1]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<ActionSample> collect_action_samples(const std::vector<Trajectory>& trajectories) {
  std::vector<ActionSample> out;
  for (const auto& t : trajectories) {
    for (const auto& s : t.steps) {
      for (const auto& d : s.drafts) {
        if (!d.action || d.action_logprobs.empty()) continue;
        out.push_back({d.action->kind(),
                       d.source == DraftSource::System2 ? GenerationMode::WithReasoning : GenerationMode::ActionOnly,
                       d.action_logprobs});
      }
      if (s.provenance == Provenance::Fallback && !s.action_logprobs.empty()) {
        out.push_back({s.action.kind(), GenerationMode::WithReasoning, s.action_logprobs});
      }
    }
  }
  return out;
}

EntropyReport entropy_report(const std::vector<ActionSample>& samples, Grouping grouping) {
  std::map<GroupKey, std::vector<double>> proxies;
  std::vector<double> search_plain, visit_plain;
  for (const auto& s : samples) {
    if (s.logprobs.empty()) continue;
    const double h = token_entropy_proxy(s.logprobs);
    GroupKey key;
    if (grouping != Grouping::Mode) key.kind = s.kind;
    if (grouping != Grouping::Kind) key.mode = s.mode;
    proxies[key].push_back(h);
    if (s.mode == GenerationMode::ActionOnly) {
      if (s.kind == ActionKind::Search) search_plain.push_back(h);
      if (s.kind == ActionKind::Visit) visit_plain.push_back(h);
    }
  }
  if (proxies.empty()) throw InsufficientData("no action samples with logprobs");

  EntropyReport report;
  for (auto& [key, values] : proxies) {
    GroupStats g;
    g.count = values.size();
    g.mean = mean_of(values);
    g.p25 = nearest_rank_percentile(values, 0.25);
    g.p50 = nearest_rank_percentile(values, 0.50);
    g.p75 = nearest_rank_percentile(values, 0.75);
    report.groups.emplace(key, g);
  }
  if (!search_plain.empty() && !visit_plain.empty()) {
    report.search_exceeds_visit = mean_of(search_plain) > mean_of(visit_plain);
  }
  return report;
}

EntropyReport entropy_report(const std::vector<Trajectory>& trajectories, Grouping grouping) {
  return entropy_report(collect_action_samples(trajectories), grouping);
}

std::string to_csv(const EntropyReport& report) {
  std::ostringstream out;
  out << "kind,mode,count,mean,p25,p50,p75\n";
  for (const auto& [key, g] : report.groups) {
    out << (key.kind ? to_string(*key.kind) : "") << ',' << (key.mode ? to_string(*key.mode) : "") << ','
        << g.count << ',' << fmt(g.mean) << ',' << fmt(g.p25) << ',' << fmt(g.p50) << ',' << fmt(g.p75) << '\n';
  }
  out << "# search_exceeds_visit,"
      << (report.search_exceeds_visit ? (*report.search_exceeds_visit ? "true" : "false") : "n/a") << '\n';
  return out.str();
}

std::map<ActionKind, ReasoningLengthStats> reasoning_length_report(const std::vector<Trajectory>& trajectories) {
  std::map<ActionKind, std::vector<double>> lengths;
  for (const auto& t : trajectories) {
    for (const auto& s : t.steps) {
      for (const auto& d : s.drafts) {
        if (d.source != DraftSource::System2 || !d.action) continue;
        lengths[d.action->kind()].push_back(d.reasoning ? static_cast<double>(d.reasoning->token_count) : 0.0);
      }
    }
  }
  std::map<ActionKind, ReasoningLengthStats> out;
  for (auto& [kind, v] : lengths) {
    out[kind] = {v.size(), mean_of(v), nearest_rank_percentile(v, 0.5)};
  }
  return out;
}

std::string to_csv(const std::map<ActionKind, ReasoningLengthStats>& report) {
  std::ostringstream out;
  out << "kind,count,mean_tokens,p50_tokens\n";
  for (const auto& [kind, s] : report) {
    out << to_string(kind) << ',' << s.count << ',' << fmt(s.mean_tokens) << ',' << fmt(s.p50_tokens) << '\n';
  }
  return out.str();
}

// ============================================================================
// Alignment
// ============================================================================

HashedBagOfTokensEmbedder::HashedBagOfTokensEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::size_t HashedBagOfTokensEmbedder::bucket(std::string_view token) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % dimension_);
}

std::vector<double> HashedBagOfTokensEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  std::string token;
  auto flush = [&] {
    if (!token.empty()) v[bucket(token)] += 1.0;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return v;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, std::string api_key_env, int timeout_ms)
    : base_url_(std::move(base_url)), model_(std::move(model)), api_key_env_(std::move(api_key_env)),
      timeout_ms_(timeout_ms) {}

std::vector<double> HttpEmbedder::embed(std::string_view text) const {
  using nlohmann::json;
  detail::HttpOptions options;
  options.timeout_ms = timeout_ms_;
  if (auto key = detail::token_from_env(api_key_env_); !key.empty()) {
    options.headers.emplace_back("Authorization", "Bearer " + key);
  }
  const json body = {{"model", model_}, {"input", std::string(text)}};
  try {
    auto reply = detail::http_post(base_url_, "/v1/embeddings", body.dump(), options);
    return json::parse(reply.body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const detail::HttpTransportError& e) {
    throw std::runtime_error(std::string("embedding request failed: ") + e.what());
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed embedding response: ") + e.what());
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch("embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double alignment_cosine(std::string_view text_a, std::string_view text_b, const Embedder& embedder) {
  const auto a = embedder.embed(text_a);
  const auto b = embedder.embed(text_b);
  return cosine(a, b);
}

double url_hit_rate(const std::vector<std::string>& selected, const std::vector<std::string>& oracle) {
  if (selected.size() != oracle.size()) throw LengthMismatch("url lists differ in length");
  if (selected.empty()) throw EmptyInput("url lists are empty");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < selected.size(); ++i) hits += selected[i] == oracle[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(selected.size());
}

// ============================================================================
// Verifier scores and thresholds
// ============================================================================

TrajectoryScoreAggregate trajectory_aggregates(std::span<const double> scores) {
  if (scores.empty()) throw EmptyInput("trajectory has no scores");
  std::vector<double> v(scores.begin(), scores.end());
  return {mean_of(v), nearest_rank_percentile(v, 0.25), v.size()};
}

std::vector<double> critic_scores(const Trajectory& trajectory) {
  std::vector<double> out;
  for (const auto& s : trajectory.steps) {
    if (s.verdict && s.verdict->source == VerdictSource::Critic) out.push_back(s.verdict->score);
  }
  return out;
}

ThresholdProfile profile_threshold(std::span<const DevRecord> records, double target_rate) {
  if (records.size() < kMinDevRecords) {
    throw InsufficientData("threshold profiling needs at least " + std::to_string(kMinDevRecords) + " records");
  }
  if (!(target_rate >= 0.0 && target_rate < 1.0)) throw std::invalid_argument("target rate must be in [0, 1)");

  std::vector<double> scores;
  scores.reserve(records.size());
  for (const auto& r : records) scores.push_back(r.score);
  std::sort(scores.begin(), scores.end());
  const std::size_t n = scores.size();
  // Largest admissible count of strictly-below records.
  const auto budget = static_cast<std::size_t>(std::floor(target_rate * static_cast<double>(n) + 1e-9));

  // Candidate thresholds are the distinct scores: moving tau up to the next
  // distinct value is the only way the below-count changes. Sorted order
  // means the below-count of scores[i] is the index of its first occurrence.
  ThresholdProfile best{scores.front(), 0, n, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && scores[i] == scores[i - 1]) continue;
    if (i > budget) break;
    best.tau = scores[i];
    best.below = i;
  }
  best.achieved_rate = static_cast<double>(best.below) / static_cast<double>(n);
  return best;
}

// ============================================================================
// Latency
// ============================================================================

LatencyBreakdown latency_breakdown(const Trajectory& trajectory) {
  LatencyBreakdown out;
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const auto& s = trajectory.steps[i];
    out.rows.push_back({i, s.provenance, s.timing});
    auto& t = out.totals;
    t.draft_slm_ms += s.timing.draft_slm_ms;
    t.draft_llm_ms += s.timing.draft_llm_ms;
    t.verify_ms += s.timing.verify_ms;
    t.tool_ms += s.timing.tool_ms;
    t.fallback_reasoning_ms += s.timing.fallback_reasoning_ms;
    t.wall_step_ms += s.timing.wall_step_ms;
  }
  return out;
}

std::string to_csv(const LatencyBreakdown& breakdown) {
  std::ostringstream out;
  out << "step,provenance,draft_slm_ms,draft_llm_ms,verify_ms,tool_ms,fallback_reasoning_ms,wall_step_ms\n";
  auto row = [&out](const std::string& step, std::string_view provenance, const TimingBreakdown& t) {
    out << step << ',' << provenance << ',' << t.draft_slm_ms.count() << ',' << t.draft_llm_ms.count() << ','
        << t.verify_ms.count() << ',' << t.tool_ms.count() << ',' << t.fallback_reasoning_ms.count() << ','
        << t.wall_step_ms.count() << '\n';
  };
  for (const auto& r : breakdown.rows) row(std::to_string(r.step), to_string(r.provenance), r.timing);
  row("total", "", breakdown.totals);
  return out.str();
}

}  // namespace specagent::analysis

// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Offline metrics over recorded trajectories.
 *
 * Everything here is a pure batch computation. Percentiles use the
 * nearest-rank method throughout: the q-th percentile of n sorted values is
 * the value at 1-based index ceil(q * n).
 */

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "specagent/backends.hpp"
#include "specagent/core.hpp"

namespace specagent::analysis {

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ZeroVector : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// ============================================================================
// Entropy proxy
// ============================================================================

/// Mean negated token logprob of a realized action. Throws EmptyInput.
double token_entropy_proxy(std::span<const double> logprobs);

/// Nearest-rank percentile, q in (0, 1]. Throws EmptyInput.
double nearest_rank_percentile(std::vector<double> values, double q);

/// One realized action with its token logprobs, tagged by how it was produced.
struct ActionSample {
  ActionKind kind = ActionKind::Search;
  GenerationMode mode = GenerationMode::WithReasoning;
  std::vector<double> logprobs;
};

/// Draft records (System2 = with reasoning, System1 = action only) plus the
/// actions of fallback steps (with reasoning). Samples without logprobs are
/// skipped.
std::vector<ActionSample> collect_action_samples(const std::vector<Trajectory>& trajectories);

enum class Grouping { KindAndMode, Kind, Mode };

struct GroupKey {
  std::optional<ActionKind> kind;
  std::optional<GenerationMode> mode;
  auto operator<=>(const GroupKey&) const = default;
};

struct GroupStats {
  std::size_t count = 0;
  double mean = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

struct EntropyReport {
  std::map<GroupKey, GroupStats> groups;
  /// Whether action-only Search samples carry a higher mean entropy proxy than
  /// action-only Visit samples; empty when either side has no samples.
  std::optional<bool> search_exceeds_visit;
};

/// Throws InsufficientData when no sample carries logprobs.
EntropyReport entropy_report(const std::vector<ActionSample>& samples, Grouping grouping = Grouping::KindAndMode);
EntropyReport entropy_report(const std::vector<Trajectory>& trajectories, Grouping grouping = Grouping::KindAndMode);

/// kind,mode,count,mean,p25,p50,p75 (empty cell for a dimension not grouped on).
std::string to_csv(const EntropyReport& report);

/// Reasoning length of System2 drafts per proposed action kind.
struct ReasoningLengthStats {
  std::size_t count = 0;
  double mean_tokens = 0.0;
  double p50_tokens = 0.0;
};
std::map<ActionKind, ReasoningLengthStats> reasoning_length_report(const std::vector<Trajectory>& trajectories);
std::string to_csv(const std::map<ActionKind, ReasoningLengthStats>& report);

// ============================================================================
// Alignment
// ============================================================================

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Token counts over a hashed vocabulary. Tokens are maximal runs of
/// alphanumeric bytes, lower-cased.
class HashedBagOfTokensEmbedder final : public Embedder {
 public:
  explicit HashedBagOfTokensEmbedder(std::size_t dimension = 4096);
  std::vector<double> embed(std::string_view text) const override;
  std::size_t bucket(std::string_view token) const noexcept;

 private:
  std::size_t dimension_;
};

/// OpenAI-compatible /v1/embeddings client.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string base_url, std::string model, std::string api_key_env = {}, int timeout_ms = 30000);
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::string base_url_;
  std::string model_;
  std::string api_key_env_;
  int timeout_ms_;
};

/// Throws ZeroVector or LengthMismatch.
double cosine(std::span<const double> a, std::span<const double> b);
double alignment_cosine(std::string_view text_a, std::string_view text_b, const Embedder& embedder);

/// Fraction of positions whose urls are equal. Throws LengthMismatch, EmptyInput.
double url_hit_rate(const std::vector<std::string>& selected, const std::vector<std::string>& oracle);

// ============================================================================
// Verifier scores and thresholds
// ============================================================================

struct TrajectoryScoreAggregate {
  double mean = 0.0;
  double p25 = 0.0;
  std::size_t n = 0;
};

/// Throws EmptyInput.
TrajectoryScoreAggregate trajectory_aggregates(std::span<const double> scores);

/// Critic scores of every step with a critic verdict, in step order.
std::vector<double> critic_scores(const Trajectory& trajectory);

struct DevRecord {
  double score = 0.0;
  std::string label;
};

struct ThresholdProfile {
  double tau = 0.0;
  std::size_t below = 0;  // records with score < tau
  std::size_t n = 0;
  double achieved_rate = 0.0;
};

inline constexpr std::size_t kMinDevRecords = 10;

/// Largest tau with (#score < tau) / n <= target_rate. Throws
/// InsufficientData below kMinDevRecords records, std::invalid_argument for a
/// target outside [0, 1).
ThresholdProfile profile_threshold(std::span<const DevRecord> records, double target_rate);

// ============================================================================
// Latency
// ============================================================================

struct LatencyRow {
  std::size_t step = 0;
  Provenance provenance = Provenance::Fallback;
  TimingBreakdown timing;
};

struct LatencyBreakdown {
  TimingBreakdown totals;
  std::vector<LatencyRow> rows;
};

LatencyBreakdown latency_breakdown(const Trajectory& trajectory);

/// One row per step then a "total" row.
std::string to_csv(const LatencyBreakdown& breakdown);

}  // namespace specagent::analysis

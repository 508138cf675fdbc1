// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * Draft verification.
 *
 * The semantic verifier asks the critic model a trajectory-audit question and
 * reads its next-token distribution. Probability mass on affirmative and
 * negative surface forms is aggregated into p_acc and p_rej, and the draft is
 * accepted when the log-odds score ln(p_acc) - ln(p_rej) is at least tau.
 *
 * Matching verifiers (exact or edit-distance over canonical renderings) are
 * kept as baselines that compare a draft to a reference action.
 */

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "specagent/backends.hpp"
#include "specagent/context.hpp"
#include "specagent/core.hpp"

namespace specagent {

/// Template version tag of the embedded audit prompt asset.
inline constexpr int kAuditPromptVersion = 1;

/// The audit prompt template, byte-exact as shipped in assets/.
std::string_view audit_prompt_template() noexcept;

/// Template, then the last `window` context entries, the draft reasoning (only
/// when present and non-empty) and the canonical draft action.
std::string build_audit_prompt(const AgentContext& context, const ReasoningTrace* reasoning, const Action& action,
                               std::size_t window = 8);

/// Token surface forms compared after trimming whitespace and case-folding.
struct VariantSets {
  std::set<std::string> affirmative{"yes"};
  std::set<std::string> negative{"no"};
};

/// Throws std::invalid_argument unless both sets are non-empty and disjoint.
void validate(const VariantSets& variants);

struct YesNoMass {
  double p_acc = 0.0;
  double p_rej = 0.0;
};

inline constexpr double kDefaultEpsilon = 1e-9;

YesNoMass aggregate_yes_no(const NextTokenDistribution& dist, const VariantSets& variants,
                           double epsilon = kDefaultEpsilon);

/// ln(p_acc) - ln(p_rej). Throws std::domain_error unless both are > 0.
double verifier_score(double p_acc, double p_rej);

/// Acceptance rule, inclusive at the threshold.
constexpr bool decide(double score, double tau) noexcept { return score >= tau; }

/// Levenshtein distance over bytes (unit insert/delete/substitute costs).
std::size_t edit_distance(std::string_view a, std::string_view b);

struct MatchPolicy {
  enum class Kind { Exact, EditDistance };
  Kind kind = Kind::Exact;
  std::size_t limit = 0;

  static MatchPolicy exact() { return {Kind::Exact, 0}; }
  static MatchPolicy within(std::size_t limit) { return {Kind::EditDistance, limit}; }
};

bool match_verify(const Action& draft, const Action& reference, const MatchPolicy& policy);

/// Verdict for a matching policy: score = -distance, threshold = -limit.
Verdict match_verdict(const Action& draft, const Action& reference, const MatchPolicy& policy);

struct SemanticVerifierConfig {
  double tau = 0.0;
  std::size_t window = 8;
  std::size_t top_k = 20;
  double epsilon = kDefaultEpsilon;
  VariantSets variants;
};

struct VerificationResult {
  Verdict verdict;
  Millis latency{0};
  std::optional<std::string> error;  // critic failure; verdict is then a fixed rejection
};

class SemanticVerifier {
 public:
  SemanticVerifier(ModelBackend& critic, SemanticVerifierConfig config);

  VerificationResult verify(const AgentContext& context, const ReasoningTrace* reasoning, const Action& action,
                            std::size_t step);

  /// Score and decision from an already obtained distribution.
  Verdict judge(const NextTokenDistribution& dist) const;

  const SemanticVerifierConfig& config() const noexcept { return config_; }

 private:
  ModelBackend& critic_;
  SemanticVerifierConfig config_;
};

/// Fixed verdicts used by the AlwaysAccept / AlwaysReject policies and when
/// no verdict could be obtained.
Verdict fixed_verdict(bool accept);
Verdict no_draft_verdict(double tau);

}  // namespace specagent

// SPDX-License-Identifier: Apache-2.0
#include "specagent/verification.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace specagent {

namespace {

std::string fold(std::string_view token) {
  auto b = token.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = token.find_last_not_of(" \t\r\n");
  std::string out(token.substr(b, e - b + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string build_audit_prompt(const AgentContext& context, const ReasoningTrace* reasoning, const Action& action,
                               std::size_t window) {
  std::string out(audit_prompt_template());
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  out += "\nUser's Goal: " + context.question + "\n";
  out += "\nRecent steps (context):\n";
  if (context.entries.empty()) {
    out += "(none)\n";
  } else {
    out += render_history(context, window);
  }
  if (reasoning && !reasoning->text.empty()) {
    out += "\nDraft reasoning:\n" + reasoning->text + "\n";
  }
  out += "\nDraft action:\n" + render_action(action) + "\n";
  return out;
}

void validate(const VariantSets& variants) {
  if (variants.affirmative.empty() || variants.negative.empty()) {
    throw std::invalid_argument("variant sets must be non-empty");
  }
  for (const auto& a : variants.affirmative) {
    if (variants.negative.count(a)) throw std::invalid_argument("variant sets overlap on '" + a + "'");
  }
}

YesNoMass aggregate_yes_no(const NextTokenDistribution& dist, const VariantSets& variants, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  double acc = 0.0, rej = 0.0;
  for (const auto& entry : dist.entries) {
    const auto key = fold(entry.token);
    if (variants.affirmative.count(key)) {
      acc += std::exp(entry.logprob);
    } else if (variants.negative.count(key)) {
      rej += std::exp(entry.logprob);
    }
  }
  return {std::max(epsilon, acc), std::max(epsilon, rej)};
}

double verifier_score(double p_acc, double p_rej) {
  if (!(p_acc > 0.0) || !(p_rej > 0.0)) throw std::domain_error("verifier_score requires positive probabilities");
  return std::log(p_acc) - std::log(p_rej);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

bool match_verify(const Action& draft, const Action& reference, const MatchPolicy& policy) {
  const auto a = render_action(draft);
  const auto b = render_action(reference);
  if (policy.kind == MatchPolicy::Kind::Exact) return a == b;
  return edit_distance(a, b) <= policy.limit;
}

Verdict match_verdict(const Action& draft, const Action& reference, const MatchPolicy& policy) {
  const auto a = render_action(draft);
  const auto b = render_action(reference);
  const auto distance = edit_distance(a, b);
  const auto limit = policy.kind == MatchPolicy::Kind::Exact ? 0 : policy.limit;
  Verdict v;
  v.source = VerdictSource::Match;
  v.score = -static_cast<double>(distance);
  v.threshold = -static_cast<double>(limit);
  v.accepted = match_verify(draft, reference, policy);
  return v;
}

Verdict fixed_verdict(bool accept) {
  Verdict v;
  v.source = VerdictSource::Fixed;
  v.score = accept ? 1.0 : -1.0;
  v.threshold = 0.0;
  v.accepted = accept;
  return v;
}

Verdict no_draft_verdict(double tau) {
  Verdict v;
  v.source = VerdictSource::NoDraft;
  v.score = 0.0;
  v.threshold = tau;
  v.accepted = false;
  return v;
}

SemanticVerifier::SemanticVerifier(ModelBackend& critic, SemanticVerifierConfig config)
    : critic_(critic), config_(std::move(config)) {
  validate(config_.variants);
  if (config_.window == 0) throw std::invalid_argument("verifier window must be positive");
}

Verdict SemanticVerifier::judge(const NextTokenDistribution& dist) const {
  const auto mass = aggregate_yes_no(dist, config_.variants, config_.epsilon);
  Verdict v;
  v.source = VerdictSource::Critic;
  v.p_acc = mass.p_acc;
  v.p_rej = mass.p_rej;
  v.score = verifier_score(mass.p_acc, mass.p_rej);
  v.threshold = config_.tau;
  v.accepted = decide(v.score, config_.tau);
  return v;
}

VerificationResult SemanticVerifier::verify(const AgentContext& context, const ReasoningTrace* reasoning,
                                            const Action& action, std::size_t step) {
  JudgeRequest req;
  req.role = Role::Critic;
  req.step = step;
  req.prompt = build_audit_prompt(context, reasoning, action, config_.window);
  req.k = config_.top_k;
  try {
    auto dist = critic_.judge_next_token(req);
    return {judge(dist), dist.latency, std::nullopt};
  } catch (const BackendError& e) {
    return {fixed_verdict(false), e.latency(), std::string(to_string(e.kind())) + ": " + e.what()};
  }
}

}  // namespace specagent

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace silico::stats {

// Per-wording effect of partisan priming on the axis score, from the OLS fit
// score = alpha + beta * 1[liberal]. For a binary regressor beta equals the
// difference of group means.
struct RegressionResult {
  std::string issue_id;
  int wording_index = 0;
  double beta = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;  // two-sided
  long n_lib = 0;
  long n_con = 0;
  bool degenerate = false;  // zero residual variance
};

enum class ExpectedSign { liberal_positive, conservative_positive };

struct GroundTruthEntry {
  std::string issue_id;
  ExpectedSign expected_sign;
  std::string source;
};

struct DirectionOutcome {
  std::string issue_id;
  int wording_index = 0;
  int predicted_sign = 0;  // sign(beta): -1, 0, +1
  bool significant = false;
  bool matches = false;
  bool scored = false;  // false when no ground truth entry exists
};

enum class QuestionVerdict { correct, incorrect, mixed, unscored };

std::string verdict_name(QuestionVerdict v);

struct QuestionResult {
  std::string issue_id;
  QuestionVerdict verdict = QuestionVerdict::unscored;
  int n_wordings = 0;
  int n_matching = 0;
  int n_significant_matching = 0;
};

struct TwoProportionResult {
  double p_value = 1.0;
  std::string method;  // "pooled_z" or "exact"
};

// OLS of score on the liberal indicator; two-sided p from the t distribution
// with n-2 degrees of freedom. Accumulation is symmetric in the two groups,
// so exchanging them negates beta and t exactly and preserves p. Zero
// residual variance sets the degenerate flag (p = 0 if beta != 0, else 1).
RegressionResult ols_binary(const std::vector<double>& scores_lib,
                            const std::vector<double>& scores_con);

// A question is correct iff a strict majority of its wordings point the
// right way; an exact split is mixed; no ground truth means unscored.
QuestionResult aggregate_question(const std::string& issue_id,
                                  const std::vector<RegressionResult>& wordings,
                                  const std::optional<GroundTruthEntry>& truth);

DirectionOutcome direction_outcome(const RegressionResult& r,
                                   const std::optional<GroundTruthEntry>& truth);

// Exact one-sided upper tail P(X >= k) under Binomial(n, p0), log-space sum.
double binomial_test(long k, long n, double p0);

// One-sided test that proportion k1/n1 exceeds k2/n2. Pooled z when every
// expected cell count is >= 5, exact conditional (hypergeometric tail)
// otherwise; the method used is recorded in the result.
TwoProportionResult two_proportion_test(long k1, long n1, long k2, long n2);

// CSV with columns issue_id, expected_sign, source. Duplicates are rejected
// naming both lines; a malformed sign is a parse error with its line number.
std::vector<GroundTruthEntry> load_ground_truth(const std::string& path);

std::map<std::string, GroundTruthEntry> ground_truth_index(
    const std::vector<GroundTruthEntry>& entries);

}  // namespace silico::stats

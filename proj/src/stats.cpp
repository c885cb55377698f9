#include "silico/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "silico/errors.hpp"
#include "silico/special.hpp"

namespace silico::stats {

std::string verdict_name(QuestionVerdict v) {
  switch (v) {
    case QuestionVerdict::correct: return "correct";
    case QuestionVerdict::incorrect: return "incorrect";
    case QuestionVerdict::mixed: return "mixed";
    default: return "unscored";
  }
}

RegressionResult ols_binary(const std::vector<double>& scores_lib,
                            const std::vector<double>& scores_con) {
  long n_lib = long(scores_lib.size());
  long n_con = long(scores_con.size());
  long n = n_lib + n_con;
  if (n_lib < 1 || n_con < 1) {
    throw std::domain_error("ols_binary: each group needs at least one observation");
  }
  if (n < 3) {
    throw std::domain_error("ols_binary: need at least 3 observations combined");
  }

  // For the binary regressor the OLS solution is alpha = mean(con) and
  // beta = mean(lib) - mean(con). Per-group accumulation keeps the label
  // swap antisymmetry exact: swapping groups negates beta and t bit-for-bit
  // and leaves p untouched.
  double sum_lib = 0.0, sum_con = 0.0;
  for (double y : scores_lib) sum_lib += y;
  for (double y : scores_con) sum_con += y;
  double mean_lib = sum_lib / double(n_lib);
  double mean_con = sum_con / double(n_con);
  double beta = mean_lib - mean_con;

  double rss_lib = 0.0, rss_con = 0.0;
  for (double y : scores_lib) rss_lib += (y - mean_lib) * (y - mean_lib);
  for (double y : scores_con) rss_con += (y - mean_con) * (y - mean_con);
  double rss = rss_lib + rss_con;

  RegressionResult out;
  out.beta = beta;
  out.n_lib = n_lib;
  out.n_con = n_con;

  double nu = double(n - 2);
  double sigma2 = rss / nu;
  if (!std::isfinite(sigma2)) {
    throw std::domain_error("ols_binary: non-finite residual variance");
  }
  double var_beta = sigma2 * (1.0 / double(n_lib) + 1.0 / double(n_con));
  if (sigma2 <= 0.0) {
    out.degenerate = true;
    out.se = 0.0;
    if (beta != 0.0) {
      out.t_stat = beta > 0 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      out.p_value = 0.0;
    } else {
      out.t_stat = 0.0;
      out.p_value = 1.0;
    }
    return out;
  }
  out.se = std::sqrt(var_beta);
  out.t_stat = beta / out.se;
  out.p_value = student_t_two_sided_p(out.t_stat, nu);
  return out;
}

DirectionOutcome direction_outcome(const RegressionResult& r,
                                   const std::optional<GroundTruthEntry>& truth) {
  DirectionOutcome out;
  out.issue_id = r.issue_id;
  out.wording_index = r.wording_index;
  out.predicted_sign = r.beta > 0 ? 1 : (r.beta < 0 ? -1 : 0);
  out.significant = r.p_value < 0.05;
  if (truth) {
    out.scored = true;
    int expected = truth->expected_sign == ExpectedSign::liberal_positive ? 1 : -1;
    out.matches = out.predicted_sign == expected;
  }
  return out;
}

QuestionResult aggregate_question(const std::string& issue_id,
                                  const std::vector<RegressionResult>& wordings,
                                  const std::optional<GroundTruthEntry>& truth) {
  if (wordings.empty()) {
    throw std::domain_error("aggregate_question: no wording results for " + issue_id);
  }
  QuestionResult out;
  out.issue_id = issue_id;
  out.n_wordings = int(wordings.size());
  if (!truth) {
    out.verdict = QuestionVerdict::unscored;
    return out;
  }
  for (const auto& w : wordings) {
    DirectionOutcome d = direction_outcome(w, truth);
    if (d.matches) {
      ++out.n_matching;
      if (d.significant) ++out.n_significant_matching;
    }
  }
  int misses = out.n_wordings - out.n_matching;
  if (out.n_matching > misses) {
    out.verdict = QuestionVerdict::correct;
  } else if (out.n_matching == misses) {
    out.verdict = QuestionVerdict::mixed;
  } else {
    out.verdict = QuestionVerdict::incorrect;
  }
  return out;
}

double binomial_test(long k, long n, double p0) {
  if (k < 0 || n < 0 || k > n) {
    throw std::domain_error("binomial_test: need 0 <= k <= n");
  }
  if (p0 <= 0.0 || p0 >= 1.0) {
    throw std::domain_error("binomial_test: need 0 < p0 < 1");
  }
  if (k == 0) return 1.0;
  // log-space tail sum, anchored at the largest term
  double log_p = std::log(p0), log_q = std::log1p(-p0);
  std::vector<double> terms;
  terms.reserve(size_t(n - k + 1));
  double max_term = -std::numeric_limits<double>::infinity();
  for (long i = k; i <= n; ++i) {
    double t = log_choose(int(n), int(i)) + double(i) * log_p +
               double(n - i) * log_q;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  double result = std::exp(max_term) * acc;
  return std::min(result, 1.0);
}

namespace {

// log P(X1 = i) for X1 hypergeometric with n1 draws from a population of
// n1 + n2 containing total_success successes
double log_hypergeom_pmf(long i, long n1, long n2, long total_success) {
  return log_choose(int(n1), int(i)) +
         log_choose(int(n2), int(total_success - i)) -
         log_choose(int(n1 + n2), int(total_success));
}

}  // namespace

TwoProportionResult two_proportion_test(long k1, long n1, long k2, long n2) {
  if (n1 < 1 || n2 < 1) {
    throw std::domain_error("two_proportion_test: empty group");
  }
  if (k1 < 0 || k1 > n1 || k2 < 0 || k2 > n2) {
    throw std::domain_error("two_proportion_test: counts out of range");
  }
  TwoProportionResult out;
  double pooled = double(k1 + k2) / double(n1 + n2);
  double e11 = double(n1) * pooled, e12 = double(n1) * (1.0 - pooled);
  double e21 = double(n2) * pooled, e22 = double(n2) * (1.0 - pooled);
  // strictly above 5: borderline tables go to the exact branch
  if (e11 > 5.0 && e12 > 5.0 && e21 > 5.0 && e22 > 5.0) {
    out.method = "pooled_z";
    double se = std::sqrt(pooled * (1.0 - pooled) *
                          (1.0 / double(n1) + 1.0 / double(n2)));
    double z = (double(k1) / double(n1) - double(k2) / double(n2)) / se;
    out.p_value = 1.0 - normal_cdf(z);
    return out;
  }
  // exact conditional: fix both margins, upper tail over X1 >= k1
  out.method = "exact";
  long total = k1 + k2;
  long hi = std::min(n1, total);
  double tail = 0.0;
  for (long i = k1; i <= hi; ++i) {
    if (total - i > n2) continue;  // infeasible table
    tail += std::exp(log_hypergeom_pmf(i, n1, n2, total));
  }
  out.p_value = std::min(tail, 1.0);
  return out;
}

std::vector<GroundTruthEntry> load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ground truth file: " + path);
  std::vector<GroundTruthEntry> out;
  std::map<std::string, int> first_line;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip trailing CR from CRLF files
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("issue_id,", 0) == 0) continue;  // header
    size_t c1 = line.find(',');
    if (c1 == std::string::npos) {
      throw ConfigError("ground truth line " + std::to_string(line_no) +
                        ": expected issue_id,expected_sign,source");
    }
    size_t c2 = line.find(',', c1 + 1);
    GroundTruthEntry e;
    e.issue_id = line.substr(0, c1);
    std::string sign = c2 == std::string::npos ? line.substr(c1 + 1)
                                               : line.substr(c1 + 1, c2 - c1 - 1);
    e.source = c2 == std::string::npos ? "" : line.substr(c2 + 1);
    if (sign == "liberal_positive") {
      e.expected_sign = ExpectedSign::liberal_positive;
    } else if (sign == "conservative_positive") {
      e.expected_sign = ExpectedSign::conservative_positive;
    } else {
      throw ConfigError("ground truth line " + std::to_string(line_no) +
                        ": malformed sign '" + sign + "'");
    }
    auto [it, fresh] = first_line.emplace(e.issue_id, line_no);
    if (!fresh) {
      throw ConfigError("duplicate ground truth issue_id '" + e.issue_id +
                        "' on lines " + std::to_string(it->second) + " and " +
                        std::to_string(line_no));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::map<std::string, GroundTruthEntry> ground_truth_index(
    const std::vector<GroundTruthEntry>& entries) {
  std::map<std::string, GroundTruthEntry> out;
  for (const auto& e : entries) out.emplace(e.issue_id, e);
  return out;
}

}  // namespace silico::stats

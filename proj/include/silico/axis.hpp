#pragma once

#include <string>
#include <vector>

namespace silico::axis {

// A semantic axis: completions are scored by how much closer they sit to the
// positive anchor phrases than to the negative ones.
struct AxisSpec {
  std::string axis_id;
  std::vector<std::string> positive_anchors;
  std::vector<std::string> negative_anchors;

  void validate() const;  // non-empty sides, no phrase on both
};

struct AxisScore {
  std::string prompt_id;
  int sample_index = 0;
  double score = 0.0;    // sim_pos - sim_neg, stored unclamped
  double sim_pos = 0.0;  // mean cosine to positive anchors
  double sim_neg = 0.0;
  std::string side;
};

enum class Sign { positive, negative, indeterminate };

std::string sign_name(Sign s);

double cosine(const std::vector<double>& u, const std::vector<double>& v);

// Mean-of-cosines to each side, then the difference. One embedding per
// anchor, in the same order as the spec lists them.
AxisScore score_against_axis(const std::vector<double>& completion_vec,
                             const AxisSpec& axis,
                             const std::vector<std::vector<double>>& positive_vecs,
                             const std::vector<std::vector<double>>& negative_vecs);

// Sign split used for clustering. Exact zero is indeterminate and later
// excluded from both groups.
Sign classify_sign(double score);

}  // namespace silico::axis

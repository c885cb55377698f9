#include "silico/axis.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "silico/errors.hpp"

namespace silico::axis {

void AxisSpec::validate() const {
  if (positive_anchors.empty() || negative_anchors.empty()) {
    throw ConfigError("axis '" + axis_id + "': both anchor lists must be non-empty");
  }
  std::set<std::string> pos(positive_anchors.begin(), positive_anchors.end());
  for (const auto& p : negative_anchors) {
    if (pos.count(p)) {
      throw ConfigError("axis '" + axis_id + "': phrase '" + p +
                        "' appears on both sides");
    }
  }
}

std::string sign_name(Sign s) {
  switch (s) {
    case Sign::positive: return "positive";
    case Sign::negative: return "negative";
    default: return "indeterminate";
  }
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw std::domain_error("cosine: dimension mismatch (" +
                            std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()) + ")");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw std::domain_error("cosine: zero vector");
  }
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  // clamp the last-ulp overshoot so results stay in [-1, 1]
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

AxisScore score_against_axis(const std::vector<double>& completion_vec,
                             const AxisSpec& axis,
                             const std::vector<std::vector<double>>& positive_vecs,
                             const std::vector<std::vector<double>>& negative_vecs) {
  if (positive_vecs.size() != axis.positive_anchors.size()) {
    throw ConfigError("axis '" + axis.axis_id +
                      "': missing embedding for a positive anchor (have " +
                      std::to_string(positive_vecs.size()) + ", need " +
                      std::to_string(axis.positive_anchors.size()) + ")");
  }
  if (negative_vecs.size() != axis.negative_anchors.size()) {
    throw ConfigError("axis '" + axis.axis_id +
                      "': missing embedding for a negative anchor (have " +
                      std::to_string(negative_vecs.size()) + ", need " +
                      std::to_string(axis.negative_anchors.size()) + ")");
  }
  AxisScore out;
  double sp = 0.0;
  for (const auto& v : positive_vecs) sp += cosine(completion_vec, v);
  sp /= double(positive_vecs.size());
  double sn = 0.0;
  for (const auto& v : negative_vecs) sn += cosine(completion_vec, v);
  sn /= double(negative_vecs.size());
  out.sim_pos = sp;
  out.sim_neg = sn;
  out.score = sp - sn;
  return out;
}

Sign classify_sign(double score) {
  if (score > 0.0) return Sign::positive;
  if (score < 0.0) return Sign::negative;
  return Sign::indeterminate;
}

}  // namespace silico::axis

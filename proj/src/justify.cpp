#include "silico/justify.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "silico/errors.hpp"
#include "silico/rng.hpp"
#include "silico/text.hpp"

namespace silico::justify {

namespace {

const char* const kLabelInstruction =
    "Please write concise, specific, and not overly broad labels for each of "
    "the clusters that describe their unique theme and distinguish them from "
    "the other clusters. It does not have to encompass all responses but "
    "should instead reflect the primary theme evident in the substantial part "
    "of the responses.";

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::string truncate_to_sentence(const std::string& text) {
  std::string t = trim(text);
  for (size_t i = 0; i < t.size(); ++i) {
    if (!is_terminator(t[i])) continue;
    if (i + 1 == t.size() ||
        std::isspace(static_cast<unsigned char>(t[i + 1]))) {
      return t.substr(0, i + 1);
    }
  }
  return t;
}

std::string build_justification_prompt(const std::string& original_prompt,
                                       const std::string& completion) {
  if (completion.empty()) {
    throw ConfigError("build_justification_prompt: empty completion");
  }
  return original_prompt + " " + truncate_to_sentence(completion) +
         " This is because";
}

std::vector<JustificationRecord> run_justifications(
    const std::string& issue_id, const std::vector<ScoredParent>& parents,
    gateway::Gateway& gw, const JustifyParams& params,
    const std::string& embedding_model_id) {
  std::vector<gateway::CompletionRequest> requests;
  requests.reserve(parents.size());
  for (const auto& parent : parents) {
    gateway::CompletionRequest req;
    req.prompt = build_justification_prompt(parent.prompt_text, parent.completion_text);
    req.n_samples = params.samples_per_parent;
    req.max_tokens = params.max_tokens;
    req.temperature = params.temperature;
    req.stop = params.stop;
    req.model_id = params.model_id;
    requests.push_back(std::move(req));
  }
  auto responses = gw.complete_many(requests);

  std::vector<JustificationRecord> out;
  out.reserve(parents.size() * size_t(params.samples_per_parent));
  for (size_t i = 0; i < parents.size(); ++i) {
    const auto& parent = parents[i];
    for (const auto& record : responses[i]) {
      JustificationRecord j;
      j.issue_id = issue_id;
      j.parent_prompt_id = parent.prompt_id;
      j.parent_sample_index = parent.sample_index;
      j.justification_index = record.sample_index;
      j.text = record.text;
      if (!embedding_model_id.empty() && !j.text.empty()) {
        j.embedding_ref = gateway::embedding_cache_key(embedding_model_id, j.text);
      }
      j.sign_group = parent.sign;
      j.side = parent.side;
      out.push_back(std::move(j));
    }
  }
  return out;
}

ClusterReport cluster_sign_group(const std::string& issue_id, axis::Sign sign,
                                 const std::vector<JustificationRecord>& group,
                                 const KConfig& kcfg, gateway::Gateway& gw,
                                 const std::string& embedding_model_id,
                                 uint64_t seed) {
  ClusterReport report;
  report.issue_id = issue_id;
  report.sign_group = sign;
  report.n_records = long(group.size());

  long min_size = std::max(long(2 * kcfg.k_min), long(kcfg.min_group));
  if (long(group.size()) < min_size) {
    report.skipped = true;
    report.notice = "group of " + std::to_string(group.size()) +
                    " records is below the minimum of " + std::to_string(min_size);
    return report;
  }

  if (kcfg.override_k &&
      (*kcfg.override_k < 2 || size_t(*kcfg.override_k) > group.size() - 1)) {
    throw ConfigError("k override " + std::to_string(*kcfg.override_k) +
                      " is outside [2, " + std::to_string(group.size() - 1) +
                      "] for issue '" + issue_id + "'");
  }

  std::vector<std::string> texts;
  texts.reserve(group.size());
  for (const auto& r : group) texts.push_back(r.text);
  auto embedded = gw.embed(texts, embedding_model_id);
  std::vector<cluster::Point> points;
  points.reserve(embedded.size());
  for (auto& e : embedded) points.push_back(std::move(e.values));
  if (kcfg.normalize) points = cluster::normalize_rows(points);

  int k_max = std::min(kcfg.k_max, int(points.size()) - 1);
  int k_min = std::min(kcfg.k_min, k_max);
  auto selection = cluster::select_k(points, k_min, k_max, seed, kcfg.override_k);
  report.qualities = selection.qualities;
  report.manual_k = selection.manual;
  report.k = selection.k;

  auto model = cluster::kmeans(points, report.k,
                               derive_seed(seed, "k=" + std::to_string(report.k)));

  struct Raw {
    long n_lib = 0;
    long n_con = 0;
    long size() const { return n_lib + n_con; }
    double prop_lib() const { return double(n_lib) / double(n_lib + n_con); }
  };
  std::vector<Raw> raw(size_t(report.k));
  for (size_t i = 0; i < group.size(); ++i) {
    Raw& r = raw[size_t(model.assignments[i])];
    if (group[i].side == battery::Side::liberal) {
      r.n_lib++;
    } else {
      r.n_con++;
    }
  }

  // ascending liberal share, larger cluster first on ties
  std::vector<int> order(size_t(report.k));
  for (int c = 0; c < report.k; ++c) order[size_t(c)] = c;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double pa = raw[size_t(a)].prop_lib(), pb = raw[size_t(b)].prop_lib();
    if (pa != pb) return pa < pb;
    if (raw[size_t(a)].size() != raw[size_t(b)].size()) {
      return raw[size_t(a)].size() > raw[size_t(b)].size();
    }
    return a < b;
  });
  std::vector<int> rank(size_t(report.k));
  for (int pos = 0; pos < report.k; ++pos) rank[size_t(order[size_t(pos)])] = pos;

  report.assignments.resize(group.size());
  for (size_t i = 0; i < group.size(); ++i) {
    report.assignments[i] = rank[size_t(model.assignments[i])];
  }

  const Raw& most_conservative = raw[size_t(order[0])];
  for (int pos = 0; pos < report.k; ++pos) {
    const Raw& r = raw[size_t(order[size_t(pos)])];
    ClusterComposition comp;
    comp.n_lib = r.n_lib;
    comp.n_con = r.n_con;
    comp.prop_lib = r.prop_lib();
    if (pos > 0) {
      auto test = stats::two_proportion_test(r.n_lib, r.size(),
                                             most_conservative.n_lib,
                                             most_conservative.size());
      comp.p_vs_most_conservative = test.p_value;
      comp.p_method = test.method;
    }
    report.clusters.push_back(std::move(comp));
  }
  return report;
}

std::string build_labeling_prompt(
    const std::string& issue_text,
    const std::vector<std::vector<std::string>>& cluster_texts) {
  std::ostringstream out;
  out << "The following are clusters of semantically similar responses to the "
         "question of whether "
      << issue_text << ".\n";
  for (size_t c = 0; c < cluster_texts.size(); ++c) {
    out << "\nCluster " << (c + 1) << ":\n";
    for (const auto& t : cluster_texts[c]) {
      out << "- " << trim(t) << "\n";
    }
  }
  out << "\n" << kLabelInstruction;
  return out.str();
}

std::vector<std::string> parse_label_lines(const std::string& response) {
  std::vector<std::string> labels;
  std::istringstream in(response);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    // strip "1.", "2)", "Cluster 3:", "-" style lead-ins
    size_t pos = 0;
    std::string lower = to_lower(t);
    if (lower.rfind("cluster", 0) == 0) pos = 7;
    while (pos < t.size() &&
           (std::isspace(static_cast<unsigned char>(t[pos])) ||
            std::isdigit(static_cast<unsigned char>(t[pos])))) {
      ++pos;
    }
    if (pos < t.size() && (t[pos] == '.' || t[pos] == ')' || t[pos] == ':' ||
                           t[pos] == '-')) {
      ++pos;
    }
    std::string label = trim(t.substr(pos));
    if (label.empty()) label = t;
    if (label.size() > 80) label.resize(80);
    labels.push_back(trim(label));
  }
  return labels;
}

void label_clusters(ClusterReport& report,
                    const std::vector<JustificationRecord>& group,
                    const std::string& issue_text, gateway::Gateway& labeler,
                    const std::string& labeling_model_id, uint64_t seed,
                    int sample_cap) {
  if (report.skipped || report.k == 0) return;

  std::vector<std::vector<std::string>> members(size_t(report.k));
  for (size_t i = 0; i < group.size(); ++i) {
    members[size_t(report.assignments[i])].push_back(group[i].text);
  }
  std::vector<std::vector<std::string>> sampled(size_t(report.k));
  Rng rng(derive_seed(seed, "label-sample:" + report.issue_id + ":" +
                                axis::sign_name(report.sign_group)));
  for (int c = 0; c < report.k; ++c) {
    auto& texts = members[size_t(c)];
    if (long(texts.size()) <= long(sample_cap)) {
      sampled[size_t(c)] = texts;  // sampling only caps, never drops
    } else {
      for (size_t idx : sample_without_replacement(texts.size(), size_t(sample_cap), rng)) {
        sampled[size_t(c)].push_back(texts[idx]);
      }
    }
  }
  report.labeling_prompt = build_labeling_prompt(issue_text, sampled);

  gateway::CompletionRequest req;
  req.prompt = report.labeling_prompt;
  req.n_samples = 1;
  req.max_tokens = 256;
  req.temperature = 0.0;
  req.model_id = labeling_model_id;

  std::vector<std::string> labels;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto records = labeler.complete(req);
    labels = parse_label_lines(records.front().text);
    if (int(labels.size()) == report.k) break;
    // retry once with a nudge appended; cache key changes with the prompt
    req.prompt = report.labeling_prompt + "\nRespond with exactly " +
                 std::to_string(report.k) + " numbered lines.";
  }
  if (int(labels.size()) != report.k) {
    report.labels_fallback = true;
    labels.clear();
    for (int c = 1; c <= report.k; ++c) {
      labels.push_back("cluster-" + std::to_string(c));
    }
  }
  for (int c = 0; c < report.k; ++c) {
    report.clusters[size_t(c)].label = labels[size_t(c)];
  }
}

}  // namespace silico::justify

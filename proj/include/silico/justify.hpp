#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "silico/axis.hpp"
#include "silico/battery.hpp"
#include "silico/cluster.hpp"
#include "silico/gateway.hpp"
#include "silico/stats.hpp"

namespace silico::justify {

// One "This is because" continuation. Exactly three per parent completion;
// the sign group is inherited from the parent's axis-score classification.
struct JustificationRecord {
  std::string issue_id;
  std::string parent_prompt_id;
  int parent_sample_index = 0;
  int justification_index = 0;  // 0..2
  std::string text;
  // content-addressed key of this text's vector in the embedding store
  std::string embedding_ref;
  axis::Sign sign_group = axis::Sign::indeterminate;
  battery::Side side = battery::Side::liberal;
};

// A parent completion already scored on its issue axis.
struct ScoredParent {
  std::string prompt_id;
  int sample_index = 0;
  std::string prompt_text;
  std::string completion_text;
  battery::Side side = battery::Side::liberal;
  axis::Sign sign = axis::Sign::indeterminate;
};

struct JustifyParams {
  int samples_per_parent = 3;
  int max_tokens = 96;
  double temperature = 1.0;
  std::vector<std::string> stop;
  std::string model_id;
};

struct ClusterComposition {
  std::string label;
  long n_lib = 0;
  long n_con = 0;
  double prop_lib = 0.0;
  // one-sided test that this cluster is more liberal than the most
  // conservative cluster; absent on that cluster itself
  std::optional<double> p_vs_most_conservative;
  std::string p_method;
};

struct ClusterReport {
  std::string issue_id;
  axis::Sign sign_group = axis::Sign::positive;
  int k = 0;
  bool manual_k = false;
  bool skipped = false;
  std::string notice;
  // clusters ascending by liberal proportion (ties: larger cluster first)
  std::vector<ClusterComposition> clusters;
  // per clustered record, index into `clusters`
  std::vector<int> assignments;
  std::vector<cluster::ClusterQuality> qualities;
  long n_records = 0;
  std::string labeling_prompt;  // stored verbatim for audit
  bool labels_fallback = false;
};

struct KConfig {
  int k_min = 2;
  int k_max = 6;
  std::optional<int> override_k;
  int min_group = 0;  // groups below max(2*k_min, min_group) are skipped
  // cluster on unit-normalized embeddings (Euclidean becomes monotone in
  // cosine); off by default, recorded in the run manifest
  bool normalize = false;
};

// Prefix through the first sentence terminator (. ! ?) that is followed by
// whitespace or end of text; the whole trimmed text when there is none.
std::string truncate_to_sentence(const std::string& text);

// original_prompt + single-sentence completion + " This is because".
std::string build_justification_prompt(const std::string& original_prompt,
                                       const std::string& completion);

// Three continuations per parent through the gateway (cached, resumable).
// `embedding_model_id` names the model whose store the embedding_ref keys
// point into.
std::vector<JustificationRecord> run_justifications(
    const std::string& issue_id, const std::vector<ScoredParent>& parents,
    gateway::Gateway& gw, const JustifyParams& params,
    const std::string& embedding_model_id = "");

// Embed one sign group, pick k, count liberal/conservative composition per
// cluster, sort, and test each cluster against the most conservative one.
ClusterReport cluster_sign_group(const std::string& issue_id, axis::Sign sign,
                                 const std::vector<JustificationRecord>& group,
                                 const KConfig& kcfg, gateway::Gateway& gw,
                                 const std::string& embedding_model_id,
                                 uint64_t seed);

// The labeling prompt for a clustered group: instruction template around up
// to `sample_cap` uniformly drawn texts per cluster.
std::string build_labeling_prompt(const std::string& issue_text,
                                  const std::vector<std::vector<std::string>>& cluster_texts);

// Ask the labeling backend for one label per cluster; one retry on a count
// mismatch, then placeholder labels with the fallback flag set.
void label_clusters(ClusterReport& report,
                    const std::vector<JustificationRecord>& group,
                    const std::string& issue_text, gateway::Gateway& labeler,
                    const std::string& labeling_model_id, uint64_t seed,
                    int sample_cap = 100);

// Tolerant parse of "1. Label" / "2) Label" / "Cluster 3: Label" lines.
std::vector<std::string> parse_label_lines(const std::string& response);

}  // namespace silico::justify

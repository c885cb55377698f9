#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "silico/battery.hpp"
#include "silico/gateway.hpp"
#include "silico/justify.hpp"
#include "silico/mock_backend.hpp"
#include "silico/stats.hpp"

namespace silico::run {

struct BackendConfig {
  std::string type = "mock";  // "mock" or "http"
  std::string model_id = "toy-1";
  // http
  std::string base_url;
  std::string api_key;
  // mock
  int embedding_dim = 256;
  double justification_bias = 0.8;
  std::vector<gateway::PlantedEffect> effects;
};

struct SamplingParams {
  int n_samples = 500;
  int max_tokens = 64;
  double temperature = 1.0;
  std::vector<std::string> stop = {"\n"};
};

struct JustifyConfig {
  std::vector<std::string> issues;  // empty = every issue
  int samples_per_parent = 3;
  int max_tokens = 96;
  justify::KConfig k;
  int label_sample_cap = 100;
};

struct RunConfig {
  std::string run_id = "run";
  std::string runs_dir = "runs";
  uint64_t seed = 0;
  battery::BatteryConfig battery;
  std::string ground_truth_path;
  BackendConfig completion_backend;
  BackendConfig embedding_backend;
  BackendConfig labeling_backend;
  SamplingParams sampling;
  JustifyConfig justification;
  int concurrency = 8;
  gateway::RetryPolicy retry;

  nlohmann::json to_json() const;
  std::string config_hash() const;
};

RunConfig parse_run_config(const nlohmann::json& j,
                           const std::string& config_dir = "");
RunConfig load_run_config(const std::string& path);

enum class Stage { battery, complete, score, regress, justify, cluster, report };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);
std::vector<Stage> all_stages();

// Immutable run record: configuration hashes pinned at creation, backend and
// sampling settings inlined for audit, one completion timestamp per finished
// stage. Rerunning against a changed config or battery is refused.
struct RunManifest {
  std::string run_id;
  std::string created_at;
  std::string tool_version;
  uint64_t root_seed = 0;
  std::string battery_hash;
  std::string config_hash;
  nlohmann::json settings;  // backends, sampling, justification knobs
  std::map<std::string, std::string> stages_completed;

  bool stage_done(Stage s) const;
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

struct CoefficientPlotDatum {
  std::string issue_id;
  std::string wording_label;
  double beta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::string color;  // blue / red / gray
};

// Config-driven end-to-end runner. Every stage is idempotent: finished
// stages are no-ops unless forced, and forcing a stage also clears its
// downstream flags because their inputs changed.
class Runner {
 public:
  explicit Runner(RunConfig config);

  // Throws ConfigError when a prerequisite stage has not completed.
  void run_stage(Stage stage, bool force = false);
  void run_all(bool force = false);

  std::string run_dir() const;
  const RunManifest& manifest() const { return manifest_; }
  gateway::Gateway& completion_gateway() { return *completion_gateway_; }

  long backend_completion_calls() const;

 private:
  void open_run();
  void save_manifest();

  void stage_battery();
  void stage_complete();
  void stage_score();
  void stage_regress();
  void stage_justify();
  void stage_cluster();
  void stage_report();

  std::vector<battery::PromptInstance> load_prompts() const;
  std::vector<gateway::CompletionRequest> battery_requests(
      const std::vector<battery::PromptInstance>& prompts) const;

  RunConfig config_;
  RunManifest manifest_;
  std::shared_ptr<gateway::CompletionStore> completion_store_;
  std::shared_ptr<gateway::EmbeddingStore> embedding_store_;
  std::unique_ptr<gateway::Gateway> completion_gateway_;
  std::unique_ptr<gateway::Gateway> labeling_gateway_;
  bool opened_ = false;
};

// 95% confidence interval and significance colour for one regression row.
CoefficientPlotDatum coefficient_datum(const stats::RegressionResult& r,
                                       const std::string& wording_label);

// CSV field quoting (RFC 4180 style) for free-text columns.
std::string csv_escape(const std::string& field);

}  // namespace silico::run

#include "silico/demo.hpp"

#include <filesystem>
#include <fstream>

#include "silico/errors.hpp"

namespace silico::run {

namespace fs = std::filesystem;

namespace {

struct DemoIssue {
  const char* issue_id;
  const char* subject;  // unique marker token, embedded in the wording
  double effect;
};

// ten directional issues plus two nulls; the subject token doubles as the
// marker the mock backend keys its planted effect on
constexpr DemoIssue kDemoIssues[] = {
    {"policy_alpha", "policy_alpha", 0.40},
    {"policy_bravo", "policy_bravo", -0.40},
    {"policy_charlie", "policy_charlie", 0.35},
    {"policy_delta", "policy_delta", -0.35},
    {"policy_echo", "policy_echo", 0.50},
    {"policy_foxtrot", "policy_foxtrot", -0.50},
    {"policy_golf", "policy_golf", 0.30},
    {"policy_hotel", "policy_hotel", -0.30},
    {"policy_india", "policy_india", 0.45},
    {"policy_juliet", "policy_juliet", -0.45},
    {"null_kilo", "null_kilo", 0.0},
    {"null_lima", "null_lima", 0.0},
};

}  // namespace

RunConfig demo_config(const std::string& runs_dir, const std::string& run_id,
                      uint64_t seed) {
  RunConfig c;
  c.run_id = run_id;
  c.runs_dir = runs_dir;
  c.seed = seed;

  battery::BatteryConfig& b = c.battery;
  b.battery_id = "demo-planted-v1";
  b.mode = battery::PromptMode::validation;
  axis::AxisSpec axis;
  axis.axis_id = "default";
  axis.positive_anchors = {"good idea"};
  axis.negative_anchors = {"bad idea"};
  b.axes["default"] = axis;
  for (const auto& d : kDemoIssues) {
    battery::IssueSpec issue;
    issue.issue_id = d.issue_id;
    issue.topic = std::string(d.issue_id).rfind("null_", 0) == 0 ? "null"
                                                                 : "planted";
    issue.axis_ref = "default";
    battery::WordingSpec w;
    w.text = "whether the " + std::string(d.subject) +
             " program should be adopted nationwide";
    w.stems.push_back({"s-default", battery::kDefaultStemText});
    issue.wordings.push_back(std::move(w));
    b.issues.push_back(std::move(issue));
  }

  BackendConfig mock;
  mock.type = "mock";
  mock.model_id = "toy-1";
  mock.embedding_dim = 256;
  mock.justification_bias = 0.8;
  for (const auto& d : kDemoIssues) {
    mock.effects.push_back({d.subject, d.effect});
  }
  c.completion_backend = mock;
  c.embedding_backend = mock;
  c.labeling_backend = mock;

  c.sampling.n_samples = 500;
  c.sampling.max_tokens = 64;
  c.sampling.temperature = 1.0;
  c.sampling.stop = {"\n"};

  c.justification.issues = {"policy_alpha", "null_kilo"};
  c.justification.samples_per_parent = 3;
  c.justification.k.k_min = 2;
  c.justification.k.k_max = 4;
  c.justification.label_sample_cap = 100;

  c.concurrency = 8;
  c.retry.base_delay_ms = 0;  // the mock never fails; skip backoff waits
  return c;
}

std::string write_demo_ground_truth(const std::string& run_dir) {
  fs::create_directories(run_dir);
  std::string path = (fs::path(run_dir) / "ground_truth.csv").string();
  std::ofstream out(path);
  out << "issue_id,expected_sign,source\n";
  for (const auto& d : kDemoIssues) {
    if (d.effect == 0.0) continue;  // nulls stay unscored
    out << d.issue_id << ","
        << (d.effect > 0 ? "liberal_positive" : "conservative_positive")
        << ",planted\n";
  }
  return path;
}

std::string run_demo(const std::string& runs_dir, const std::string& run_id,
                     uint64_t seed, bool force) {
  RunConfig config = demo_config(runs_dir, run_id, seed);
  std::string run_dir = (fs::path(runs_dir) / run_id).string();
  config.ground_truth_path = write_demo_ground_truth(run_dir);
  Runner runner(std::move(config));
  runner.run_all(force);
  return run_dir;
}

}  // namespace silico::run

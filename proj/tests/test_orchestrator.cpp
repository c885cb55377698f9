#include <filesystem>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "json.hpp"
#include "silico/demo.hpp"
#include "silico/errors.hpp"
#include "silico/orchestrator.hpp"

using namespace silico;
using namespace silico::run;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("silico_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

// small mock-backed config: 2 planted issues + 1 null, few samples, with the
// planted ground truth written next to the run
RunConfig small_config(const std::string& runs_dir, uint64_t seed) {
  RunConfig c = demo_config(runs_dir, "small", seed);
  c.battery.issues = {c.battery.issues[0], c.battery.issues[1],
                      c.battery.issues[10]};
  c.sampling.n_samples = 40;
  c.justification.issues = {"policy_alpha"};
  c.justification.k.k_max = 3;
  c.ground_truth_path = write_demo_ground_truth(runs_dir + "/small");
  return c;
}

long count_lines(const std::string& path) {
  std::ifstream in(path);
  long n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("battery stage writes one prompt per side x issue x wording x stem") {
  TempDir tmp("battery");
  RunConfig c = small_config(tmp.str(), 1);
  Runner runner(c);
  runner.run_stage(Stage::battery);
  CHECK(count_lines(runner.run_dir() + "/prompts.jsonl") ==
        battery::planned_sample_count(c.battery, 1));
  CHECK(fs::exists(runner.run_dir() + "/battery.json"));
  CHECK(runner.manifest().stage_done(Stage::battery));
}

TEST_CASE("stages refuse to run before their prerequisites") {
  TempDir tmp("prereq");
  Runner runner(small_config(tmp.str(), 2));
  try {
    runner.run_stage(Stage::score);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("complete") != std::string::npos);
  }
  try {
    runner.run_stage(Stage::cluster);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("justify") != std::string::npos);
  }
}

TEST_CASE("rerunning a completed stage is a no-op without force") {
  TempDir tmp("noop");
  RunConfig c = small_config(tmp.str(), 3);
  Runner runner(c);
  runner.run_stage(Stage::battery);
  runner.run_stage(Stage::complete);
  long calls = runner.backend_completion_calls();
  runner.run_stage(Stage::complete);  // no-op
  CHECK(runner.backend_completion_calls() == calls);

  // a fresh Runner resumes from the manifest and the cache
  Runner resumed(c);
  resumed.run_stage(Stage::complete);
  CHECK(resumed.backend_completion_calls() == 0);
}

TEST_CASE("force clears the stage and everything downstream") {
  TempDir tmp("force");
  RunConfig c = small_config(tmp.str(), 4);
  Runner runner(c);
  runner.run_all();
  CHECK(runner.manifest().stage_done(Stage::report));
  runner.run_stage(Stage::score, /*force=*/true);
  CHECK(runner.manifest().stage_done(Stage::score));
  CHECK_FALSE(runner.manifest().stage_done(Stage::regress));
  CHECK_FALSE(runner.manifest().stage_done(Stage::report));
  CHECK(runner.manifest().stage_done(Stage::battery));
}

TEST_CASE("a changed config is refused against an existing manifest") {
  TempDir tmp("mismatch");
  RunConfig c = small_config(tmp.str(), 5);
  {
    Runner runner(c);
    runner.run_stage(Stage::battery);
  }
  RunConfig altered = c;
  altered.sampling.n_samples = 41;
  CHECK_THROWS_AS(Runner{altered}, ConfigError);

  RunConfig altered_battery = c;
  altered_battery.battery.issues[0].wordings[0].text += " slightly different";
  CHECK_THROWS_AS(Runner{altered_battery}, ConfigError);

  // the identical config reopens fine
  Runner again(c);
  CHECK(again.manifest().stage_done(Stage::battery));
}

TEST_CASE("full small run produces consistent reports") {
  TempDir tmp("full");
  RunConfig c = small_config(tmp.str(), 6);
  Runner runner(c);
  runner.run_all();
  std::string dir = runner.run_dir();

  // scores: one row per (prompt, sample), with the documented column set
  {
    std::ifstream scores(dir + "/scores.csv");
    std::string header;
    std::getline(scores, header);
    CHECK(header ==
          "prompt_id,sample_index,side,issue_id,wording_index,sim_pos,sim_neg,score");
  }
  CHECK(count_lines(dir + "/scores.csv") ==
        1 + battery::planned_sample_count(c.battery, c.sampling.n_samples));

  // coefficients: one per wording; verdicts: one per issue
  CHECK(count_lines(dir + "/coefficients.csv") == 1 + 3);
  CHECK(count_lines(dir + "/verdicts.csv") == 1 + 3);

  json summary;
  std::ifstream(dir + "/summary.json") >> summary;
  long k = summary["accuracy"]["questions"]["k"];
  long n = summary["accuracy"]["questions"]["n"];
  CHECK(n == 2);  // two planted issues are scored; the null is unscored
  CHECK(k == 2);
  // ground truth rows without a battery issue surface as warnings
  CHECK(summary["ground_truth_without_battery_issue"].size() == 8);
  CHECK(summary["unscored_questions"] == json::array({"null_kilo"}));

  // verdicts.csv row count matches the accuracy denominators plus unscored
  std::ifstream verdicts(dir + "/verdicts.csv");
  std::string line;
  std::getline(verdicts, line);  // header
  long correct = 0, unscored = 0;
  while (std::getline(verdicts, line)) {
    if (line.find(",correct,") != std::string::npos) ++correct;
    if (line.find(",unscored,") != std::string::npos) ++unscored;
  }
  CHECK(correct == k);
  CHECK(unscored == 1);

  // justification conservation on the one clustered issue
  json cluster_report;
  std::ifstream(dir + "/clusters/policy_alpha_positive.json") >> cluster_report;
  json negative_report;
  std::ifstream(dir + "/clusters/policy_alpha_negative.json") >> negative_report;
  long pos_n = cluster_report["n_records"];
  long neg_n = negative_report["n_records"];
  long indeterminate = cluster_report["indeterminate_excluded"];
  CHECK(pos_n + neg_n + indeterminate ==
        3 * 2 * c.sampling.n_samples);  // 3 per parent, both sides
}

TEST_CASE("coefficient coloring follows the sign and significance rules") {
  stats::RegressionResult r;
  r.issue_id = "x";
  r.n_lib = 50;
  r.n_con = 50;
  r.se = 0.01;

  r.beta = 0.3;
  r.p_value = 0.001;
  CHECK(coefficient_datum(r, "w").color == "blue");
  r.beta = -0.3;
  CHECK(coefficient_datum(r, "w").color == "red");
  r.p_value = 0.2;
  CHECK(coefficient_datum(r, "w").color == "gray");
  r.beta = 0.0;
  r.p_value = 0.001;
  CHECK(coefficient_datum(r, "w").color == "gray");

  // CI brackets beta
  r.beta = 0.25;
  r.p_value = 0.01;
  auto d = coefficient_datum(r, "w");
  CHECK(d.ci_low < r.beta);
  CHECK(d.ci_high > r.beta);
  CHECK(d.ci_low == doctest::Approx(2.0 * r.beta - d.ci_high).epsilon(1e-9));
}

TEST_CASE("csv escaping quotes fields with commas and quotes") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("run config parsing resolves relative paths and validates backends") {
  TempDir tmp("config");
  std::string battery_path = tmp.str() + "/batt.json";
  {
    RunConfig d = demo_config(tmp.str(), "x", 1);
    std::ofstream(battery_path) << battery::battery_to_json(d.battery).dump();
  }
  std::string config_path = tmp.str() + "/run.json";
  std::ofstream(config_path) << json{
      {"run_id", "cfg"},
      {"runs_dir", "out"},
      {"seed", 7},
      {"battery", "batt.json"},
      {"completion_backend",
       {{"type", "mock"}, {"model_id", "m"}, {"effects", json::array()}}},
      {"sampling", {{"n_samples", 5}}}}.dump();
  RunConfig c = load_run_config(config_path);
  CHECK(c.run_id == "cfg");
  CHECK(c.seed == 7);
  CHECK(c.runs_dir == tmp.str() + "/out");
  CHECK(c.sampling.n_samples == 5);
  CHECK(c.battery.battery_id == "demo-planted-v1");

  std::ofstream(config_path) << json{{"battery", "batt.json"},
                                     {"completion_backend", {{"type", "carrier-pigeon"}}}}
                                    .dump();
  CHECK_THROWS_AS(load_run_config(config_path), ConfigError);
}

TEST_CASE("demo ground truth covers exactly the ten planted issues") {
  TempDir tmp("gt");
  std::string path = write_demo_ground_truth(tmp.str());
  auto entries = stats::load_ground_truth(path);
  CHECK(entries.size() == 10);
  for (const auto& e : entries) {
    CHECK(e.issue_id.rfind("policy_", 0) == 0);
  }
}

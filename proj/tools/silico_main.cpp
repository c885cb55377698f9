#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "silico/demo.hpp"
#include "silico/errors.hpp"
#include "silico/orchestrator.hpp"
#include "silico/version.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string run_id;
  bool force = false;
  std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* config =
      cmd->add_option("--config", opts.config_path, "run configuration JSON");
  if (config_required) config->required();
  cmd->add_option("--run", opts.run_id, "run id (overrides the config)");
  cmd->add_flag("--force", opts.force, "rerun the stage even if completed");
  cmd->add_option("--seed", opts.seed, "root seed (overrides the config)");
}

silico::run::RunConfig configure(const CommonOpts& opts) {
  auto config = silico::run::load_run_config(opts.config_path);
  if (!opts.run_id.empty()) config.run_id = opts.run_id;
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silico: simulated-respondent survey engine"};
  app.set_version_flag("--version", silico::kVersion);
  app.require_subcommand(1);

  std::map<std::string, CommonOpts> stage_opts;
  for (silico::run::Stage stage : silico::run::all_stages()) {
    std::string name = silico::run::stage_name(stage);
    auto* cmd = app.add_subcommand(name, "run the " + name + " stage");
    add_common(cmd, stage_opts[name], true);
  }

  CommonOpts run_opts;
  auto* run_cmd = app.add_subcommand("run", "run every stage in order");
  add_common(run_cmd, run_opts, true);

  CommonOpts demo_opts;
  std::string demo_runs_dir = "runs";
  auto* demo_cmd = app.add_subcommand(
      "demo", "full offline pipeline on the bundled planted battery");
  demo_cmd->add_option("--runs-dir", demo_runs_dir, "output directory");
  demo_cmd->add_option("--run", demo_opts.run_id, "run id (default: demo)");
  demo_cmd->add_flag("--force", demo_opts.force, "rerun completed stages");
  demo_cmd->add_option("--seed", demo_opts.seed, "root seed (default: 42)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (demo_cmd->parsed()) {
      std::string run_id = demo_opts.run_id.empty() ? "demo" : demo_opts.run_id;
      uint64_t seed = demo_opts.seed.value_or(42);
      std::string dir =
          silico::run::run_demo(demo_runs_dir, run_id, seed, demo_opts.force);
      std::cout << "demo run complete: " << dir << "\n";
      return 0;
    }
    if (run_cmd->parsed()) {
      silico::run::Runner runner(configure(run_opts));
      runner.run_all(run_opts.force);
      std::cout << "run complete: " << runner.run_dir() << "\n";
      return 0;
    }
    for (silico::run::Stage stage : silico::run::all_stages()) {
      std::string name = silico::run::stage_name(stage);
      auto* cmd = app.get_subcommand(name);
      if (!cmd->parsed()) continue;
      silico::run::Runner runner(configure(stage_opts[name]));
      runner.run_stage(stage, stage_opts[name].force);
      std::cout << "stage " << name << " complete: " << runner.run_dir() << "\n";
      return 0;
    }
  } catch (const silico::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const silico::TransportError& e) {
    std::cerr << "backend failure after " << e.attempts()
              << " attempts: " << e.what() << "\n";
    return 3;
  } catch (const silico::BackendError& e) {
    std::cerr << "backend refusal: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

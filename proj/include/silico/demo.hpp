#pragma once

#include <cstdint>
#include <string>

#include "silico/orchestrator.hpp"

namespace silico::run {

// Bundled fully-offline pipeline exercise: ten synthetic issues with planted
// directional effects (|effect| >= 0.3), two planted nulls, justification
// clustering on one directional and one null issue. Runs end to end on the
// mock backend in seconds.
RunConfig demo_config(const std::string& runs_dir, const std::string& run_id,
                      uint64_t seed);

// Writes the demo ground truth (the ten planted directions) into the run
// directory and returns its path.
std::string write_demo_ground_truth(const std::string& run_dir);

// Convenience: build the config, write ground truth, run every stage.
// Returns the run directory.
std::string run_demo(const std::string& runs_dir, const std::string& run_id,
                     uint64_t seed, bool force = false);

}  // namespace silico::run

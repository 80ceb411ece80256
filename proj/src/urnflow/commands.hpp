#pragma once

// Experiment commands driven by an ExperimentConfig. Each writes its files
// under the configured output directory and reports through `message`.

#include <functional>
#include <string>
#include <vector>

#include "urnflow/config.hpp"

namespace urnflow::experiment {

struct CommandContext {
  unsigned jobs = 1;
  std::function<void(const std::string&)> message;

  void say(const std::string& line) const {
    if (message) message(line);
  }
};

struct CommandResult {
  std::vector<std::string> files;
};

CommandResult cmd_simulate(const ExperimentConfig& cfg, const CommandContext& ctx);
CommandResult cmd_ode(const ExperimentConfig& cfg, const CommandContext& ctx);
CommandResult cmd_ensemble(const ExperimentConfig& cfg, const CommandContext& ctx);
CommandResult cmd_analyze(const ExperimentConfig& cfg, const CommandContext& ctx);

/// Dispatches on cfg.run.command (verify excluded; see verify.hpp).
CommandResult run_command(const ExperimentConfig& cfg, const CommandContext& ctx);

}  // namespace urnflow::experiment

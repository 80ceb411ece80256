// Command-line front end. Talks to the library exclusively through the C API.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "urnflow/urnflow.h"

namespace {

enum ExitCode { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeError = 3 };

int exit_code(urnflow_status s) {
  switch (s) {
    case URNFLOW_OK: return kOk;
    case URNFLOW_ERR_VERIFY_FAILED: return kVerifyFailed;
    case URNFLOW_ERR_CONFIG:
    case URNFLOW_ERR_INVALID_ARGUMENT: return kConfigError;
    case URNFLOW_ERR_RUNTIME:
    case URNFLOW_ERR_IO: return kRuntimeError;
  }
  return kRuntimeError;
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

int report(urnflow_status s) {
  if (s != URNFLOW_OK) std::fprintf(stderr, "urnflow: %s: %s\n", urnflow_status_name(s), urnflow_last_error());
  return exit_code(s);
}

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> thin;
  std::optional<std::string> out;
  unsigned jobs = 0;
};

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_config(const std::string& command, const RunFlags& flags) {
  urnflow_config* cfg = nullptr;
  if (auto s = urnflow_config_load(flags.config.c_str(), &cfg); s != URNFLOW_OK) return report(s);
  std::unique_ptr<urnflow_config, decltype(&urnflow_config_free)> guard(cfg, urnflow_config_free);

  urnflow_status s = URNFLOW_OK;
  if (!command.empty()) s = urnflow_config_set_command(cfg, command.c_str());
  if (s == URNFLOW_OK && flags.seed) s = urnflow_config_set_seed(cfg, *flags.seed);
  if (s == URNFLOW_OK && flags.thin) s = urnflow_config_set_thin(cfg, *flags.thin);
  std::optional<std::string> out = flags.out;
  if (!out) {
    if (const char* env = std::getenv("URNFLOW_OUT"); env && *env) out = env;
  }
  if (s == URNFLOW_OK && out) s = urnflow_config_set_output_dir(cfg, out->c_str());
  if (s != URNFLOW_OK) return report(s);
  if (std::string(urnflow_config_command(cfg)) == "verify") {
    std::fprintf(stderr, "urnflow: use 'urnflow verify' to run the acceptance suite\n");
    return kConfigError;
  }
  return report(urnflow_run(cfg, resolve_jobs(flags.jobs), print_line, nullptr));
}

void add_run_flags(CLI::App* sub, RunFlags& flags, bool needs_config = true) {
  auto* opt = sub->add_option("config", flags.config, "experiment config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.seed, "master seed (overrides run.seed)");
  sub->add_option("-j,--jobs", flags.jobs, "worker threads for ensembles (default: all cores)");
  sub->add_option("--out", flags.out, "output directory (overrides URNFLOW_OUT and the config)");
  sub->add_option("--thin", flags.thin, "record every n-th step / flow node")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urnflow: generalized urn processes and their mean-limit dynamics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(urnflow_version()));

  RunFlags flags;
  const char* commands[][2] = {
      {"simulate", "simulate one path; writes path.csv (and path.svg)"},
      {"ode", "integrate the mean-limit ODE; writes flow.csv, analysis.csv, orbit.csv"},
      {"ensemble", "replicate Monte Carlo runs; writes ensemble.csv"},
      {"analyze", "equilibria, permanence, growth conditions and orbits; writes analysis.csv"},
      {"run", "run the command named in the config's run block"},
  };
  for (auto& c : commands) add_run_flags(app.add_subcommand(c[0], c[1]), flags);

  std::string filter = "all";
  std::string verify_out;
  unsigned verify_jobs = 1;
  bool tamper = false;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("filter", filter, "all, drift-oracles, fast, statistical, or criterion names/numbers");
  verify->add_option("-j,--jobs", verify_jobs, "worker threads for the statistical criteria");
  verify->add_option("--out", verify_out, "directory for the statistical runs' CSV files");
  verify->add_flag("--tamper-drift", tamper, "negative control: perturb the drift seen by the oracles")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (verify->parsed()) {
    const auto s = urnflow_verify(filter.c_str(), std::max(1u, verify_jobs),
                                  verify_out.empty() ? nullptr : verify_out.c_str(),
                                  tamper ? URNFLOW_VERIFY_TAMPER_DRIFT : 0u, print_line, nullptr);
    return report(s);
  }
  for (auto* sub : app.get_subcommands()) {
    const std::string name = sub->get_name();
    return run_config(name == "run" ? std::string() : name, flags);
  }
  return kConfigError;
}

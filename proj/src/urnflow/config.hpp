#pragma once

// Experiment description read from JSON: which model, what to run, where the
// output goes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "urnflow/analysis.hpp"
#include "urnflow/models.hpp"

namespace urnflow::experiment {

using models::Matrix;

struct ModelSpec {
  enum class Kind { replicator, selection_mutation, custom };

  Kind kind = Kind::replicator;
  std::string preset;  // "hypercycle" (replicator), "cyclic" (selection_mutation) or empty
  int k = 0;

  // replicator
  double b = 0.0, d = 0.0, nu = 0.0;
  Matrix B, D;

  // selection-mutation (d and nu shared with the replicator fields)
  double f = 0.0, s = 0.0, mu1 = 0.0, mu2 = 0.0;
  Matrix F, Mu;
  std::vector<std::vector<std::vector<double>>> offspring;  // optional k x k x (m+1)

  // custom
  std::string name;
  std::vector<models::MonomialRule> rules;
};

struct SimulateSpec {
  std::vector<std::int64_t> z0;
  std::uint64_t max_steps = 100000;
  std::optional<double> max_tau;
  std::optional<std::int64_t> min_population;
};

struct OdeSpec {
  Vec x0;
  double T = 100.0;
  double h = 1e-2;
  bool analysis = false;
  double orbit_t_max = 0.0;  // 0 disables orbit detection
};

struct EnsembleSpec {
  std::vector<std::int64_t> z0;
  std::size_t replicates = 200;
  std::int64_t survival_threshold = 10000;
  std::uint64_t max_steps = 1000000;
  std::vector<std::uint64_t> checkpoints;
  std::string attractor = "none";  // none | interior | orbit
  Vec orbit_x0;
  double orbit_t_max = 2000.0;
};

struct AnalyzeSpec {
  Vec p;  // permanence weights; empty means uniform
  Vec x0;
  double orbit_t_max = 0.0;
};

struct RunSpec {
  std::string command = "simulate";
  std::uint64_t seed = 1;
  SimulateSpec simulate;
  OdeSpec ode;
  EnsembleSpec ensemble;
  AnalyzeSpec analyze;
  std::string verify_filter = "all";
};

struct OutputSpec {
  std::string directory = "out";
  bool csv = true;
  bool svg = false;
  std::uint64_t thin = 1;
};

struct ExperimentConfig {
  ModelSpec model;
  RunSpec run;
  OutputSpec output;
};

/// Parses and validates a config. Errors carry ErrorCode::config and name the
/// offending key path (or line and column for syntax errors).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON with every default filled in.
std::string serialize_config(const ExperimentConfig& cfg);

/// A model instantiated from its spec, with the systems needed by commands.
struct BuiltModel {
  std::optional<UrnModel> model;
  MeanLimitSystem derived;
  std::optional<MeanLimitSystem> closed_form;
  std::optional<models::ReplicatorParams> replicator;
  std::optional<Matrix> payoff;  // replicator A, or F for selection-mutation

  const UrnModel& urn() const { return *model; }
};

BuiltModel build_model(const ModelSpec& spec);

/// Deterministic interior start (1, 2, ..., k)/sum used when none is given.
Vec default_start(int k);

}  // namespace urnflow::experiment

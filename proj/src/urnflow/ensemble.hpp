#pragma once

// Replicate Monte Carlo runs of an urn model: establishment frequencies and
// attractor-distance statistics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "urnflow/analysis.hpp"
#include "urnflow/urn.hpp"

namespace urnflow::ensemble {

struct EnsembleConfig {
  std::size_t replicates = 1;
  std::uint64_t master_seed = 0;
  UrnState z0;
  std::int64_t survival_threshold = 0;  // M_big
  std::uint64_t max_steps = 0;          // horizon N_max
  std::optional<analysis::AttractorSpec> attractor;
  std::vector<std::uint64_t> distance_checkpoints;
  unsigned jobs = 1;

  void validate() const;
};

enum class Outcome { established, extinct, censored, failed };

const char* outcome_name(Outcome o);

struct ReplicateSummary {
  std::size_t index = 0;
  Outcome outcome = Outcome::censored;
  std::uint64_t steps = 0;
  std::int64_t final_size = 0;
  double final_tau = 0.0;
  /// Frequencies at each checkpoint; empty when the run ended earlier.
  std::vector<Vec> checkpoint_x;
  Vec final_x;
  /// Distance to the configured attractor at each checkpoint; NaN when not
  /// reached or when no attractor was configured.
  std::vector<double> checkpoint_distance;
  double final_distance = 0.0;
  /// Partial sums of 1/|z(n)|^(1+delta) for delta = 0.5 and delta = 1.
  double sum_delta_half = 0.0;
  double sum_delta_one = 0.0;
  /// Increment of the delta = 0.5 sum over (roughly) the final 10% of steps.
  double tail_delta_half = 0.0;
  std::string error;
};

struct Proportion {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

/// Wilson score interval at 95%.
Proportion wilson_interval(std::size_t successes, std::size_t trials);

struct EnsembleResult {
  std::vector<ReplicateSummary> replicates;
  std::vector<std::uint64_t> checkpoints;
  bool has_attractor = false;

  std::size_t count(Outcome o) const;
};

EnsembleResult run_ensemble(const UrnModel& model, const EnsembleConfig& cfg);

Proportion establishment_probability(const EnsembleResult& result);

struct CheckpointStats {
  std::string label;  // checkpoint step index or "final"
  std::size_t count = 0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

struct ConvergenceTable {
  std::vector<CheckpointStats> rows;
  /// Fraction of established runs whose distance at their last recorded
  /// checkpoint is below that at their first.
  double decreasing_fraction = 0.0;
  std::size_t surviving = 0;
  bool empty = false;
};

/// Quantiles of attractor distance among established runs at each checkpoint
/// and at the terminal state.
ConvergenceTable convergence_statistics(const EnsembleResult& result,
                                        const analysis::AttractorSpec& attractor);

/// CSV: one row per replicate plus `#agg` footer lines.
std::string to_csv(const EnsembleResult& result);

}  // namespace urnflow::ensemble

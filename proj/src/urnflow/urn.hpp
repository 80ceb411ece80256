#pragma once

// Generalized urn processes: move vectors, transition rules, the exact
// finite-population kernel, and the embedded-chain simulator with its
// tau-clock.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "urnflow/rng.hpp"

namespace urnflow {

using Vec = std::vector<double>;

struct MoveVector {
  std::vector<int> w;

  std::size_t size() const { return w.size(); }
  /// Net change in population size.
  int alpha() const;
  /// Sum of absolute entries.
  int magnitude() const;
  bool is_zero() const;
  bool operator==(const MoveVector&) const = default;
};

int alpha(const MoveVector& w);

struct UrnState {
  std::vector<std::int64_t> counts;

  std::size_t dimension() const { return counts.size(); }
  std::int64_t size() const;
  bool extinct() const { return size() == 0; }
  /// z/|z|, or the null distribution (all zeros) when extinct.
  Vec frequencies() const;
  bool operator==(const UrnState&) const = default;
};

using ProbabilityMap = std::function<double(std::span<const double>)>;

struct TransitionRule {
  MoveVector move;
  ProbabilityMap limit_prob;
};

/// Evaluates every rule of a fixed move list at once.
using LimitEvaluator = std::function<void(std::span<const double> x, std::span<double> probs)>;
using KernelEvaluator = std::function<void(const UrnState& z, std::span<double> probs)>;

/// A finite list of moves with their limiting probability maps p_w.
class RuleSet {
 public:
  RuleSet(int k, std::vector<MoveVector> moves, LimitEvaluator limit);

  static RuleSet from_rules(int k, std::vector<TransitionRule> rules);

  int dimension() const { return k_; }
  std::size_t size() const { return moves_.size(); }
  const std::vector<MoveVector>& moves() const { return moves_; }
  const MoveVector& move(std::size_t i) const { return moves_[i]; }
  int max_magnitude() const;

  void limit_probabilities(std::span<const double> x, std::span<double> out) const;
  Vec limit_probabilities(std::span<const double> x) const;

  /// View of one rule as a standalone TransitionRule.
  TransitionRule rule(std::size_t i) const;

 private:
  int k_;
  std::vector<MoveVector> moves_;
  LimitEvaluator limit_;
};

/// A full urn process. Immutable after construction and safe to share
/// across threads.
class UrnModel {
 public:
  UrnModel(std::string name, int m, RuleSet rules, KernelEvaluator kernel, double a_bound);

  /// Model whose exact kernel equals p_w(z/|z|); A2 then holds with a = 0.
  static UrnModel from_limit(std::string name, int m, RuleSet rules);

  const std::string& name() const { return name_; }
  int dimension() const { return rules_.dimension(); }
  int max_move() const { return m_; }
  const RuleSet& rules() const { return rules_; }
  std::size_t num_moves() const { return rules_.size(); }
  /// Analytic constant a of the A2 bound |p_w(z/|z|) - Pi(z,z+w)| <= a/|z|.
  double a_bound() const { return a_bound_; }

  /// Pi(z, z+w) for every rule w; z must be nonzero.
  void kernel_probabilities(const UrnState& z, std::span<double> out) const;
  Vec kernel_probabilities(const UrnState& z) const;

 private:
  std::string name_;
  int m_;
  RuleSet rules_;
  KernelEvaluator kernel_;
  double a_bound_;
};

struct ValidationReport {
  double max_normalization_error = 0.0;
  /// sup over samples of |z| * max_w |p_w(z/|z|) - Pi(z,z+w)|.
  double empirical_a = 0.0;
  int max_move = 0;
  int m = 0;
  /// Empirical a restricted to each distinct sampled population size, ascending.
  std::vector<std::pair<std::int64_t, double>> a_by_size;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_model(const UrnModel& model, std::span<const UrnState> sample_states);

/// One draw of the embedded chain. Zero is absorbing.
UrnState step(const UrnModel& model, const UrnState& z, Rng& rng);

/// Exact E[z(n+1) - z(n) | z(n) = z] by kernel enumeration.
Vec conditional_mean_increment(const UrnModel& model, const UrnState& z);

class StopCondition {
 public:
  enum class Kind { max_steps, min_population, extinction, max_tau, any, all };

  static StopCondition max_steps(std::uint64_t n);
  static StopCondition min_population(std::int64_t m);
  static StopCondition extinction();
  static StopCondition max_tau(double t);
  static StopCondition any(std::vector<StopCondition> parts);
  static StopCondition all(std::vector<StopCondition> parts);

  bool satisfied(std::uint64_t n, const UrnState& z, double tau) const;

  Kind kind() const { return kind_; }
  double value() const { return value_; }
  const std::vector<StopCondition>& parts() const { return parts_; }

 private:
  StopCondition(Kind kind, double value, std::vector<StopCondition> parts = {})
      : kind_(kind), value_(value), parts_(std::move(parts)) {}

  Kind kind_;
  double value_;
  std::vector<StopCondition> parts_;
};

StopCondition operator||(StopCondition a, StopCondition b);
StopCondition operator&&(StopCondition a, StopCondition b);

struct PathEntry {
  std::uint64_t n = 0;
  UrnState z;
  Vec x;
  double tau = 0.0;
};

/// A realized trajectory, optionally thinned to every `thin`-th update.
/// The initial and final updates are always present.
struct PathRecord {
  std::vector<PathEntry> steps;
  std::uint64_t thin = 1;

  const PathEntry& front() const { return steps.front(); }
  const PathEntry& back() const { return steps.back(); }
  double final_tau() const { return steps.back().tau; }
  std::size_t size() const { return steps.size(); }
};

/// Streaming simulator; holds all per-run mutable state.
class Simulator {
 public:
  Simulator(const UrnModel& model, UrnState z0, Rng rng);

  void advance();

  std::uint64_t steps() const { return n_; }
  const UrnState& state() const { return z_; }
  double tau() const { return tau_; }

 private:
  const UrnModel& model_;
  UrnState z_;
  Rng rng_;
  std::uint64_t n_ = 0;
  double tau_ = 0.0;
  Vec probs_;
};

/// Runs until `stop` holds or the population goes extinct; extinction always
/// ends the run since the chain is then absorbed.
PathRecord simulate(const UrnModel& model, const UrnState& z0, const StopCondition& stop,
                    std::uint64_t seed, std::uint64_t thin = 1);

/// X(t) = x(n) for tau(n) <= t < tau(n+1).
const Vec& interpolate(const PathRecord& path, double t);

/// Index of the recorded entry active at time t.
std::size_t entry_at(const PathRecord& path, double t);

}  // namespace urnflow

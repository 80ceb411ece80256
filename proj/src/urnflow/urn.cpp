#include "urnflow/urn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "urnflow/error.hpp"

namespace urnflow {

namespace {

constexpr double kMassTolerance = 1e-9;

void sample_move_index_check(double total) {
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream os;
    os << "kernel mass " << total << " differs from 1 (ill-specified model)";
    throw Error(ErrorCode::runtime, os.str());
  }
}

// Cumulative inversion over the move list. Roundoff at the top end falls
// back to the last move carrying positive mass.
std::size_t sample_index(std::span<const double> probs, double u) {
  double total = 0.0;
  for (double p : probs) total += p;
  sample_move_index_check(total);
  double target = u * total;
  double acc = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (target < acc) return i;
  }
  if (last_positive == probs.size()) throw Error(ErrorCode::runtime, "kernel has no mass");
  return last_positive;
}

void apply_move(UrnState& z, const MoveVector& w) {
  for (std::size_t i = 0; i < z.counts.size(); ++i) {
    z.counts[i] += w.w[i];
    if (z.counts[i] < 0) {
      throw Error(ErrorCode::runtime,
                  "move drove a count negative; the model assigns mass to an infeasible move");
    }
  }
}

}  // namespace

int MoveVector::alpha() const { return std::accumulate(w.begin(), w.end(), 0); }

int MoveVector::magnitude() const {
  int s = 0;
  for (int v : w) s += std::abs(v);
  return s;
}

bool MoveVector::is_zero() const {
  return std::all_of(w.begin(), w.end(), [](int v) { return v == 0; });
}

int alpha(const MoveVector& w) { return w.alpha(); }

std::int64_t UrnState::size() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

Vec UrnState::frequencies() const {
  Vec x(counts.size(), 0.0);
  const auto n = size();
  if (n == 0) return x;
  for (std::size_t i = 0; i < counts.size(); ++i)
    x[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return x;
}

RuleSet::RuleSet(int k, std::vector<MoveVector> moves, LimitEvaluator limit)
    : k_(k), moves_(std::move(moves)), limit_(std::move(limit)) {
  require(k >= 1, "dimension must be positive");
  require(!moves_.empty(), "rule set is empty");
  for (const auto& w : moves_)
    require(static_cast<int>(w.size()) == k, "move vector has wrong dimension");
  require(static_cast<bool>(limit_), "missing limit evaluator");
}

RuleSet RuleSet::from_rules(int k, std::vector<TransitionRule> rules) {
  std::vector<MoveVector> moves;
  std::vector<ProbabilityMap> maps;
  for (auto& r : rules) {
    moves.push_back(r.move);
    maps.push_back(std::move(r.limit_prob));
  }
  auto shared = std::make_shared<const std::vector<ProbabilityMap>>(std::move(maps));
  return RuleSet(k, std::move(moves), [shared](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < shared->size(); ++i) out[i] = (*shared)[i](x);
  });
}

int RuleSet::max_magnitude() const {
  int m = 0;
  for (const auto& w : moves_) m = std::max(m, w.magnitude());
  return m;
}

void RuleSet::limit_probabilities(std::span<const double> x, std::span<double> out) const {
  limit_(x, out);
}

Vec RuleSet::limit_probabilities(std::span<const double> x) const {
  Vec out(moves_.size());
  limit_(x, out);
  return out;
}

TransitionRule RuleSet::rule(std::size_t i) const {
  require(i < moves_.size(), "rule index out of range");
  auto limit = limit_;
  auto n = moves_.size();
  return {moves_[i], [limit, n, i](std::span<const double> x) {
            Vec buf(n);
            limit(x, buf);
            return buf[i];
          }};
}

UrnModel::UrnModel(std::string name, int m, RuleSet rules, KernelEvaluator kernel, double a_bound)
    : name_(std::move(name)), m_(m), rules_(std::move(rules)), kernel_(std::move(kernel)),
      a_bound_(a_bound) {
  require(m_ >= 1, "maximal move size m must be a positive integer");
  require(static_cast<bool>(kernel_), "missing kernel evaluator");
}

UrnModel UrnModel::from_limit(std::string name, int m, RuleSet rules) {
  auto evaluator = [rules](const UrnState& z, std::span<double> out) {
    auto x = z.frequencies();
    rules.limit_probabilities(x, out);
  };
  return UrnModel(std::move(name), m, rules, std::move(evaluator), 0.0);
}

void UrnModel::kernel_probabilities(const UrnState& z, std::span<double> out) const {
  require(z.dimension() == static_cast<std::size_t>(dimension()), "state has wrong dimension");
  require(!z.extinct(), "kernel is only defined away from the absorbing state");
  kernel_(z, out);
}

Vec UrnModel::kernel_probabilities(const UrnState& z) const {
  Vec out(num_moves());
  kernel_probabilities(z, out);
  return out;
}

ValidationReport validate_model(const UrnModel& model, std::span<const UrnState> sample_states) {
  require(!sample_states.empty(), "validate_model needs at least one sample state");
  ValidationReport report;
  report.m = model.max_move();
  report.max_move = model.rules().max_magnitude();
  if (report.max_move > report.m) {
    std::ostringstream os;
    os << "A1 violated: a rule moves " << report.max_move << " individuals but m = " << report.m;
    report.violations.push_back(os.str());
  }

  std::map<std::int64_t, double> by_size;
  Vec kernel(model.num_moves());
  Vec limit(model.num_moves());
  for (const auto& z : sample_states) {
    require(!z.extinct(), "sample states must be nonzero");
    model.kernel_probabilities(z, kernel);
    auto x = z.frequencies();
    model.rules().limit_probabilities(x, limit);
    double total = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < kernel.size(); ++i) {
      total += kernel[i];
      worst = std::max(worst, std::abs(kernel[i] - limit[i]));
    }
    report.max_normalization_error = std::max(report.max_normalization_error, std::abs(total - 1.0));
    double scaled = worst * static_cast<double>(z.size());
    report.empirical_a = std::max(report.empirical_a, scaled);
    auto& slot = by_size[z.size()];
    slot = std::max(slot, scaled);
  }
  report.a_by_size.assign(by_size.begin(), by_size.end());
  if (report.max_normalization_error > kMassTolerance) {
    std::ostringstream os;
    os << "kernel normalization error " << report.max_normalization_error << " exceeds "
       << kMassTolerance;
    report.violations.push_back(os.str());
  }
  return report;
}

UrnState step(const UrnModel& model, const UrnState& z, Rng& rng) {
  if (z.extinct()) return z;
  auto probs = model.kernel_probabilities(z);
  auto idx = sample_index(probs, rng.uniform());
  UrnState next = z;
  apply_move(next, model.rules().move(idx));
  return next;
}

Vec conditional_mean_increment(const UrnModel& model, const UrnState& z) {
  require(!z.extinct(), "conditional mean increment needs a nonzero state");
  auto probs = model.kernel_probabilities(z);
  Vec mean(z.dimension(), 0.0);
  for (std::size_t r = 0; r < probs.size(); ++r) {
    const auto& w = model.rules().move(r).w;
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += probs[r] * w[i];
  }
  return mean;
}

StopCondition StopCondition::max_steps(std::uint64_t n) {
  return {Kind::max_steps, static_cast<double>(n)};
}
StopCondition StopCondition::min_population(std::int64_t m) {
  return {Kind::min_population, static_cast<double>(m)};
}
StopCondition StopCondition::extinction() { return {Kind::extinction, 0.0}; }
StopCondition StopCondition::max_tau(double t) { return {Kind::max_tau, t}; }
StopCondition StopCondition::any(std::vector<StopCondition> parts) {
  require(!parts.empty(), "empty disjunction");
  return {Kind::any, 0.0, std::move(parts)};
}
StopCondition StopCondition::all(std::vector<StopCondition> parts) {
  require(!parts.empty(), "empty conjunction");
  return {Kind::all, 0.0, std::move(parts)};
}

bool StopCondition::satisfied(std::uint64_t n, const UrnState& z, double tau) const {
  switch (kind_) {
    case Kind::max_steps: return static_cast<double>(n) >= value_;
    case Kind::min_population: return static_cast<double>(z.size()) >= value_;
    case Kind::extinction: return z.extinct();
    case Kind::max_tau: return tau >= value_;
    case Kind::any:
      return std::any_of(parts_.begin(), parts_.end(),
                         [&](const StopCondition& c) { return c.satisfied(n, z, tau); });
    case Kind::all:
      return std::all_of(parts_.begin(), parts_.end(),
                         [&](const StopCondition& c) { return c.satisfied(n, z, tau); });
  }
  return true;
}

StopCondition operator||(StopCondition a, StopCondition b) {
  return StopCondition::any({std::move(a), std::move(b)});
}
StopCondition operator&&(StopCondition a, StopCondition b) {
  return StopCondition::all({std::move(a), std::move(b)});
}

Simulator::Simulator(const UrnModel& model, UrnState z0, Rng rng)
    : model_(model), z_(std::move(z0)), rng_(rng), probs_(model.num_moves()) {
  require(z_.dimension() == static_cast<std::size_t>(model.dimension()),
          "initial state has wrong dimension");
  for (auto c : z_.counts) require(c >= 0, "initial state has a negative count");
}

void Simulator::advance() {
  const auto size = z_.size();
  if (size == 0) {
    tau_ += 1.0;
    ++n_;
    return;
  }
  model_.kernel_probabilities(z_, probs_);
  auto idx = sample_index(probs_, rng_.uniform());
  apply_move(z_, model_.rules().move(idx));
  tau_ += 1.0 / static_cast<double>(size);
  ++n_;
}

PathRecord simulate(const UrnModel& model, const UrnState& z0, const StopCondition& stop,
                    std::uint64_t seed, std::uint64_t thin) {
  require(thin >= 1, "thinning interval must be at least 1");
  Simulator sim(model, z0, Rng(seed));
  PathRecord path;
  path.thin = thin;
  auto record = [&] {
    path.steps.push_back({sim.steps(), sim.state(), sim.state().frequencies(), sim.tau()});
  };
  record();
  while (!sim.state().extinct() && !stop.satisfied(sim.steps(), sim.state(), sim.tau())) {
    sim.advance();
    if (sim.steps() % thin == 0) record();
  }
  if (path.steps.back().n != sim.steps()) record();
  return path;
}

std::size_t entry_at(const PathRecord& path, double t) {
  require(!path.steps.empty(), "empty path");
  require(t >= 0.0, "interpolation time must be nonnegative");
  require(t <= path.final_tau(), "interpolation time beyond the recorded horizon");
  auto it = std::upper_bound(path.steps.begin(), path.steps.end(), t,
                             [](double v, const PathEntry& e) { return v < e.tau; });
  return static_cast<std::size_t>(std::distance(path.steps.begin(), it)) - 1;
}

const Vec& interpolate(const PathRecord& path, double t) { return path.steps[entry_at(path, t)].x; }

}  // namespace urnflow

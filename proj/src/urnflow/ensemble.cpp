#include "urnflow/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "urnflow/error.hpp"
#include "urnflow/format.hpp"

namespace urnflow::ensemble {

namespace {

constexpr double kWilsonZ = 1.959963984540054;
constexpr std::uint64_t kSumGrid = 64;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ReplicateSummary run_replicate(const UrnModel& model, const EnsembleConfig& cfg, std::size_t r) {
  ReplicateSummary s;
  s.index = r;
  s.checkpoint_x.assign(cfg.distance_checkpoints.size(), Vec{});
  s.checkpoint_distance.assign(cfg.distance_checkpoints.size(), kNaN);
  s.final_distance = kNaN;
  Simulator sim(model, cfg.z0, Rng::for_stream(cfg.master_seed, r));
  std::vector<double> grid_sums{0.0};
  std::size_t next_cp = 0;
  auto visit_checkpoints = [&] {
    while (next_cp < cfg.distance_checkpoints.size() &&
           cfg.distance_checkpoints[next_cp] == sim.steps()) {
      if (!sim.state().extinct()) {
        auto x = sim.state().frequencies();
        if (cfg.attractor) s.checkpoint_distance[next_cp] = analysis::attractor_distance(x, *cfg.attractor);
        s.checkpoint_x[next_cp] = std::move(x);
      }
      ++next_cp;
    }
  };
  visit_checkpoints();
  while (true) {
    const auto size = sim.state().size();
    if (size == 0) {
      s.outcome = Outcome::extinct;
      break;
    }
    if (size >= cfg.survival_threshold) {
      s.outcome = Outcome::established;
      break;
    }
    if (sim.steps() >= cfg.max_steps) {
      s.outcome = Outcome::censored;
      break;
    }
    const double zs = static_cast<double>(size);
    s.sum_delta_half += 1.0 / (zs * std::sqrt(zs));
    s.sum_delta_one += 1.0 / (zs * zs);
    sim.advance();
    if (sim.steps() % kSumGrid == 0) grid_sums.push_back(s.sum_delta_half);
    visit_checkpoints();
  }
  s.steps = sim.steps();
  s.final_size = sim.state().size();
  s.final_tau = sim.tau();
  const auto mark = (s.steps * 9 / 10) / kSumGrid;
  s.tail_delta_half = s.sum_delta_half - grid_sums[std::min<std::size_t>(mark, grid_sums.size() - 1)];
  if (!sim.state().extinct()) {
    s.final_x = sim.state().frequencies();
    if (cfg.attractor) s.final_distance = analysis::attractor_distance(s.final_x, *cfg.attractor);
  }
  return s;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

CheckpointStats summarize(std::string label, std::vector<double> v) {
  CheckpointStats st;
  st.label = std::move(label);
  st.count = v.size();
  if (v.empty()) {
    st.min = st.q25 = st.median = st.q75 = st.max = kNaN;
    return st;
  }
  st.min = quantile(v, 0.0);
  st.q25 = quantile(v, 0.25);
  st.median = quantile(v, 0.5);
  st.q75 = quantile(v, 0.75);
  st.max = quantile(v, 1.0);
  return st;
}

}  // namespace

void EnsembleConfig::validate() const {
  require(replicates >= 1, "ensemble needs at least one replicate");
  require(survival_threshold > z0.size(), "survival threshold must exceed the initial population");
  require(max_steps >= 1, "ensemble horizon must be positive");
  require(jobs >= 1, "at least one worker is required");
  require(std::is_sorted(distance_checkpoints.begin(), distance_checkpoints.end()),
          "distance checkpoints must be ascending");
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::established: return "established";
    case Outcome::extinct: return "extinct";
    case Outcome::censored: return "censored";
    case Outcome::failed: return "failed";
  }
  return "unknown";
}

Proportion wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // The endpoints are exactly 0 and 1 at the extremes; the formula only gets
  // there up to cancellation error.
  const double lower = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double upper = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {p, lower, upper};
}

std::size_t EnsembleResult::count(Outcome o) const {
  return static_cast<std::size_t>(std::count_if(
      replicates.begin(), replicates.end(), [o](const ReplicateSummary& s) { return s.outcome == o; }));
}

EnsembleResult run_ensemble(const UrnModel& model, const EnsembleConfig& cfg) {
  cfg.validate();
  EnsembleResult result;
  result.checkpoints = cfg.distance_checkpoints;
  result.has_attractor = cfg.attractor.has_value();
  result.replicates.resize(cfg.replicates);

  // Replicate r always draws from stream r, and lands in slot r.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.replicates; r = next++) {
      try {
        result.replicates[r] = run_replicate(model, cfg, r);
      } catch (const std::exception& e) {
        ReplicateSummary failed;
        failed.index = r;
        failed.outcome = Outcome::failed;
        failed.error = e.what();
        failed.checkpoint_distance.assign(cfg.distance_checkpoints.size(), kNaN);
        failed.checkpoint_x.assign(cfg.distance_checkpoints.size(), Vec{});
        failed.final_distance = kNaN;
        result.replicates[r] = std::move(failed);
      }
    }
  };
  const unsigned jobs = static_cast<unsigned>(std::min<std::size_t>(cfg.jobs, cfg.replicates));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return result;
}

Proportion establishment_probability(const EnsembleResult& result) {
  return wilson_interval(result.count(Outcome::established), result.replicates.size());
}

ConvergenceTable convergence_statistics(const EnsembleResult& result,
                                        const analysis::AttractorSpec& attractor) {
  ConvergenceTable table;
  std::vector<const ReplicateSummary*> alive;
  for (const auto& s : result.replicates)
    if (s.outcome == Outcome::established) alive.push_back(&s);
  table.surviving = alive.size();
  if (alive.empty()) {
    table.empty = true;
    return table;
  }
  const std::size_t ncp = result.checkpoints.size();
  std::vector<std::vector<double>> per_cp(ncp + 1);
  std::size_t decreasing = 0;
  for (const auto* s : alive) {
    double first = kNaN, last = kNaN;
    for (std::size_t c = 0; c < ncp; ++c) {
      if (s->checkpoint_x[c].empty()) continue;
      double dist = analysis::attractor_distance(s->checkpoint_x[c], attractor);
      per_cp[c].push_back(dist);
      if (std::isnan(first)) first = dist;
      last = dist;
    }
    double fin = analysis::attractor_distance(s->final_x, attractor);
    per_cp[ncp].push_back(fin);
    if (std::isnan(first)) first = fin;
    last = fin;
    if (last < first) ++decreasing;
  }
  for (std::size_t c = 0; c < ncp; ++c)
    table.rows.push_back(summarize(std::to_string(result.checkpoints[c]), per_cp[c]));
  table.rows.push_back(summarize("final", per_cp[ncp]));
  table.decreasing_fraction = static_cast<double>(decreasing) / static_cast<double>(alive.size());
  return table;
}

std::string to_csv(const EnsembleResult& result) {
  std::ostringstream os;
  os << "replicate,outcome,steps,final_size,final_tau";
  for (auto cp : result.checkpoints) os << ",d_" << cp;
  os << ",d_final,sum_delta_0.5,sum_delta_1,tail_delta_0.5\n";
  for (const auto& s : result.replicates) {
    os << s.index << ',' << outcome_name(s.outcome) << ',' << s.steps << ',' << s.final_size << ','
       << format_double(s.final_tau);
    for (double d : s.checkpoint_distance) os << ',' << format_double(d);
    os << ',' << format_double(s.final_distance) << ',' << format_double(s.sum_delta_half) << ','
       << format_double(s.sum_delta_one) << ',' << format_double(s.tail_delta_half) << '\n';
  }
  const auto est = establishment_probability(result);
  os << "#agg,replicates," << result.replicates.size() << '\n';
  os << "#agg,established," << result.count(Outcome::established) << '\n';
  os << "#agg,extinct," << result.count(Outcome::extinct) << '\n';
  os << "#agg,censored," << result.count(Outcome::censored) << '\n';
  os << "#agg,failed," << result.count(Outcome::failed) << '\n';
  os << "#agg,establishment," << format_double(est.estimate) << ',' << format_double(est.lower)
     << ',' << format_double(est.upper) << '\n';
  return os.str();
}

}  // namespace urnflow::ensemble

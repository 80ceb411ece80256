#include "urnflow/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "urnflow/error.hpp"

namespace urnflow {

namespace {

constexpr double kClipTolerance = 1e-12;

double norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

Vec MeanLimitSystem::eval_drift(std::span<const double> x) const {
  Vec out(x.size());
  drift(x, out);
  return out;
}

MeanLimitSystem derive_system(const RuleSet& rules) {
  MeanLimitSystem sys;
  sys.k = rules.dimension();
  std::vector<int> alphas;
  for (const auto& w : rules.moves()) alphas.push_back(w.alpha());
  sys.drift = [rules, alphas](std::span<const double> x, std::span<double> out) {
    Vec p(rules.size());
    rules.limit_probabilities(x, p);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < p.size(); ++r) {
      if (p[r] == 0.0) continue;
      const auto& w = rules.move(r).w;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[r] * (w[i] - x[i] * alphas[r]);
    }
  };
  sys.growth = [rules, alphas](std::span<const double> x) {
    Vec p(rules.size());
    rules.limit_probabilities(x, p);
    double f = 0.0;
    for (std::size_t r = 0; r < p.size(); ++r) f += p[r] * alphas[r];
    return f;
  };
  return sys;
}

void project_to_simplex(Vec& x) {
  double sum = 0.0;
  for (auto& v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::runtime, "non-finite coordinate in flow");
    if (v < 0.0) {
      if (v < -kClipTolerance)
        throw Error(ErrorCode::runtime, "flow left the simplex (coordinate below -1e-12)");
      v = 0.0;
    }
    sum += v;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::runtime, "flow collapsed to the zero vector");
  for (auto& v : x) v /= sum;
}

SimplexIntegrator::SimplexIntegrator(const MeanLimitSystem& system)
    : sys_(system), k1_(system.k), k2_(system.k), k3_(system.k), k4_(system.k), tmp_(system.k) {}

void SimplexIntegrator::step(Vec& x, double dt) {
  const std::size_t k = x.size();
  sys_.drift(x, k1_);
  for (std::size_t i = 0; i < k; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
  sys_.drift(tmp_, k2_);
  for (std::size_t i = 0; i < k; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
  sys_.drift(tmp_, k3_);
  for (std::size_t i = 0; i < k; ++i) tmp_[i] = x[i] + dt * k3_[i];
  sys_.drift(tmp_, k4_);
  for (std::size_t i = 0; i < k; ++i)
    x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  project_to_simplex(x);
}

void SimplexIntegrator::advance(Vec& x, double duration, double h) {
  if (duration <= 0.0) return;
  auto n = static_cast<long>(std::ceil(duration / h - 1e-9));
  n = std::max(n, 1L);
  const double dt = duration / static_cast<double>(n);
  for (long i = 0; i < n; ++i) step(x, dt);
}

FlowSample flow(const MeanLimitSystem& system, const Vec& x0, double T, double h) {
  require(T > 0.0, "flow horizon must be positive");
  require(h > 0.0, "integration step must be positive");
  require(x0.size() == static_cast<std::size_t>(system.k), "initial point has wrong dimension");
  double sum = 0.0;
  for (double v : x0) {
    require(v >= -kClipTolerance, "initial point is not in the simplex");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "initial point is not in the simplex");

  auto n = static_cast<long>(std::llround(T / h));
  n = std::max(n, 1L);
  const double dt = T / static_cast<double>(n);
  FlowSample out;
  out.times.reserve(n + 1);
  out.points.reserve(n + 1);
  Vec x = x0;
  project_to_simplex(x);
  out.times.push_back(0.0);
  out.points.push_back(x);
  SimplexIntegrator rk(system);
  for (long i = 1; i <= n; ++i) {
    rk.step(x, dt);
    out.times.push_back(dt * static_cast<double>(i));
    out.points.push_back(x);
  }
  return out;
}

FlowSample flow(const MeanLimitSystem& system, const Vec& x0, double T) {
  return flow(system, x0, T, system.integrator.step);
}

Vec time_averages(const MeanLimitSystem& system, std::span<const ScalarMap> qs, const Vec& x0,
                  double T, double burn_in, double h) {
  require(burn_in >= 0.0 && T > burn_in, "time average needs T > burn_in >= 0");
  Vec start = x0;
  if (burn_in > 0.0) start = flow(system, x0, burn_in, h).final_point();
  // Stream the window instead of storing it.
  const double span_len = T - burn_in;
  auto n = std::max(static_cast<long>(std::llround(span_len / h)), 1L);
  const double dt = span_len / static_cast<double>(n);
  SimplexIntegrator rk(system);
  Vec x = start;
  project_to_simplex(x);
  Vec acc(qs.size(), 0.0);
  Vec prev(qs.size());
  for (std::size_t j = 0; j < qs.size(); ++j) prev[j] = qs[j](x);
  for (long i = 0; i < n; ++i) {
    rk.step(x, dt);
    for (std::size_t j = 0; j < qs.size(); ++j) {
      double cur = qs[j](x);
      acc[j] += 0.5 * dt * (prev[j] + cur);
      prev[j] = cur;
    }
  }
  for (auto& a : acc) a /= span_len;
  return acc;
}

double time_average(const MeanLimitSystem& system, const ScalarMap& q, const Vec& x0, double T,
                    double burn_in, double h) {
  ScalarMap qs[] = {q};
  return time_averages(system, qs, x0, T, burn_in, h)[0];
}

double time_average_growth(const MeanLimitSystem& system, const Vec& x0, double T,
                           double burn_in, double h) {
  return time_average(system, system.growth, x0, T, burn_in, h);
}

double time_average_growth(const MeanLimitSystem& system, const Vec& x0, double T,
                           double burn_in) {
  return time_average_growth(system, x0, T, burn_in, system.integrator.step);
}

double apt_error(const PathRecord& path, const MeanLimitSystem& system, double t, double window) {
  require(window > 0.0, "window must be positive");
  require(t >= 0.0, "window start must be nonnegative");
  require(t + window <= path.final_tau(), "path does not cover the requested window");
  const double h = system.integrator.step;

  std::size_t idx = entry_at(path, t);
  Vec node = path.steps[idx].x;
  project_to_simplex(node);
  SimplexIntegrator rk(system);

  double worst = 0.0;
  double node_time = t;  // the flow started at X(t) has been advanced to node_time
  const double end = t + window;
  std::size_t next = idx + 1;
  Vec probe;
  while (true) {
    double next_node = std::min(node_time + h, end);
    // update times strictly inside (node_time, next_node]
    while (next < path.steps.size() && path.steps[next].tau <= next_node) {
      const auto& e = path.steps[next];
      probe = node;
      if (e.tau > node_time) rk.step(probe, e.tau - node_time);
      worst = std::max(worst, norm(probe, e.x));
      ++next;
    }
    if (next_node > node_time) rk.step(node, next_node - node_time);
    node_time = next_node;
    worst = std::max(worst, norm(node, interpolate(path, node_time)));
    if (node_time >= end) break;
  }
  return worst;
}

double lemma1_residual(const UrnModel& model, const UrnState& z, const MeanLimitSystem& system) {
  require(!z.extinct(), "lemma1_residual needs a nonzero state");
  const auto probs = model.kernel_probabilities(z);
  const auto x = z.frequencies();
  const double size = static_cast<double>(z.size());
  Vec mean(x.size(), 0.0);
  UrnState next;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    if (probs[r] == 0.0) continue;
    next = z;
    const auto& w = model.rules().move(r).w;
    for (std::size_t i = 0; i < x.size(); ++i) next.counts[i] += w[i];
    auto xn = next.frequencies();
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += probs[r] * (xn[i] - x[i]);
  }
  auto g = system.eval_drift(x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = size * mean[i] - g[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace urnflow

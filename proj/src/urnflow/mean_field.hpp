#pragma once

// Mean-limit ODE dx/dt = g(x) on the simplex, its growth function f, and
// diagnostics that compare sampled paths against the flow.

#include <functional>
#include <span>
#include <vector>

#include "urnflow/urn.hpp"

namespace urnflow {

using DriftMap = std::function<void(std::span<const double> x, std::span<double> out)>;
using ScalarMap = std::function<double(std::span<const double> x)>;

struct IntegratorConfig {
  double step = 1e-2;
};

struct MeanLimitSystem {
  int k = 0;
  DriftMap drift;
  ScalarMap growth;
  IntegratorConfig integrator;

  Vec eval_drift(std::span<const double> x) const;
};

/// g(x) = sum_w p_w(x) (w - x alpha(w)) and f(x) = sum_w p_w(x) alpha(w),
/// by direct summation over the rules.
MeanLimitSystem derive_system(const RuleSet& rules);

struct FlowSample {
  std::vector<double> times;
  std::vector<Vec> points;

  const Vec& final_point() const { return points.back(); }
};

/// Classical fixed-step RK4 with post-step projection back onto the simplex.
class SimplexIntegrator {
 public:
  explicit SimplexIntegrator(const MeanLimitSystem& system);

  /// Advances x in place by dt (one RK4 step), then projects.
  void step(Vec& x, double dt);
  /// Advances by `duration` using ceil(duration/h) equal substeps.
  void advance(Vec& x, double duration, double h);

 private:
  const MeanLimitSystem& sys_;
  Vec k1_, k2_, k3_, k4_, tmp_;
};

/// Clips coordinates in [-1e-12, 0) to zero and renormalizes; throws on
/// larger negatives or non-finite values.
void project_to_simplex(Vec& x);

FlowSample flow(const MeanLimitSystem& system, const Vec& x0, double T, double h);
FlowSample flow(const MeanLimitSystem& system, const Vec& x0, double T);

/// Trapezoidal average of q over the flow nodes in [burn_in, T].
double time_average(const MeanLimitSystem& system, const ScalarMap& q, const Vec& x0, double T,
                    double burn_in, double h);

/// Trapezoidal averages of several quantities along one flow.
Vec time_averages(const MeanLimitSystem& system, std::span<const ScalarMap> qs, const Vec& x0,
                  double T, double burn_in, double h);

double time_average_growth(const MeanLimitSystem& system, const Vec& x0, double T,
                           double burn_in);
double time_average_growth(const MeanLimitSystem& system, const Vec& x0, double T,
                           double burn_in, double h);

/// sup over h in [0, window] of ||Phi_h(X(t)) - X(t+h)||, evaluated at the
/// update times inside the window and at the integrator nodes.
double apt_error(const PathRecord& path, const MeanLimitSystem& system, double t, double window);

/// || |z| E[x(n+1) - x(n) | z] - g(z/|z|) || with the expectation taken over
/// the exact kernel.
double lemma1_residual(const UrnModel& model, const UrnState& z, const MeanLimitSystem& system);

}  // namespace urnflow

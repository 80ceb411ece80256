#pragma once

// Equilibria, permanence and growth conditions, and periodic-orbit tools for
// the mean-limit ODEs.

#include <optional>
#include <span>
#include <vector>

#include "urnflow/mean_field.hpp"
#include "urnflow/models.hpp"

namespace urnflow::analysis {

using models::Matrix;

struct Equilibrium {
  Vec x;
  std::vector<int> support;  // indices with x_i > 1e-10
  double residual = 0.0;     // ||x o (Ax - x^T A x)||
};

struct EquilibriumSet {
  std::vector<Equilibrium> points;
  /// Supports whose linear system was singular or too ill-conditioned to solve
  /// (typically faces carrying a continuum of equilibria).
  std::vector<std::vector<int>> singular_supports;
};

/// Support enumeration over every proper nonempty face; k <= 10.
EquilibriumSet boundary_equilibria(const Matrix& A, double tol = 1e-10);

struct InteriorEquilibrium {
  std::optional<Vec> point;
  bool singular = false;
};

InteriorEquilibrium interior_equilibrium(const Matrix& A);

struct PermanenceReport {
  std::vector<double> values;  // one per boundary equilibrium considered
  double minimum = 0.0;
  bool holds = false;
  /// No boundary equilibrium was supplied; `holds` is then vacuously true.
  bool vacuous = false;
};

/// Weighted invasion rate sum_{i in face} p_i ((Ax)_i - x^T A x) at every
/// equilibrium on the boundary of the face (default: the whole simplex).
PermanenceReport check_permanence(const Matrix& A, const Vec& p, const EquilibriumSet& eqs,
                                  std::span<const int> face = {}, double tol = 0.0);

/// Searches positive integer weights in {1..grid}^k for a permanence witness
/// (k <= 5).
std::optional<Vec> search_permanence_weights(const Matrix& A, const EquilibriumSet& eqs,
                                             int grid = 4);

/// (b-d)/(b+d+nu) + x^T A x at the interior equilibrium.
double growth_condition_value(const models::ReplicatorParams& params);

struct GrowthRange {
  double inf = 0.0;
  double sup = 0.0;
};

GrowthRange check_uniform_growth(const MeanLimitSystem& system, std::span<const Vec> region);

struct AttractorSpec {
  enum class Kind { point, periodic_orbit, sampled_set };

  Kind kind = Kind::point;
  std::vector<Vec> points;
  double period = 0.0;
  double closure_gap = 0.0;

  static AttractorSpec point_at(Vec x);
  static AttractorSpec sampled(std::vector<Vec> xs);
};

inline constexpr int kOrbitSamples = 256;

/// Poincare-section period detection. Returns nothing when the crossings do
/// not settle (relative jitter over the last 5 returns above 1e-4), the
/// orbit does not close to within `tol`, or the motion has died out.
std::optional<AttractorSpec> detect_periodic_orbit(const MeanLimitSystem& system, const Vec& x0,
                                                   double t_max, double tol = 1e-6);

double orbit_average(const ScalarMap& q, const AttractorSpec& spec);
Vec orbit_average(const DriftMap& q, int dim, const AttractorSpec& spec);

double attractor_distance(std::span<const double> x, const AttractorSpec& spec);

}  // namespace urnflow::analysis

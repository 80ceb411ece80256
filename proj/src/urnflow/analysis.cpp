#include "urnflow/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "urnflow/error.hpp"

namespace urnflow::analysis {

namespace {

constexpr double kResidualTolerance = 1e-9;
constexpr double kConditionLimit = 1e12;
constexpr double kSupportTolerance = 1e-10;
constexpr double kInteriorFloor = 1e-12;
constexpr double kJitterLimit = 1e-4;
constexpr double kMinAmplitude = 1e-4;
constexpr int kReturnsRequired = 5;

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double field_residual(const Matrix& A, const Vec& x) {
  Vec g(x.size());
  models::replicator_field(A, x, g);
  return std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
}

// Solves (A_JJ x_J)_i = lambda for i in J, sum x_J = 1. Returns nothing for
// singular or ill-conditioned systems.
std::optional<Vec> solve_support(const Matrix& A, const std::vector<int>& J) {
  const int s = static_cast<int>(J.size());
  Matrix M = Matrix::Zero(s + 1, s + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) M(r, c) = A(J[r], J[c]);
    M(r, s) = -1.0;
  }
  for (int c = 0; c < s; ++c) M(s, c) = 1.0;
  rhs[s] = 1.0;
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  if (!(smin > 0.0) || smax / smin > kConditionLimit) return std::nullopt;
  Eigen::VectorXd sol = svd.solve(rhs);
  Vec x(A.rows(), 0.0);
  for (int c = 0; c < s; ++c) x[J[c]] = sol[c];
  return x;
}

std::vector<int> support_of(const Vec& x) {
  std::vector<int> s;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > kSupportTolerance) s.push_back(static_cast<int>(i));
  return s;
}

double section_value(std::span<const double> y, const Vec& c, const Vec& n) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - c[i]) * n[i];
  return s;
}

void check_interior(const Vec& y) {
  for (double v : y)
    if (v < kInteriorFloor)
      throw Error(ErrorCode::runtime, "trajectory left the interior of the simplex");
}

struct Crossing {
  double time;
  Vec point;
};

// Integrates `duration` from (t, x), recording upward crossings of the
// section; crossing times are refined by bisection on the substep length.
class SectionTracker {
 public:
  SectionTracker(const MeanLimitSystem& sys, Vec c, Vec n) : sys_(sys), c_(std::move(c)), n_(std::move(n)) {}

  std::vector<Crossing> run(double& t, Vec& x, double duration, double h, Vec* mean_out) {
    SimplexIntegrator rk(sys_);
    std::vector<Crossing> out;
    auto steps = std::max(1L, static_cast<long>(std::llround(duration / h)));
    const double dt = duration / static_cast<double>(steps);
    Vec mean(x.size(), 0.0);
    double prev_s = section_value(x, c_, n_);
    Vec prev = x;
    for (long i = 0; i < steps; ++i) {
      rk.step(x, dt);
      check_interior(x);
      for (std::size_t j = 0; j < x.size(); ++j) mean[j] += x[j];
      double s = section_value(x, c_, n_);
      if (prev_s < 0.0 && s >= 0.0) out.push_back(refine(prev, t, dt));
      prev_s = s;
      prev = x;
      t += dt;
    }
    if (mean_out) {
      for (auto& v : mean) v /= static_cast<double>(steps);
      *mean_out = mean;
    }
    return out;
  }

  Crossing refine(const Vec& start, double t0, double dt) const {
    SimplexIntegrator rk(sys_);
    double lo = 0.0, hi = dt;
    Vec y;
    for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
      double mid = 0.5 * (lo + hi);
      y = start;
      rk.step(y, mid);
      if (section_value(y, c_, n_) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    y = start;
    if (hi > 0.0) rk.step(y, hi);
    return {t0 + hi, y};
  }

 private:
  const MeanLimitSystem& sys_;
  Vec c_, n_;
};

Vec unit_drift(const MeanLimitSystem& sys, const Vec& p) {
  Vec n = sys.eval_drift(p);
  double len = std::sqrt(std::inner_product(n.begin(), n.end(), n.begin(), 0.0));
  if (!(len > 1e-12)) return {};
  for (auto& v : n) v /= len;
  return n;
}

}  // namespace

EquilibriumSet boundary_equilibria(const Matrix& A, double tol) {
  const int k = static_cast<int>(A.rows());
  require(A.rows() == A.cols(), "payoff matrix must be square");
  require(k >= 1 && k <= 10, "support enumeration is limited to k <= 10");
  EquilibriumSet out;
  const unsigned full = (1u << k) - 1u;
  // Enumerate supports by increasing size so duplicates keep the smallest support.
  std::vector<unsigned> masks;
  for (unsigned mask = 1; mask < full; ++mask) masks.push_back(mask);
  std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    return std::popcount(a) < std::popcount(b);
  });
  for (unsigned mask : masks) {
    std::vector<int> J;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) J.push_back(i);
    auto sol = solve_support(A, J);
    if (!sol) {
      out.singular_supports.push_back(J);
      continue;
    }
    Vec x = *sol;
    bool feasible = true;
    for (double& v : x) {
      if (v < -tol) feasible = false;
      if (v < 0.0) v = 0.0;
    }
    if (!feasible) continue;
    double sum = std::accumulate(x.begin(), x.end(), 0.0);
    for (double& v : x) v /= sum;
    double res = field_residual(A, x);
    if (res > kResidualTolerance) continue;
    bool duplicate = std::any_of(out.points.begin(), out.points.end(),
                                 [&](const Equilibrium& e) { return distance(e.x, x) <= 1e-9; });
    if (duplicate) continue;
    out.points.push_back({x, support_of(x), res});
  }
  return out;
}

InteriorEquilibrium interior_equilibrium(const Matrix& A) {
  const int k = static_cast<int>(A.rows());
  require(A.rows() == A.cols() && k >= 1, "payoff matrix must be square");
  std::vector<int> J(k);
  std::iota(J.begin(), J.end(), 0);
  auto sol = solve_support(A, J);
  InteriorEquilibrium out;
  if (!sol) {
    out.singular = true;
    return out;
  }
  if (*std::min_element(sol->begin(), sol->end()) > 1e-9) out.point = *sol;
  return out;
}

PermanenceReport check_permanence(const Matrix& A, const Vec& p, const EquilibriumSet& eqs,
                                  std::span<const int> face, double tol) {
  const int k = static_cast<int>(A.rows());
  require(static_cast<int>(p.size()) == k, "weight vector has wrong dimension");
  for (double v : p) require(v > 0.0, "permanence weights must be strictly positive");
  std::vector<int> F(face.begin(), face.end());
  if (F.empty()) {
    F.resize(k);
    std::iota(F.begin(), F.end(), 0);
  }
  std::vector<bool> in_face(k, false);
  for (int i : F) in_face.at(i) = true;

  PermanenceReport report;
  report.minimum = std::numeric_limits<double>::infinity();
  for (const auto& e : eqs.points) {
    // only equilibria on the relative boundary of the face
    bool inside = std::all_of(e.support.begin(), e.support.end(), [&](int i) { return in_face[i]; });
    if (!inside || e.support.size() >= F.size()) continue;
    Eigen::Map<const Eigen::VectorXd> xv(e.x.data(), k);
    Eigen::VectorXd Ax = A * xv;
    const double avg = xv.dot(Ax);
    double value = 0.0;
    for (int i : F) value += p[i] * (Ax[i] - avg);
    report.values.push_back(value);
    report.minimum = std::min(report.minimum, value);
  }
  if (report.values.empty()) {
    report.vacuous = true;
    report.holds = true;
    report.minimum = 0.0;
    return report;
  }
  report.holds = report.minimum > tol;
  return report;
}

std::optional<Vec> search_permanence_weights(const Matrix& A, const EquilibriumSet& eqs, int grid) {
  const int k = static_cast<int>(A.rows());
  require(k <= 5, "weight search is limited to k <= 5");
  require(grid >= 1, "grid must be positive");
  std::vector<int> idx(k, 1);
  while (true) {
    Vec p(idx.begin(), idx.end());
    auto rep = check_permanence(A, p, eqs);
    if (rep.holds && !rep.vacuous) return p;
    int pos = 0;
    while (pos < k && idx[pos] == grid) idx[pos++] = 1;
    if (pos == k) return std::nullopt;
    ++idx[pos];
  }
}

double growth_condition_value(const models::ReplicatorParams& params) {
  params.validate();
  const Matrix A = params.payoff();
  const double base = (params.b - params.d) / (params.b + params.d + params.nu);
  if (A.isZero(0.0)) return base;  // every point is an equilibrium and x^T A x = 0
  auto eq = interior_equilibrium(A);
  require(eq.point.has_value(), "no interior equilibrium for this payoff matrix");
  return base + models::quadratic_form(A, *eq.point);
}

GrowthRange check_uniform_growth(const MeanLimitSystem& system, std::span<const Vec> region) {
  require(!region.empty(), "region must be nonempty");
  GrowthRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& x : region) {
    double f = system.growth(x);
    r.inf = std::min(r.inf, f);
    r.sup = std::max(r.sup, f);
  }
  return r;
}

AttractorSpec AttractorSpec::point_at(Vec x) {
  AttractorSpec s;
  s.kind = Kind::point;
  s.points.push_back(std::move(x));
  return s;
}

AttractorSpec AttractorSpec::sampled(std::vector<Vec> xs) {
  require(!xs.empty(), "sampled attractor needs points");
  AttractorSpec s;
  s.kind = Kind::sampled_set;
  s.points = std::move(xs);
  return s;
}

std::optional<AttractorSpec> detect_periodic_orbit(const MeanLimitSystem& system, const Vec& x0,
                                                   double t_max, double tol) {
  require(t_max > 0.0, "t_max must be positive");
  for (double v : x0) require(v > 0.0, "detection needs an interior starting point");
  const double h = system.integrator.step;
  const double half = 0.5 * t_max;

  // Transient; the section is seated at the mean over its second half.
  SimplexIntegrator rk(system);
  Vec x = x0;
  project_to_simplex(x);
  rk.advance(x, 0.5 * half, h);
  check_interior(x);
  double t = 0.5 * half;
  Vec center(x.size(), 0.0);
  {
    auto steps = std::max(1L, static_cast<long>(std::llround(0.5 * half / h)));
    const double dt = 0.5 * half / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) {
      rk.step(x, dt);
      for (std::size_t j = 0; j < x.size(); ++j) center[j] += x[j] / static_cast<double>(steps);
    }
    check_interior(x);
    t += 0.5 * half;
  }

  std::vector<Crossing> crossings;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Vec normal = unit_drift(system, x);
    if (normal.empty()) return std::nullopt;  // resting at an equilibrium
    SectionTracker tracker(system, center, normal);
    Vec tail_mean;
    crossings = tracker.run(t, x, half, h, &tail_mean);
    if (crossings.size() >= 3) break;
    center = tail_mean;  // re-seat once
  }
  if (crossings.size() < kReturnsRequired + 1) return std::nullopt;

  std::vector<double> periods;
  for (std::size_t i = crossings.size() - kReturnsRequired; i < crossings.size(); ++i)
    periods.push_back(crossings[i].time - crossings[i - 1].time);
  const auto [pmin, pmax] = std::minmax_element(periods.begin(), periods.end());
  const double pmean = std::accumulate(periods.begin(), periods.end(), 0.0) / periods.size();
  if ((*pmax - *pmin) / pmean > kJitterLimit) return std::nullopt;

  // Iterate the return map from the last crossing until it settles.
  Vec normal = unit_drift(system, crossings.back().point);
  Vec start = crossings.back().point;
  double period = periods.back();
  {
    // Section through the crossing point keeps it an exact fixed point candidate.
    SectionTracker tracker(system, start, normal);
    for (int it = 0; it < 50; ++it) {
      double tt = 0.0;
      Vec y = start;
      auto found = tracker.run(tt, y, 1.5 * period, h, nullptr);
      // a roundoff crossing right at the start is not a return
      std::erase_if(found, [&](const Crossing& c) { return c.time < 0.5 * period; });
      if (found.empty()) return std::nullopt;
      const auto& ret = found.front();
      const double moved = distance(ret.point, start);
      period = ret.time;
      start = ret.point;
      if (moved <= 0.1 * tol) break;
    }
  }

  // Sample one period at equally spaced times.
  AttractorSpec spec;
  spec.kind = AttractorSpec::Kind::periodic_orbit;
  spec.period = period;
  const int sub = std::max(1, static_cast<int>(std::ceil(period / kOrbitSamples / h)));
  const double dt = period / (static_cast<double>(kOrbitSamples) * sub);
  Vec y = start;
  spec.points.reserve(kOrbitSamples);
  for (int s = 0; s < kOrbitSamples; ++s) {
    spec.points.push_back(y);
    for (int j = 0; j < sub; ++j) rk.step(y, dt);
  }
  spec.closure_gap = distance(y, start);
  if (spec.closure_gap > tol) return std::nullopt;

  Vec mean(y.size(), 0.0);
  for (const auto& p : spec.points)
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i] / kOrbitSamples;
  double amplitude = 0.0;
  for (const auto& p : spec.points) amplitude = std::max(amplitude, distance(p, mean));
  if (amplitude < kMinAmplitude) return std::nullopt;
  return spec;
}

double orbit_average(const ScalarMap& q, const AttractorSpec& spec) {
  switch (spec.kind) {
    case AttractorSpec::Kind::point: return q(spec.points.front());
    case AttractorSpec::Kind::periodic_orbit: {
      // Trapezoid on a uniform periodic grid reduces to the sample mean.
      double s = 0.0;
      for (const auto& p : spec.points) s += q(p);
      return s / static_cast<double>(spec.points.size());
    }
    case AttractorSpec::Kind::sampled_set: break;
  }
  throw Error(ErrorCode::invalid_argument, "orbit average needs a point or a periodic orbit");
}

Vec orbit_average(const DriftMap& q, int dim, const AttractorSpec& spec) {
  Vec acc(dim, 0.0), buf(dim);
  switch (spec.kind) {
    case AttractorSpec::Kind::point:
      q(spec.points.front(), acc);
      return acc;
    case AttractorSpec::Kind::periodic_orbit:
      for (const auto& p : spec.points) {
        q(p, buf);
        for (int i = 0; i < dim; ++i) acc[i] += buf[i];
      }
      for (auto& v : acc) v /= static_cast<double>(spec.points.size());
      return acc;
    case AttractorSpec::Kind::sampled_set: break;
  }
  throw Error(ErrorCode::invalid_argument, "orbit average needs a point or a periodic orbit");
}

double attractor_distance(std::span<const double> x, const AttractorSpec& spec) {
  require(!spec.points.empty(), "attractor has no points");
  double best = std::numeric_limits<double>::infinity();
  if (spec.kind != AttractorSpec::Kind::periodic_orbit) {
    for (const auto& p : spec.points) best = std::min(best, distance(x, p));
    return best;
  }
  // Closed polyline through the orbit samples.
  const std::size_t n = spec.points.size();
  for (std::size_t s = 0; s < n; ++s) {
    const auto& a = spec.points[s];
    const auto& b = spec.points[(s + 1) % n];
    double ab2 = 0.0, t = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab2 += (b[i] - a[i]) * (b[i] - a[i]);
      t += (x[i] - a[i]) * (b[i] - a[i]);
    }
    t = ab2 > 0.0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double c = a[i] + t * (b[i] - a[i]) - x[i];
      d2 += c * c;
    }
    best = std::min(best, std::sqrt(d2));
  }
  return best;
}

}  // namespace urnflow::analysis

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "urnflow/analysis.hpp"
#include "urnflow/models.hpp"

using namespace urnflow;
using analysis::Matrix;

namespace {

Matrix rps() { return Matrix{{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}}; }

std::vector<Vec> sorted_points(const analysis::EquilibriumSet& s) {
  std::vector<Vec> pts;
  for (const auto& e : s.points) pts.push_back(e.x);
  std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace

TEST_CASE("interior equilibria") {
  for (int k : {2, 3, 5, 7}) {
    auto A = models::hypercycle(k, 1.0, 2.5, 4.0).payoff();
    auto eq = analysis::interior_equilibrium(A);
    REQUIRE(eq.point);
    for (double v : *eq.point) CHECK(v == doctest::Approx(1.0 / k));
  }
  auto r = analysis::interior_equilibrium(rps());
  REQUIRE(r.point);
  for (double v : *r.point) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK(analysis::interior_equilibrium(Matrix::Zero(3, 3)).singular);
}

TEST_CASE("boundary equilibria: vertices of the hypercycle") {
  auto A = models::hypercycle(5, 1.0, 2.5, 4.0).payoff();
  auto eqs = analysis::boundary_equilibria(A);
  CHECK(eqs.points.size() == 5);
  for (const auto& e : eqs.points) {
    CHECK(e.support.size() == 1);
    CHECK(e.residual <= 1e-9);
  }
}

TEST_CASE("boundary equilibria are permutation invariant") {
  Matrix A{{0.0, 2.0, 0.5}, {1.0, 0.0, 3.0}, {2.5, 0.2, 0.0}};
  Eigen::PermutationMatrix<Eigen::Dynamic> P(3);
  P.indices() << 2, 0, 1;
  Matrix B = P * A * P.transpose();
  auto ea = analysis::boundary_equilibria(A);
  auto eb = analysis::boundary_equilibria(B);
  REQUIRE(ea.points.size() == eb.points.size());
  std::vector<Vec> mapped;
  for (const auto& e : eb.points) {
    Vec back(3);  // (P x)[indices[i]] = x[i]
    for (int i = 0; i < 3; ++i) back[i] = e.x[P.indices()[i]];
    mapped.push_back(back);
  }
  std::sort(mapped.begin(), mapped.end());
  auto pa = sorted_points(ea);
  for (std::size_t n = 0; n < pa.size(); ++n)
    for (int i = 0; i < 3; ++i) CHECK(mapped[n][i] == doctest::Approx(pa[n][i]));
}

TEST_CASE("permanence of the hypercycle and homogeneity in p") {
  auto A = models::hypercycle(5, 1.0, 2.5, 4.0).payoff();
  auto eqs = analysis::boundary_equilibria(A);
  auto r1 = analysis::check_permanence(A, Vec(5, 1.0), eqs);
  CHECK(r1.holds);
  CHECK(r1.minimum == doctest::Approx(16.0 / 15.0));
  auto r3 = analysis::check_permanence(A, Vec(5, 3.0), eqs);
  CHECK(r3.minimum == doctest::Approx(3.0 * r1.minimum));
}

TEST_CASE("a dominant strategy defeats permanence") {
  Matrix A{{3.0, 3.0, 3.0}, {1.0, 1.0, 1.0}, {0.0, 2.0, 0.5}};
  auto eqs = analysis::boundary_equilibria(A);
  auto r = analysis::check_permanence(A, Vec(3, 1.0), eqs);
  CHECK_FALSE(r.holds);
  CHECK(r.minimum <= 0.0);
  CHECK_FALSE(analysis::search_permanence_weights(A, eqs));
}

TEST_CASE("no equilibria: vacuous permanence") {
  auto r = analysis::check_permanence(rps(), Vec(3, 1.0), analysis::EquilibriumSet{});
  CHECK(r.holds);
  CHECK(r.vacuous);
}

TEST_CASE("growth condition values") {
  CHECK(analysis::growth_condition_value(models::hypercycle(5, 1.0, 2.5, 4.0)) ==
        doctest::Approx(1.0 / 75.0).epsilon(1e-12));
  CHECK(analysis::growth_condition_value(models::hypercycle(5, 1.0, 4.0, 4.0)) ==
        doctest::Approx(-7.0 / 45.0).epsilon(1e-12));
  CHECK(analysis::growth_condition_value(models::hypercycle(5, 1.0, 1.0, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("uniform growth range") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  std::vector<Vec> region{Vec(5, 0.2)};
  auto g = analysis::check_uniform_growth(rep.closed_form, region);
  CHECK(g.inf == doctest::Approx(1.0 / 75.0));
  CHECK(g.sup == doctest::Approx(1.0 / 75.0));
  MeanLimitSystem flat;
  flat.k = 2;
  flat.growth = [](std::span<const double>) { return 0.25; };
  std::vector<Vec> pts{Vec{0.1, 0.9}, Vec{0.6, 0.4}};
  auto c = analysis::check_uniform_growth(flat, pts);
  CHECK(c.inf == 0.25);
  CHECK(c.sup == 0.25);
}

TEST_CASE("periodic orbits") {
  auto sm = models::build_selection_mutation(models::cyclic_mutation_example(1.0, 2.835, 0.5, 0.1, 1.0, 0.5));
  auto sys = derive_system(sm.model.rules());
  auto orbit = analysis::detect_periodic_orbit(sys, Vec{0.5, 0.3, 0.2}, 2000.0);
  REQUIRE(orbit);
  CHECK(orbit->period > 0.0);
  CHECK(orbit->points.size() == analysis::kOrbitSamples);
  auto again = analysis::detect_periodic_orbit(sys, orbit->points[100], 2000.0);
  REQUIRE(again);
  CHECK(again->period == doctest::Approx(orbit->period).epsilon(1e-6));
  CHECK(analysis::attractor_distance(orbit->points[17], *orbit) == 0.0);

  auto k3 = models::build_replicator(models::hypercycle(3, 1.0, 2.5, 4.0));
  CHECK_FALSE(analysis::detect_periodic_orbit(k3.closed_form, Vec{0.6, 0.3, 0.1}, 2000.0));

  auto flat = models::build_selection_mutation(models::cyclic_mutation_example(1.0, 0.0, 0.1, 0.05, 1.0, 0.5));
  CHECK_FALSE(analysis::detect_periodic_orbit(derive_system(flat.model.rules()), Vec{0.5, 0.3, 0.2}, 2000.0));
}

TEST_CASE("orbit averages on the k=5 hypercycle") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  auto orbit = analysis::detect_periodic_orbit(rep.closed_form, Vec{0.3, 0.2, 0.2, 0.15, 0.15}, 2000.0);
  REQUIRE(orbit);
  const Matrix A = rep.A;
  ScalarMap quad = [A](std::span<const double> x) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) s += x[i] * A(i, j) * x[j];
    return s;
  };
  CHECK(std::abs(analysis::orbit_average(quad, *orbit) - 16.0 / 75.0) < 1e-3);
  for (int i = 0; i < 5; ++i) {
    ScalarMap xi = [i](std::span<const double> x) { return x[i]; };
    CHECK(std::abs(analysis::orbit_average(xi, *orbit) - 0.2) < 1e-3);
  }
  CHECK(analysis::orbit_average([](std::span<const double>) { return 1.0; }, *orbit) == doctest::Approx(1.0));
}

TEST_CASE("attractor distance to a point") {
  auto spec = analysis::AttractorSpec::point_at(Vec(5, 0.2));
  CHECK(analysis::attractor_distance(Vec{1, 0, 0, 0, 0}, spec) == doctest::Approx(std::sqrt(0.8)));
  CHECK(analysis::attractor_distance(Vec(5, 0.2), spec) == 0.0);
}

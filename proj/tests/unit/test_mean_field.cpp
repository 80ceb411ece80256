#include <doctest.h>

#include <cmath>

#include "urnflow/mean_field.hpp"
#include "urnflow/models.hpp"

using namespace urnflow;

namespace {

double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

MeanLimitSystem hypercycle_system(int k, double d) {
  auto rep = models::build_replicator(models::hypercycle(k, 1.0, d, 4.0));
  return derive_system(rep.model.rules());
}

}  // namespace

TEST_CASE("derived drift is tangent to the simplex") {
  auto sys = hypercycle_system(5, 2.5);
  Vec x{0.1, 0.3, 0.2, 0.25, 0.15};
  auto g = sys.eval_drift(x);
  double s = 0.0;
  for (double v : g) s += v;
  CHECK(std::abs(s) < 1e-14);
}

TEST_CASE("hypercycle k=3 converges to the barycentre") {
  auto sys = hypercycle_system(3, 2.5);
  auto fs = flow(sys, Vec{0.7, 0.2, 0.1}, 500.0);
  CHECK(dist(fs.final_point(), Vec(3, 1.0 / 3.0)) < 1e-6);
}

TEST_CASE("a vertex stays put") {
  auto sys = hypercycle_system(5, 2.5);
  auto fs = flow(sys, Vec{1, 0, 0, 0, 0}, 50.0);
  for (const auto& p : fs.points) CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("RK4 is fourth order") {
  auto sys = hypercycle_system(3, 2.5);
  Vec x0{0.7, 0.2, 0.1};
  auto ref = flow(sys, x0, 10.0, 0.00125).final_point();
  const double e1 = dist(flow(sys, x0, 10.0, 0.02).final_point(), ref);
  const double e2 = dist(flow(sys, x0, 10.0, 0.01).final_point(), ref);
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("projection clips tiny negatives and rejects large ones") {
  Vec x{-1e-13, 0.5, 0.5};
  project_to_simplex(x);
  CHECK(x[0] == 0.0);
  CHECK(x[1] + x[2] == doctest::Approx(1.0));
  Vec bad{-0.1, 0.6, 0.5};
  CHECK_THROWS(project_to_simplex(bad));
}

TEST_CASE("time averages: constant and quadrature refinement") {
  auto sys = hypercycle_system(5, 2.5);
  ScalarMap one = [](std::span<const double>) { return 3.5; };
  CHECK(time_average(sys, one, Vec{0.3, 0.2, 0.2, 0.15, 0.15}, 100.0, 10.0, 0.01) == doctest::Approx(3.5));

  Vec x0{0.3, 0.2, 0.2, 0.15, 0.15};
  const double a = time_average_growth(sys, x0, 1500.0, 500.0, 0.01);
  const double b = time_average_growth(sys, x0, 1500.0, 500.0, 0.005);
  CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("average growth on the d=4 hypercycle") {
  auto sys = hypercycle_system(5, 4.0);
  const double avg = time_average_growth(sys, Vec{0.3, 0.2, 0.2, 0.15, 0.15}, 3000.0, 1000.0);
  CHECK(std::abs(avg - (-7.0 / 45.0)) < 1e-3);
}

TEST_CASE("apt error vanishes on a path parked at an equilibrium") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  auto sys = derive_system(rep.model.rules());
  PathRecord path;
  const UrnState z{{100, 100, 100, 100, 100}};
  for (int n = 0; n < 20; ++n) path.steps.push_back(PathEntry{static_cast<std::uint64_t>(n), z, z.frequencies(), 0.5 * n});
  CHECK(apt_error(path, sys, 1.0, 5.0) < 1e-9);
}

TEST_CASE("apt error detects a drift mismatch") {
  // The chain follows the k=3 hypercycle; the reference flow is pushed along
  // (1,-1,0) by 0.1.
  auto rep = models::build_replicator(models::hypercycle(3, 1.0, 0.5, 4.0));
  auto sys = derive_system(rep.model.rules());
  MeanLimitSystem skewed = sys;
  skewed.drift = [g = sys.drift](std::span<const double> x, std::span<double> out) {
    g(x, out);
    // Fade out at the boundary so the flow stays on the simplex.
    const double s = 0.1 * std::min(1.0, 10.0 * std::min(x[0], x[1]));
    out[0] += s;
    out[1] -= s;
  };
  auto path = simulate(rep.model, UrnState{{3000, 3000, 4000}},
                       StopCondition::max_tau(12.0), 9, 1);
  for (double t : {1.0, 4.0}) CHECK(apt_error(path, skewed, t, 5.0) > 0.02);
}

TEST_CASE("lemma1 residual: type switches with an exact kernel") {
  RuleSet rules(2, {MoveVector{{1, -1}}, MoveVector{{-1, 1}}},
                [](std::span<const double> x, std::span<double> out) {
                  out[0] = x[1];
                  out[1] = x[0];
                });
  auto model = UrnModel::from_limit("switch", 2, rules);
  auto sys = derive_system(model.rules());
  for (std::int64_t n : {100, 1000, 10000}) {
    UrnState z{{n / 4, n - n / 4}};
    CHECK(lemma1_residual(model, z, sys) < 10.0 / static_cast<double>(n));
  }
}

TEST_CASE("lemma1 residual at |z| = 1 is finite") {
  auto rep = models::build_replicator(models::hypercycle(3, 1.0, 2.5, 4.0));
  auto sys = derive_system(rep.model.rules());
  CHECK(std::isfinite(lemma1_residual(rep.model, UrnState{{1, 0, 0}}, sys)));
}

TEST_CASE("lemma1 residual times |z| stays bounded across sizes") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  auto sys = derive_system(rep.model.rules());
  for (std::int64_t n : {100, 1000, 10000}) {
    UrnState z{std::vector<std::int64_t>(5, n / 5)};
    CHECK(lemma1_residual(rep.model, z, sys) * static_cast<double>(n) < 1.0);
  }
  // Away from the barycentre the scaled residual settles to a nonzero limit.
  const Vec shape{0.1, 0.3, 0.2, 0.25, 0.15};
  std::vector<double> scaled;
  for (std::int64_t n : {100, 1000, 10000}) {
    std::vector<std::int64_t> c(5);
    for (int i = 0; i < 5; ++i) c[i] = static_cast<std::int64_t>(std::llround(shape[i] * static_cast<double>(n)));
    scaled.push_back(lemma1_residual(rep.model, UrnState{c}, sys) * static_cast<double>(n));
  }
  CHECK(scaled.back() > 0.0);
  CHECK(std::abs(scaled[2] - scaled[1]) < 0.02 * scaled[2]);
}

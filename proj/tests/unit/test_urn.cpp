#include <doctest.h>

#include <cmath>

#include "urnflow/error.hpp"
#include "urnflow/models.hpp"
#include "urnflow/urn.hpp"

using namespace urnflow;

TEST_CASE("alpha is the net size change") {
  CHECK(alpha(MoveVector{{1, -1, 0}}) == 0);
  CHECK(alpha(MoveVector{{2, 0, 0}}) == 2);
  CHECK(alpha(MoveVector{{-1, -1, 0}}) == -2);
  CHECK(MoveVector{{-1, 2, 0}}.magnitude() == 3);
  CHECK(MoveVector{{0, 0}}.is_zero());
}

TEST_CASE("frequencies of the extinct state are all zero") {
  UrnState z{{0, 0, 0}};
  CHECK(z.extinct());
  for (double v : z.frequencies()) CHECK(v == 0.0);
  UrnState w{{1, 3}};
  CHECK(w.frequencies()[1] == doctest::Approx(0.75));
}

TEST_CASE("step: zero is absorbing and pure death empties a singleton") {
  auto death = models::pure_death(3);
  Rng rng(3);
  CHECK(step(death, UrnState{{0, 0, 0}}, rng) == UrnState{{0, 0, 0}});
  CHECK(step(death, UrnState{{1, 0, 0}}, rng) == UrnState{{0, 0, 0}});
}

TEST_CASE("step stays inside the kernel's support") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  UrnState z{{5, 5, 5, 5, 5}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto next = step(rep.model, z, rng);
    std::int64_t dist = 0;
    for (std::size_t i = 0; i < 5; ++i) dist += std::llabs(next.counts[i] - z.counts[i]);
    CHECK(dist <= 2);
  }
}

TEST_CASE("pure death from (3,0): tau increments 1/3, 1/2, 1") {
  auto death = models::pure_death(2);
  auto path = simulate(death, UrnState{{3, 0}}, StopCondition::extinction(), 11);
  REQUIRE(path.size() == 4);
  CHECK(path.steps[1].tau == doctest::Approx(1.0 / 3.0));
  CHECK(path.steps[2].tau == doctest::Approx(1.0 / 3.0 + 1.0 / 2.0));
  CHECK(path.steps[3].tau == doctest::Approx(1.0 / 3.0 + 1.0 / 2.0 + 1.0));
  CHECK(path.back().z.extinct());

  CHECK(interpolate(path, 0.0) == path.steps[0].x);
  CHECK(interpolate(path, 0.5) == path.steps[1].x);
  CHECK(interpolate(path, path.steps[2].tau) == path.steps[2].x);
}

TEST_CASE("simulating from zero gives a single null entry") {
  auto rep = models::build_replicator(models::hypercycle(3, 1.0, 2.5, 4.0));
  auto path = simulate(rep.model, UrnState{{0, 0, 0}}, StopCondition::max_steps(100), 1);
  REQUIRE(path.size() == 1);
  for (double v : path.front().x) CHECK(v == 0.0);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  UrnState z0{{20, 20, 20, 20, 20}};
  auto stop = StopCondition::max_steps(100000);
  auto a = simulate(rep.model, z0, stop, 42, 1000);
  auto b = simulate(rep.model, z0, stop, 42, 1000);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.steps[i].z == b.steps[i].z);
    CHECK(a.steps[i].tau == b.steps[i].tau);
  }
}

TEST_CASE("thinning keeps the first and last updates") {
  auto rep = models::build_replicator(models::hypercycle(3, 1.0, 0.5, 4.0));
  auto path = simulate(rep.model, UrnState{{200, 200, 200}}, StopCondition::max_steps(1050), 5, 100);
  CHECK(path.front().n == 0);
  CHECK(path.back().n == 1050);
  CHECK(path.size() == 12);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path.steps[i].tau > path.steps[i - 1].tau);
}

TEST_CASE("conditional mean increment") {
  auto death = models::pure_death(3);
  auto inc = conditional_mean_increment(death, UrnState{{4, 0, 0}});
  CHECK(inc[0] == doctest::Approx(-1.0));
  CHECK(inc[1] == 0.0);

  auto sym = UrnModel::from_limit(
      "symmetric", 1,
      RuleSet(1, {MoveVector{{1}}, MoveVector{{-1}}},
              [](std::span<const double>, std::span<double> out) { out[0] = out[1] = 0.5; }));
  CHECK(conditional_mean_increment(sym, UrnState{{7}})[0] == doctest::Approx(0.0));
}

TEST_CASE("validate_model: replicator kernel normalizes; A1 breach is flagged") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  std::vector<UrnState> states{UrnState{{2, 2, 2, 2, 2}}, UrnState{{20, 20, 20, 20, 20}},
                               UrnState{{200, 100, 300, 250, 150}}};
  auto report = validate_model(rep.model, states);
  CHECK(report.ok());
  CHECK(report.max_normalization_error < 1e-12);
  CHECK(report.empirical_a <= rep.model.a_bound() + 1e-12);

  RuleSet big(1, {MoveVector{{3}}, MoveVector{{0}}},
              [](std::span<const double>, std::span<double> out) { out[0] = out[1] = 0.5; });
  auto bad = UrnModel::from_limit("too-big", 2, big);
  CHECK_FALSE(validate_model(bad, std::vector<UrnState>{UrnState{{5}}}).ok());
}

TEST_CASE("replicator A2 discrepancy is the same-type correction") {
  auto params = models::hypercycle(3, 1.0, 2.5, 4.0);
  params.B(0, 0) = 0.5;
  params.D(0, 0) = 0.0;
  params.B(0, 2) = 0.0;  // keep rows of B + D within [0, 1]
  auto rep = models::build_replicator(params);
  UrnState z{{40, 30, 30}};
  auto p = rep.model.rules().limit_probabilities(z.frequencies());
  auto pi = rep.model.kernel_probabilities(z);
  const double expected = params.gamma() * params.nu * 0.4 * 0.25 / 100.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p[i] - pi[i]));
  CHECK(worst == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("kernel requires a nonzero state of the right dimension") {
  auto death = models::pure_death(2);
  CHECK_THROWS_AS(death.kernel_probabilities(UrnState{{0, 0}}), Error);
  CHECK_THROWS_AS(death.kernel_probabilities(UrnState{{1, 0, 0}}), Error);
}

TEST_CASE("stop conditions compose") {
  auto stop = StopCondition::max_steps(10) || StopCondition::max_tau(2.0);
  UrnState z{{5}};
  CHECK(stop.satisfied(10, z, 0.0));
  CHECK(stop.satisfied(3, z, 2.5));
  CHECK_FALSE(stop.satisfied(3, z, 1.0));
  auto both = StopCondition::max_steps(10) && StopCondition::min_population(100);
  CHECK_FALSE(both.satisfied(10, z, 0.0));
  CHECK(both.satisfied(10, UrnState{{150}}, 0.0));
}

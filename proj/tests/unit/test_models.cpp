#include <doctest.h>

#include <cmath>

#include "urnflow/error.hpp"
#include "urnflow/models.hpp"

using namespace urnflow;

TEST_CASE("hypercycle pattern") {
  auto p3 = models::hypercycle(3, 1.0, 2.5, 4.0);
  CHECK(p3.B(0, 2) == 1.0);
  CHECK(p3.B(1, 0) == 1.0);
  CHECK(p3.B(2, 1) == 1.0);
  CHECK(p3.B.sum() == 3.0);
  auto p2 = models::hypercycle(2, 1.0, 2.5, 4.0);
  CHECK(p2.B(0, 1) == 1.0);
  CHECK(p2.B(1, 0) == 1.0);
  CHECK(p2.B.trace() == 0.0);
}

TEST_CASE("payoff matrix and growth at the barycentre") {
  auto params = models::hypercycle(5, 1.0, 2.5, 4.0);
  auto rep = models::build_replicator(params);
  CHECK(rep.A(1, 0) == doctest::Approx(2.0 * 4.0 / 7.5));
  const Vec xhat(5, 0.2);
  CHECK(rep.closed_form.growth(xhat) == doctest::Approx(1.0 / 75.0).epsilon(1e-12));
  auto derived = derive_system(rep.model.rules());
  CHECK(derived.growth(xhat) == doctest::Approx(1.0 / 75.0).epsilon(1e-12));
}

TEST_CASE("rule-summed drift matches the closed-form replicator field") {
  auto rep = models::build_replicator(models::hypercycle(5, 1.0, 2.5, 4.0));
  auto derived = derive_system(rep.model.rules());
  Vec x{0.05, 0.4, 0.1, 0.3, 0.15};
  auto a = derived.eval_drift(x);
  auto b = rep.closed_form.eval_drift(x);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

TEST_CASE("nu = 0 leaves baseline birth and death") {
  auto params = models::hypercycle(3, 1.0, 3.0, 0.0);
  auto rep = models::build_replicator(params);
  UrnState z{{10, 20, 10}};
  auto pi = rep.model.kernel_probabilities(z);
  const auto& moves = rep.model.rules().moves();
  for (std::size_t r = 0; r < moves.size(); ++r) {
    const auto& w = moves[r].w;
    if (moves[r].magnitude() == 1) {
      const int i = static_cast<int>(std::find_if(w.begin(), w.end(), [](int v) { return v != 0; }) - w.begin());
      const double x = z.frequencies()[i];
      CHECK(pi[r] == doctest::Approx(w[i] > 0 ? x * 0.25 : x * 0.75));
    } else if (!moves[r].is_zero()) {
      CHECK(pi[r] == 0.0);
    }
  }
}

TEST_CASE("selection-mutation drift matches its closed form") {
  auto params = models::cyclic_mutation_example(1.0, 2.835, 0.5, 0.1, 1.0, 0.5);
  auto sm = models::build_selection_mutation(params);
  auto derived = derive_system(sm.model.rules());
  Vec x{0.2, 0.5, 0.3};
  auto a = derived.eval_drift(x);
  auto b = sm.closed_form.eval_drift(x);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  CHECK(derived.growth(x) == doctest::Approx(sm.closed_form.growth(x)).epsilon(1e-12));
}

TEST_CASE("selection-mutation without mutation: growth from rule summation") {
  models::SelectionMutationParams p;
  p.k = 2;
  p.d = 0.3;
  p.nu = 1.0;
  p.F = models::Matrix::Constant(2, 2, 4.0);
  p.Mu = models::Matrix::Zero(2, 2);
  p.offspring.assign(2, std::vector<models::OffspringDistribution>(2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) p.offspring[i][j] = models::OffspringDistribution{{0.0, 1.0}};  // always 2
  auto sm = models::build_selection_mutation(p);
  auto derived = derive_system(sm.model.rules());
  Vec x{0.25, 0.75};
  // Every fusion adds two of each partner, so each encounter grows the urn by 4.
  const double gamma = 1.0 / (0.3 + 1.0);
  CHECK(derived.growth(x) == doctest::Approx(gamma * (4.0 - 0.3)));
  CHECK(sm.closed_form.growth(x) == doctest::Approx(derived.growth(x)));
}

TEST_CASE("single allele selection-mutation normalizes") {
  models::SelectionMutationParams p;
  p.k = 1;
  p.d = 0.5;
  p.nu = 1.0;
  p.F = models::Matrix::Constant(1, 1, 1.0);
  p.Mu = models::Matrix::Zero(1, 1);
  p.offspring = {{models::default_offspring(1.0)}};
  auto sm = models::build_selection_mutation(p);
  auto report = validate_model(sm.model, std::vector<UrnState>{UrnState{{1}}, UrnState{{7}}, UrnState{{500}}});
  CHECK(report.ok());
  CHECK(report.max_normalization_error < 1e-12);
  CHECK(sm.closed_form.eval_drift(Vec{1.0})[0] == doctest::Approx(0.0));
}

TEST_CASE("default offspring has mean f/2") {
  for (double f : {0.3, 1.0, 2.0, 2.835, 5.5}) CHECK(models::default_offspring(f).mean() == doctest::Approx(f / 2.0));
}

TEST_CASE("cyclic example preconditions") {
  CHECK_THROWS_AS(models::cyclic_mutation_example(1.0, 2.0, 0.2, 0.2, 1.0, 0.5), Error);
  auto p = models::cyclic_mutation_example(1.0, 0.0, 0.1, 0.05, 1.0, 0.5);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("A2 holds for the selection-mutation kernel") {
  auto params = models::cyclic_mutation_example(1.0, 2.835, 0.5, 0.1, 1.0, 0.5);
  auto sm = models::build_selection_mutation(params);
  std::vector<UrnState> states{UrnState{{10, 0, 0}}, UrnState{{9000, 500, 500}}, UrnState{{3, 4, 5}}};
  auto report = validate_model(sm.model, states);
  CHECK(report.ok());
  CHECK(report.empirical_a <= sm.model.a_bound() + 1e-12);
}

TEST_CASE("pure birth and pure death controls") {
  auto birth = models::pure_birth(1);
  auto pi = birth.kernel_probabilities(UrnState{{4}});
  CHECK(pi[0] == doctest::Approx(1.0));
  auto death = models::pure_death(2);
  auto g = derive_system(death.rules());
  CHECK(g.growth(Vec{0.5, 0.5}) == doctest::Approx(-1.0));
}

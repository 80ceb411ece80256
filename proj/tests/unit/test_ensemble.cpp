#include <doctest.h>

#include <cmath>

#include "urnflow/ensemble.hpp"
#include "urnflow/models.hpp"

using namespace urnflow;

TEST_CASE("Wilson interval arithmetic") {
  auto a = ensemble::wilson_interval(0, 100);
  CHECK(a.estimate == 0.0);
  CHECK(a.lower == 0.0);
  CHECK(a.upper == doctest::Approx(0.037).epsilon(0.01));
  auto b = ensemble::wilson_interval(100, 100);
  CHECK(b.lower == doctest::Approx(0.963).epsilon(0.001));
  CHECK(b.upper == 1.0);
  auto c = ensemble::wilson_interval(50, 100);
  CHECK(c.estimate == 0.5);
  CHECK(c.lower == doctest::Approx(0.404).epsilon(0.001));
  CHECK(c.upper == doctest::Approx(0.596).epsilon(0.001));
  auto e = ensemble::wilson_interval(0, 0);
  CHECK(e.lower == 0.0);
  CHECK(e.upper == 1.0);
}

TEST_CASE("pure death never establishes, pure birth always does") {
  ensemble::EnsembleConfig cfg;
  cfg.replicates = 20;
  cfg.master_seed = 3;
  cfg.survival_threshold = 50;
  cfg.max_steps = 1000;
  cfg.z0 = UrnState{{5, 5}};
  auto dead = ensemble::run_ensemble(models::pure_death(2), cfg);
  CHECK(dead.count(ensemble::Outcome::extinct) == 20);
  CHECK(ensemble::establishment_probability(dead).estimate == 0.0);

  cfg.z0 = UrnState{{1}};
  auto born = ensemble::run_ensemble(models::pure_birth(1), cfg);
  CHECK(ensemble::establishment_probability(born).estimate == 1.0);
}

TEST_CASE("ensembles are identical across worker counts") {
  auto rep = models::build_replicator(models::hypercycle(3, 1.0, 1.5, 4.0));
  ensemble::EnsembleConfig cfg;
  cfg.replicates = 24;
  cfg.master_seed = 17;
  cfg.survival_threshold = 300;
  cfg.max_steps = 20000;
  cfg.z0 = UrnState{{5, 5, 5}};
  cfg.attractor = analysis::AttractorSpec::point_at(Vec(3, 1.0 / 3.0));
  cfg.distance_checkpoints = {100, 1000};
  cfg.jobs = 1;
  const auto one = ensemble::to_csv(ensemble::run_ensemble(rep.model, cfg));
  cfg.jobs = 4;
  const auto four = ensemble::to_csv(ensemble::run_ensemble(rep.model, cfg));
  CHECK(one == four);
  cfg.master_seed = 18;
  CHECK(ensemble::to_csv(ensemble::run_ensemble(rep.model, cfg)) != one);
}

TEST_CASE("convergence statistics of runs pinned at the target") {
  ensemble::EnsembleResult result;
  result.checkpoints = {10};
  result.has_attractor = true;
  for (std::size_t r = 0; r < 3; ++r) {
    ensemble::ReplicateSummary s;
    s.index = r;
    s.outcome = ensemble::Outcome::established;
    s.checkpoint_x = {Vec(3, 1.0 / 3.0)};
    s.checkpoint_distance = {0.0};
    s.final_x = Vec(3, 1.0 / 3.0);
    result.replicates.push_back(s);
  }
  auto table = ensemble::convergence_statistics(result, analysis::AttractorSpec::point_at(Vec(3, 1.0 / 3.0)));
  REQUIRE_FALSE(table.empty);
  REQUIRE(table.rows.size() == 2);
  for (const auto& row : table.rows) {
    CHECK(row.count == 3);
    CHECK(row.max == 0.0);
  }
  CHECK(table.rows.back().label == "final");
}

TEST_CASE("ensemble CSV header") {
  ensemble::EnsembleResult result;
  result.checkpoints = {10, 100};
  const auto csv = ensemble::to_csv(result);
  CHECK(csv.rfind("replicate,outcome,steps,final_size,final_tau,d_10,d_100,d_final,sum_delta_0.5,sum_delta_1,"
                  "tail_delta_0.5\n",
                  0) == 0);
}

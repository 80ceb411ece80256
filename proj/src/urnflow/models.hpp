#pragma once

// Builders for the replicator and selection-mutation urn processes, plus
// small monomial-rate models used as controls.

#include <Eigen/Dense>
#include <vector>

#include "urnflow/mean_field.hpp"
#include "urnflow/urn.hpp"

namespace urnflow::models {

using Matrix = Eigen::MatrixXd;

struct ReplicatorParams {
  int k = 0;
  double b = 0.0;
  double d = 0.0;
  double nu = 0.0;
  Matrix B;  // birth probabilities b_ij for an i-initiated encounter with j
  Matrix D;  // death probabilities d_ij

  double gamma() const { return 1.0 / (b + d + nu); }
  /// A = 2 nu gamma (B - D).
  Matrix payoff() const;
  void validate() const;
};

/// Offspring count distribution for one fusion type: probs[l] = P[B = 2l].
struct OffspringDistribution {
  std::vector<double> probs;

  double mean() const;
  int max_value() const { return 2 * (static_cast<int>(probs.size()) - 1); }
};

/// Two-point law on {0, 2m'} with 2m' the smallest even integer >= f (at
/// least 2) and P[2m'] = f/(4m'), so the mean is f/2.
OffspringDistribution default_offspring(double f);

struct SelectionMutationParams {
  int k = 0;
  double d = 0.0;
  double nu = 0.0;
  Matrix F;   // symmetric fitness f_ij
  Matrix Mu;  // mutation rates mu_ij (i -> j), zero diagonal
  std::vector<std::vector<OffspringDistribution>> offspring;  // k x k

  double total_mutation() const;
  double gamma() const { return 1.0 / (d + total_mutation() + nu); }
  /// Row-stochastic mutation matrix: Mu/mu off the diagonal, completed on it.
  Matrix mutation_matrix() const;
  void validate() const;
};

struct ReplicatorModel {
  UrnModel model;
  MeanLimitSystem closed_form;
  Matrix A;
};

struct SelectionMutationModel {
  UrnModel model;
  MeanLimitSystem closed_form;
};

ReplicatorParams hypercycle(int k, double b, double d, double nu);
ReplicatorModel build_replicator(const ReplicatorParams& params);

/// Analytic A2 constant gamma nu max_i (b_ii^2 + d_ii^2).
double replicator_a_bound(const ReplicatorParams& params);

SelectionMutationParams cyclic_mutation_example(double f, double s, double mu1, double mu2,
                                                double nu, double d);
SelectionMutationModel build_selection_mutation(const SelectionMutationParams& params);

/// Analytic A2 constant gamma nu max_i (1 - P[B_ii = 0]).
double selection_mutation_a_bound(const SelectionMutationParams& params);

/// Replicator field x o (Ax - x^T A x).
void replicator_field(const Matrix& A, std::span<const double> x, std::span<double> out);
double quadratic_form(const Matrix& A, std::span<const double> x);

/// p_w(x) = coef * prod_{i in factors} x_i; the exact kernel equals the limit.
struct MonomialRule {
  MoveVector move;
  double coef = 1.0;
  std::vector<int> factors;
};

UrnModel build_monomial(std::string name, int k, std::vector<MonomialRule> rules);
UrnModel pure_death(int k);
UrnModel pure_birth(int k);

}  // namespace urnflow::models

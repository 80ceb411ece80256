#include "urnflow/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "urnflow/error.hpp"

namespace urnflow::models {

namespace {

MoveVector unit(int k, std::initializer_list<std::pair<int, int>> entries) {
  MoveVector w{std::vector<int>(k, 0)};
  for (auto [i, v] : entries) w.w[i] += v;
  return w;
}

void require_square(const Matrix& M, int k, const char* name) {
  std::ostringstream os;
  os << name << " must be " << k << "x" << k;
  require(M.rows() == k && M.cols() == k, os.str());
}

// Replicator move order: (+e_i, -e_i) per i; (e_i+e_j, -e_i-e_j) per i<j;
// (+2e_i, -2e_i) per i; e_i - e_j per ordered i != j; the zero move.
std::vector<MoveVector> replicator_moves(int k) {
  std::vector<MoveVector> moves;
  for (int i = 0; i < k; ++i) {
    moves.push_back(unit(k, {{i, 1}}));
    moves.push_back(unit(k, {{i, -1}}));
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      moves.push_back(unit(k, {{i, 1}, {j, 1}}));
      moves.push_back(unit(k, {{i, -1}, {j, -1}}));
    }
  for (int i = 0; i < k; ++i) {
    moves.push_back(unit(k, {{i, 2}}));
    moves.push_back(unit(k, {{i, -2}}));
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) moves.push_back(unit(k, {{i, 1}, {j, -1}}));
  moves.push_back(MoveVector{std::vector<int>(k, 0)});
  return moves;
}

// Encounter outcome probabilities. inv_size = 1/|z| gives the exact kernel,
// inv_size = 0 the limiting maps p_w.
struct ReplicatorEvaluator {
  int k;
  double gamma, b, d, nu;
  Matrix B, D, U;

  void operator()(std::span<const double> x, double inv_size, std::span<double> out) const {
    const double gn = gamma * nu;
    std::size_t idx = 0;
    for (int i = 0; i < k; ++i) {
      double sb = 0.0, sd = 0.0;
      for (int j = 0; j < k; ++j) {
        sb += x[j] * B(i, j) * U(j, i);
        sd += x[j] * D(i, j) * U(j, i);
      }
      out[idx++] = gamma * x[i] * (b + 2.0 * nu * sb);
      out[idx++] = gamma * x[i] * (d + 2.0 * nu * sd);
    }
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        out[idx++] = 2.0 * gn * x[i] * x[j] * B(i, j) * B(j, i);
        out[idx++] = 2.0 * gn * x[i] * x[j] * D(i, j) * D(j, i);
      }
    std::size_t same_type = idx;
    for (int i = 0; i < k; ++i) {
      out[idx++] = gn * x[i] * x[i] * B(i, i) * B(i, i);
      out[idx++] = gn * x[i] * x[i] * D(i, i) * D(i, i);
    }
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (i != j) out[idx++] = 2.0 * gn * x[i] * x[j] * B(i, j) * D(j, i);
    double null_mass = 0.0;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) null_mass += x[i] * x[j] * U(i, j) * U(j, i);
      null_mass += 2.0 * x[i] * x[i] * B(i, i) * D(i, i);
    }
    out[idx] = gn * null_mass;
    if (inv_size == 0.0) return;
    // Finite urn: a same-type pair cannot reuse one individual. The lost
    // mass goes to the zero move. Applied as corrections so p - Pi is exact
    // up to one rounding.
    double released = 0.0;
    for (int i = 0; i < k; ++i) {
      const double lost = gn * x[i] * inv_size;
      const double bb = lost * B(i, i) * B(i, i), dd = lost * D(i, i) * D(i, i);
      out[same_type] = std::max(0.0, out[same_type] - bb);
      ++same_type;
      out[same_type] = std::max(0.0, out[same_type] - dd);
      ++same_type;
      released += bb + dd;
    }
    out[idx] += released;
  }
};

struct FusionMove {
  int i, j, l;  // adds 2l gametes of each of i and j (i <= j)
};

struct SelectionMutationEvaluator {
  int k;
  double gamma, d, nu, mu;
  Matrix Mu;
  std::vector<std::vector<OffspringDistribution>> offspring;
  std::vector<FusionMove> fusions;

  double fusion_prob(int i, int j, int l) const {
    auto p = [&](int a, int c) {
      const auto& pr = offspring[a][c].probs;
      return l < static_cast<int>(pr.size()) ? pr[l] : 0.0;
    };
    return i == j ? p(i, i) : p(i, j) + p(j, i);
  }

  void operator()(std::span<const double> x, double inv_size, std::span<double> out) const {
    const double gn = gamma * nu;
    std::size_t idx = 0;
    double mutation_used = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (i != j) {
          out[idx++] = gamma * Mu(i, j) * x[i];
          mutation_used += Mu(i, j) * x[i];
        }
    for (int i = 0; i < k; ++i) out[idx++] = gamma * d * x[i];
    const std::size_t first_fusion = idx;
    for (const auto& fm : fusions)
      out[idx++] = gn * x[fm.i] * x[fm.j] * fusion_prob(fm.i, fm.j, fm.l);
    double null_mass = gamma * std::max(0.0, mu - mutation_used);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) null_mass += gn * x[i] * x[j] * offspring[i][j].probs[0];
    out[idx] = null_mass;
    if (inv_size == 0.0) return;
    // Same-type pairs in a finite urn; see the replicator evaluator.
    for (std::size_t f = 0; f < fusions.size(); ++f) {
      const auto& fm = fusions[f];
      if (fm.i != fm.j) continue;
      auto& v = out[first_fusion + f];
      v = std::max(0.0, v - gn * x[fm.i] * inv_size * fusion_prob(fm.i, fm.i, fm.l));
    }
    double released = 0.0;
    for (int i = 0; i < k; ++i) released += gn * x[i] * inv_size * (1.0 - offspring[i][i].probs[0]);
    out[idx] += released;
  }
};

}  // namespace

Matrix ReplicatorParams::payoff() const { return 2.0 * nu * gamma() * (B - D); }

void ReplicatorParams::validate() const {
  require(k >= 1, "replicator needs k >= 1");
  require(b > 0.0, "baseline birth rate b must be positive");
  require(d > 0.0, "baseline death rate d must be positive");
  require(nu >= 0.0, "encounter rate nu must be nonnegative");
  require_square(B, k, "B");
  require_square(D, k, "D");
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      require(B(i, j) >= 0.0 && B(i, j) <= 1.0, "entries of B must lie in [0,1]");
      require(D(i, j) >= 0.0 && D(i, j) <= 1.0, "entries of D must lie in [0,1]");
      require(B(i, j) + D(i, j) <= 1.0 + 1e-15, "b_ij + d_ij must not exceed 1");
    }
}

double OffspringDistribution::mean() const {
  double m = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) m += 2.0 * static_cast<double>(l) * probs[l];
  return m;
}

OffspringDistribution default_offspring(double f) {
  require(f >= 0.0, "fitness must be nonnegative");
  int half = std::max(1, static_cast<int>(std::ceil(f / 2.0 - 1e-12)));  // m'
  OffspringDistribution dist;
  dist.probs.assign(half + 1, 0.0);
  dist.probs[half] = f / (4.0 * half);
  dist.probs[0] = 1.0 - dist.probs[half];
  return dist;
}

double SelectionMutationParams::total_mutation() const {
  double mu = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) mu += Mu(i, j);
  return mu;
}

Matrix SelectionMutationParams::mutation_matrix() const {
  const double mu = total_mutation();
  Matrix M = Matrix::Zero(k, k);
  if (mu == 0.0) return Matrix::Identity(k, k);
  for (int i = 0; i < k; ++i) {
    double row = 0.0;
    for (int j = 0; j < k; ++j)
      if (i != j) {
        M(i, j) = Mu(i, j) / mu;
        row += M(i, j);
      }
    M(i, i) = 1.0 - row;
  }
  return M;
}

void SelectionMutationParams::validate() const {
  require(k >= 1, "selection-mutation needs k >= 1");
  require(d > 0.0, "gamete death rate d must be positive");
  require(nu > 0.0, "fusion rate nu must be positive");
  require_square(F, k, "F");
  require_square(Mu, k, "Mu");
  require(static_cast<int>(offspring.size()) == k, "offspring table must be k x k");
  for (int i = 0; i < k; ++i) {
    require(static_cast<int>(offspring[i].size()) == k, "offspring table must be k x k");
    require(Mu(i, i) == 0.0, "mutation matrix must have a zero diagonal");
    for (int j = 0; j < k; ++j) {
      require(F(i, j) >= 0.0, "fitness entries must be nonnegative");
      require(std::abs(F(i, j) - F(j, i)) <= 1e-12, "fitness matrix must be symmetric");
      if (i != j) require(Mu(i, j) >= 0.0, "mutation rates must be nonnegative");
      const auto& dist = offspring[i][j];
      require(!dist.probs.empty(), "offspring distribution is empty");
      double total = 0.0;
      for (double p : dist.probs) {
        require(p >= 0.0 && p <= 1.0, "offspring probabilities must lie in [0,1]");
        total += p;
      }
      require(std::abs(total - 1.0) <= 1e-12, "offspring distribution must sum to 1");
      std::ostringstream os;
      os << "offspring mean for (" << i << "," << j << ") must equal f_ij/2";
      require(std::abs(dist.mean() - F(i, j) / 2.0) <= 1e-12, os.str());
    }
  }
}

void replicator_field(const Matrix& A, std::span<const double> x, std::span<double> out) {
  const auto k = static_cast<int>(x.size());
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), k);
  Eigen::VectorXd Ax = A * xv;
  const double avg = xv.dot(Ax);
  for (int i = 0; i < k; ++i) out[i] = x[i] * (Ax[i] - avg);
}

double quadratic_form(const Matrix& A, std::span<const double> x) {
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return xv.dot(A * xv);
}

ReplicatorParams hypercycle(int k, double b, double d, double nu) {
  require(k >= 2, "hypercycle needs k >= 2");
  ReplicatorParams p;
  p.k = k;
  p.b = b;
  p.d = d;
  p.nu = nu;
  p.B = Matrix::Zero(k, k);
  p.D = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) p.B(i, (i - 1 + k) % k) = 1.0;
  return p;
}

double replicator_a_bound(const ReplicatorParams& params) {
  double worst = 0.0;
  for (int i = 0; i < params.k; ++i)
    worst = std::max(worst, params.B(i, i) * params.B(i, i) + params.D(i, i) * params.D(i, i));
  return params.gamma() * params.nu * worst;
}

ReplicatorModel build_replicator(const ReplicatorParams& params) {
  params.validate();
  const int k = params.k;
  auto eval = std::make_shared<ReplicatorEvaluator>(ReplicatorEvaluator{
      k, params.gamma(), params.b, params.d, params.nu, params.B, params.D,
      Matrix::Ones(k, k) - params.B - params.D});
  RuleSet rules(k, replicator_moves(k), [eval](std::span<const double> x, std::span<double> out) {
    (*eval)(x, 0.0, out);
  });
  KernelEvaluator kernel = [eval](const UrnState& z, std::span<double> out) {
    const double inv = 1.0 / static_cast<double>(z.size());
    double x[64];
    std::vector<double> heap;
    double* xp = x;
    if (z.counts.size() > 64) {
      heap.resize(z.counts.size());
      xp = heap.data();
    }
    for (std::size_t i = 0; i < z.counts.size(); ++i) xp[i] = static_cast<double>(z.counts[i]) / static_cast<double>(z.size());
    (*eval)(std::span<const double>(xp, z.counts.size()), inv, out);
  };
  UrnModel model("replicator", 2, rules, std::move(kernel), replicator_a_bound(params));

  Matrix A = params.payoff();
  MeanLimitSystem sys;
  sys.k = k;
  sys.drift = [A](std::span<const double> x, std::span<double> out) { replicator_field(A, x, out); };
  const double base = params.gamma() * (params.b - params.d);
  sys.growth = [A, base](std::span<const double> x) { return base + quadratic_form(A, x); };
  return {std::move(model), std::move(sys), std::move(A)};
}

SelectionMutationParams cyclic_mutation_example(double f, double s, double mu1, double mu2,
                                                double nu, double d) {
  require(mu1 != mu2, "cyclic mutation example needs mu1 != mu2");
  require(f >= 0.0 && s >= 0.0, "fitness parameters must be nonnegative");
  require(mu1 >= 0.0 && mu2 >= 0.0, "mutation rates must be nonnegative");
  SelectionMutationParams p;
  p.k = 3;
  p.d = d;
  p.nu = nu;
  p.F = Matrix::Constant(3, 3, f) + s * Matrix::Identity(3, 3);
  p.Mu = Matrix::Zero(3, 3);
  const double rate[3] = {0.0, mu1, mu2};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) p.Mu(i, j) = rate[((i - j) % 3 + 3) % 3];
  p.offspring.assign(3, std::vector<OffspringDistribution>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) p.offspring[i][j] = default_offspring(p.F(i, j));
  return p;
}

double selection_mutation_a_bound(const SelectionMutationParams& params) {
  double worst = 0.0;
  for (int i = 0; i < params.k; ++i)
    worst = std::max(worst, 1.0 - params.offspring[i][i].probs[0]);
  return params.gamma() * params.nu * worst;
}

SelectionMutationModel build_selection_mutation(const SelectionMutationParams& params) {
  params.validate();
  const int k = params.k;
  std::vector<MoveVector> moves;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) moves.push_back(unit(k, {{j, 1}, {i, -1}}));
  for (int i = 0; i < k; ++i) moves.push_back(unit(k, {{i, -1}}));
  std::vector<FusionMove> fusions;
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) {
      int top = static_cast<int>(std::max(params.offspring[i][j].probs.size(),
                                          params.offspring[j][i].probs.size()));
      for (int l = 1; l < top; ++l) {
        fusions.push_back({i, j, l});
        moves.push_back(unit(k, {{i, 2 * l}, {j, 2 * l}}));
      }
    }
  moves.push_back(MoveVector{std::vector<int>(k, 0)});

  auto eval = std::make_shared<SelectionMutationEvaluator>(
      SelectionMutationEvaluator{k, params.gamma(), params.d, params.nu, params.total_mutation(),
                                 params.Mu, params.offspring, std::move(fusions)});
  RuleSet rules(k, std::move(moves), [eval](std::span<const double> x, std::span<double> out) {
    (*eval)(x, 0.0, out);
  });
  KernelEvaluator kernel = [eval](const UrnState& z, std::span<double> out) {
    const double inv = 1.0 / static_cast<double>(z.size());
    std::vector<double> x(z.counts.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(z.counts[i]) / static_cast<double>(z.size());
    (*eval)(x, inv, out);
  };
  const int m = std::max(1, rules.max_magnitude());
  UrnModel model("selection_mutation", m, rules, std::move(kernel),
                 selection_mutation_a_bound(params));

  const double gamma = params.gamma();
  const double mu = params.total_mutation();
  Matrix F = params.F;
  Matrix Mt = params.mutation_matrix().transpose();
  const double nu = params.nu;
  MeanLimitSystem sys;
  sys.k = k;
  sys.drift = [F, Mt, gamma, mu, nu](std::span<const double> x, std::span<double> out) {
    replicator_field(F, x, out);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd mut = Mt * xv - xv;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = gamma * nu * out[i] + gamma * mu * mut[i];
  };
  const double d = params.d;
  sys.growth = [F, gamma, nu, d](std::span<const double> x) {
    return gamma * (nu * quadratic_form(F, x) - d);
  };
  return {std::move(model), std::move(sys)};
}

UrnModel build_monomial(std::string name, int k, std::vector<MonomialRule> rules) {
  require(!rules.empty(), "custom model needs at least one rule");
  std::vector<MoveVector> moves;
  for (const auto& r : rules) {
    require(static_cast<int>(r.move.size()) == k, "custom move has wrong dimension");
    require(r.coef >= 0.0, "custom rule coefficient must be nonnegative");
    for (int f : r.factors) require(f >= 0 && f < k, "custom rule factor index out of range");
    moves.push_back(r.move);
  }
  auto shared = std::make_shared<const std::vector<MonomialRule>>(std::move(rules));
  RuleSet set(k, std::move(moves), [shared](std::span<const double> x, std::span<double> out) {
    for (std::size_t r = 0; r < shared->size(); ++r) {
      double p = (*shared)[r].coef;
      for (int f : (*shared)[r].factors) p *= x[f];
      out[r] = p;
    }
  });
  return UrnModel::from_limit(std::move(name), std::max(1, set.max_magnitude()), std::move(set));
}

UrnModel pure_death(int k) {
  std::vector<MonomialRule> rules;
  for (int i = 0; i < k; ++i) rules.push_back({unit(k, {{i, -1}}), 1.0, {i}});
  return build_monomial("pure_death", k, std::move(rules));
}

UrnModel pure_birth(int k) {
  std::vector<MonomialRule> rules;
  for (int i = 0; i < k; ++i) rules.push_back({unit(k, {{i, 1}}), 1.0, {i}});
  return build_monomial("pure_birth", k, std::move(rules));
}

}  // namespace urnflow::models

#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvi/assembly.hpp"
#include "pvi/config.hpp"
#include "pvi/model.hpp"

namespace pvi {

/// Nodal unknowns at one time level. Lambda is the Lagrange multiplier of the
/// density bounds: Lambda <= 0 where B sits on the upper bound, Lambda >= 0 on
/// the lower bound, zero elsewhere.
struct SystemState {
  NodalField B;
  NodalField Lambda;
  NodalField N;
  double t = 0.0;
};

struct NewtonReport {
  int iterations = 0;
  double final_residual_maxnorm = 0.0;
  int active_node_count = 0;
  bool converged = false;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, NewtonReport report, int iteration = -1)
      : std::runtime_error(what), report_(report), iteration_(iteration) {}
  const NewtonReport& report() const { return report_; }
  int iteration() const { return iteration_; }

 private:
  NewtonReport report_;
  int iteration_;
};

/// max{lower, min(psi, upper)}
double evans_projection(double psi, double lower, double upper);

/// Reaction matrices evaluated at a given (B, N) together with their
/// derivatives in N, for the fully implicit coupling.
struct ReactionLinearization {
  SparseMatrix growth;     // integral of r_B(N) phi_i phi_j
  SparseMatrix uptake;     // integral of r_N(N) phi_i phi_j
  SparseMatrix growth_dN;  // integral of r_B'(N) B phi_i phi_j
  SparseMatrix uptake_dN;  // integral of r_N'(N) B phi_i phi_j
};

/// Everything needed to advance one backward-Euler step.
struct StepProblem {
  SparseMatrix mass;      // M
  SparseMatrix stiff_B;   // A_B, diffusivity lagged at B_prev
  SparseMatrix stiff_N;   // A_N
  SparseMatrix growth;    // kappa_B R (or the spatial growth matrix)
  SparseMatrix uptake;    // kappa_N R
  Eigen::VectorXd load_B;  // F_B at the new time
  Eigen::VectorXd load_N;  // F_N
  NodalField B_prev;
  NodalField N_prev;
  double dt = 0.0;
  double t_new = 0.0;
  Bounds bounds;
  /// Nodes with homogeneous Dirichlet data; never part of the active set.
  std::vector<char> fixed;
  /// Complementarity constants c_i; empty means c = 1.
  Eigen::VectorXd complementarity_scale;
  /// Set only in fully implicit mode; growth and uptake above are then
  /// ignored in favour of the linearization at the current iterate.
  std::function<ReactionLinearization(const NodalField& B, const NodalField& N)>
      implicit_reaction;

  std::size_t size() const { return static_cast<std::size_t>(mass.rows()); }
};

/// Stacked residual [res_B; res_C; res_N] of length 3q:
///   res_B = (M + dt A_B - dt G_B) B - dt M Lambda - dt F_B - M B_prev
///   res_C = B - P_[lower, upper](B - c Lambda)
///   res_N = (M + dt A_N) N + dt G_N B - dt F_N - M N_prev
/// Fixed nodes contribute B_i, Lambda_i and N_i instead.
Eigen::VectorXd build_residual(const StepProblem& problem, const SystemState& guess);

/// true where lower < (B - c Lambda)_i < upper. Kink points count as active.
std::vector<char> inactive_nodes(const StepProblem& problem, const SystemState& guess);

/// An element of the generalized Jacobian of build_residual (3q x 3q).
SparseMatrix select_jacobian(const StepProblem& problem, const SystemState& guess);

/// Sparse LU solve with up to two rounds of iterative refinement. Throws
/// SolverError on structural or numerical singularity, or when the relative
/// residual stays above 1e-10.
Eigen::VectorXd linear_solve(const SparseMatrix& J, const Eigen::VectorXd& rhs);

/// Reuses the symbolic factorization while the sparsity pattern is unchanged
/// and the numeric factorization while the matrix is unchanged. In Auto mode,
/// systems with at least `iterative_threshold` unknowns are solved with
/// Jacobi-preconditioned BiCGSTAB first, falling back to sparse LU when that
/// misses the residual target.
class LinearSolver {
 public:
  enum class Method { Direct, Auto };
  static constexpr Eigen::Index iterative_threshold = 20000;

  explicit LinearSolver(Method method = Method::Direct);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  Eigen::VectorXd solve(const SparseMatrix& J, const Eigen::VectorXd& rhs);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Factorization caches reused across Newton iterations and time steps.
struct NewtonWorkspace {
  LinearSolver full;                                  // 3q Jacobian
  LinearSolver biofilm{LinearSolver::Method::Auto};   // reduced biofilm block
  LinearSolver nutrient{LinearSolver::Method::Auto};  // nutrient block
};

/// Newton correction target: the iterate obtained from `guess` by one step
/// with the active set of `guess`, computed by block elimination
/// (time-lagged coupling only).
SystemState reduced_newton_iterate(const StepProblem& problem, const SystemState& guess,
                                   NewtonWorkspace& workspace);

/// Semismooth Newton iteration on build_residual starting from `initial`.
/// Converged means at least one correction was taken, the residual max-norm
/// is below tol, and the active set did not change in the last correction.
/// Throws SolverError (carrying the report) after max_iter corrections.
std::pair<SystemState, NewtonReport> semismooth_newton(
    const StepProblem& problem, const SystemState& initial,
    const SolverOptions& options, NewtonWorkspace* workspace = nullptr);

/// Plain backward-Euler Galerkin step ignoring the bounds (Lambda = 0).
/// Time-lagged coupling only.
SystemState unconstrained_step(const StepProblem& problem);

/// Builds StepProblems for a fixed mesh and model, caching the
/// state-independent matrices.
class StepBuilder {
 public:
  StepBuilder(const SimplicialMesh& mesh, const ModelSpec& model,
              bool lump_mass = false, const SolverOptions& options = {});

  /// Problem for the step from prev.t to prev.t + dt.
  StepProblem build(const SystemState& prev, double dt) const;

  const Assembler& assembler() const { return assembler_; }
  const SparseMatrix& mass() const { return mass_; }
  /// Consistent mass matrix, regardless of lumping.
  const SparseMatrix& consistent_mass() const { return consistent_mass_; }
  const std::vector<char>& fixed_nodes() const { return fixed_; }

  /// Number of negative nodal N values clamped in the last build().
  int last_clamp_count() const { return last_clamp_count_; }

 private:
  SparseMatrix reaction_matrix(const NodalField& N, bool growth) const;

  const SimplicialMesh* mesh_;
  const ModelSpec* model_;
  bool lump_;
  SolverOptions options_;
  Assembler assembler_;
  SparseMatrix consistent_mass_;
  SparseMatrix mass_;
  std::optional<SparseMatrix> const_stiff_B_, const_stiff_N_;
  std::vector<char> fixed_;
  mutable int last_clamp_count_ = 0;
};

/// Unique solvability check for the discrete step: either
/// (i) gamma = min(D_B, D_N lower bounds) > 2 L C_PF^2, or
/// (ii) dt < C_PF^2 / (2 L C_PF^2 - gamma),
/// with L = max(kappa_B, kappa_N) and C_PF estimated as diam / pi.
struct TimestepAdvice {
  double gamma = 0.0;
  double lipschitz = 0.0;
  double poincare = 0.0;
  bool diffusion_dominated = false;  // condition (i)
  double dt_bound = 0.0;             // +inf when (i) holds
  bool dt_ok = false;
  std::string message;
};
TimestepAdvice check_timestep_condition(const ModelSpec& model,
                                        const SimplicialMesh& mesh, double dt);

}  // namespace pvi

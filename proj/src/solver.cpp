#include "pvi/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pvi {

double evans_projection(double psi, double lower, double upper) {
  return std::max(lower, std::min(psi, upper));
}

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Coupling {
  SparseMatrix growth, uptake;
  const SparseMatrix* growth_dN = nullptr;
  const SparseMatrix* uptake_dN = nullptr;
  ReactionLinearization owned;
};

Coupling coupling_at(const StepProblem& p, const SystemState& x) {
  Coupling c;
  if (p.implicit_reaction) {
    c.owned = p.implicit_reaction(x.B, x.N);
    c.growth = c.owned.growth;
    c.uptake = c.owned.uptake;
    c.growth_dN = &c.owned.growth_dN;
    c.uptake_dN = &c.owned.uptake_dN;
  } else {
    c.growth = p.growth;
    c.uptake = p.uptake;
  }
  return c;
}

void check_sizes(const StepProblem& p, const SystemState& x) {
  const auto q = static_cast<Eigen::Index>(p.size());
  if (x.B.size() != q || x.Lambda.size() != q || x.N.size() != q ||
      p.B_prev.size() != q || p.N_prev.size() != q || p.load_B.size() != q ||
      p.load_N.size() != q || p.fixed.size() != p.size())
    throw std::invalid_argument("state and step problem sizes differ");
}

void add_row(std::vector<Eigen::Triplet<double>>& out, const SparseMatrix& m,
             Eigen::Index row, Eigen::Index out_row, Eigen::Index col_offset,
             double scale) {
  for (SparseMatrix::InnerIterator it(m, row); it; ++it)
    out.emplace_back(static_cast<int>(out_row), static_cast<int>(col_offset + it.col()),
                     scale * it.value());
}

SparseMatrix with_identity_rows(const SparseMatrix& m, const std::vector<char>& fixed) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(m.nonZeros()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (fixed[i])
      t.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    else
      add_row(t, m, i, i, 0, 1.0);
  }
  SparseMatrix out(m.rows(), m.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double scale_at(const StepProblem& p, std::size_t i) {
  return p.complementarity_scale.size() ? p.complementarity_scale(static_cast<Eigen::Index>(i))
                                        : 1.0;
}

}  // namespace

std::vector<char> inactive_nodes(const StepProblem& p, const SystemState& x) {
  std::vector<char> inactive(p.size(), 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.fixed[i]) continue;
    const double psi = x.B(i) - scale_at(p, i) * x.Lambda(i);
    inactive[i] = (psi > p.bounds.lower && psi < p.bounds.upper) ? 1 : 0;
  }
  return inactive;
}

Eigen::VectorXd build_residual(const StepProblem& p, const SystemState& x) {
  check_sizes(p, x);
  const auto q = static_cast<Eigen::Index>(p.size());
  const Coupling c = coupling_at(p, x);
  const double dt = p.dt;
  Eigen::VectorXd r(3 * q);
  r.segment(0, q) = p.mass * (x.B - p.B_prev) + dt * (p.stiff_B * x.B) -
                    dt * (c.growth * x.B) - dt * (p.mass * x.Lambda) - dt * p.load_B;
  r.segment(2 * q, q) = p.mass * (x.N - p.N_prev) + dt * (p.stiff_N * x.N) +
                        dt * (c.uptake * x.B) - dt * p.load_N;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (p.fixed[i]) {
      r(i) = x.B(i);
      r(q + i) = x.Lambda(i);
      r(2 * q + i) = x.N(i);
    } else {
      r(q + i) = x.B(i) - evans_projection(x.B(i) - scale_at(p, i) * x.Lambda(i),
                                           p.bounds.lower, p.bounds.upper);
    }
  }
  return r;
}

SparseMatrix select_jacobian(const StepProblem& p, const SystemState& x) {
  check_sizes(p, x);
  const auto q = static_cast<Eigen::Index>(p.size());
  const Coupling c = coupling_at(p, x);
  const double dt = p.dt;
  const SparseMatrix KB = p.mass + dt * p.stiff_B - dt * c.growth;
  SparseMatrix KN = p.mass + dt * p.stiff_N;
  if (c.uptake_dN) KN = KN + dt * (*c.uptake_dN);
  const auto inactive = inactive_nodes(p, x);

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(2 * KB.nonZeros() + 2 * KN.nonZeros() +
                                     p.mass.nonZeros() + 2 * q));
  for (Eigen::Index i = 0; i < q; ++i) {
    if (p.fixed[i]) {
      for (int b = 0; b < 3; ++b)
        t.emplace_back(static_cast<int>(b * q + i), static_cast<int>(b * q + i), 1.0);
      continue;
    }
    add_row(t, KB, i, i, 0, 1.0);
    add_row(t, p.mass, i, i, q, -dt);
    if (c.growth_dN) add_row(t, *c.growth_dN, i, i, 2 * q, -dt);

    const double pi = inactive[i] ? 1.0 : 0.0;
    t.emplace_back(static_cast<int>(q + i), static_cast<int>(i), 1.0 - pi);
    t.emplace_back(static_cast<int>(q + i), static_cast<int>(q + i), pi * scale_at(p, i));

    add_row(t, c.uptake, i, 2 * q + i, 0, dt);
    add_row(t, KN, i, 2 * q + i, 2 * q, 1.0);
  }
  SparseMatrix J(3 * q, 3 * q);
  J.setFromTriplets(t.begin(), t.end());
  J.makeCompressed();
  return J;
}

struct LinearSolver::Impl {
  Method method = Method::Direct;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  ColMatrix matrix;
  bool analysed = false;
  bool factorized = false;
  Eigen::VectorXd last_solution;
};

LinearSolver::LinearSolver(Method method) : impl_(std::make_unique<Impl>()) {
  impl_->method = method;
}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

namespace {

bool same_pattern(const ColMatrix& a, const ColMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a.nonZeros() == b.nonZeros() &&
         std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1,
                    b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

}  // namespace

Eigen::VectorXd LinearSolver::solve(const SparseMatrix& J, const Eigen::VectorXd& rhs) {
  if (J.rows() != J.cols() || J.rows() != rhs.size())
    throw std::invalid_argument("linear system dimensions do not match");
  ColMatrix A = J;
  A.makeCompressed();
  Impl& s = *impl_;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());

  if (s.method == Method::Auto && A.rows() >= iterative_threshold) {
    Eigen::BiCGSTAB<ColMatrix> it;
    it.setTolerance(1e-13);
    it.setMaxIterations(400);
    it.compute(A);
    if (it.info() == Eigen::Success) {
      const bool warm = s.last_solution.size() == rhs.size();
      Eigen::VectorXd sol = warm ? Eigen::VectorXd(it.solveWithGuess(rhs, s.last_solution))
                                 : Eigen::VectorXd(it.solve(rhs));
      const double rel = (rhs - A * sol).norm() / bnorm;
      if (std::isfinite(rel) && rel <= 1e-11) {
        s.last_solution = sol;
        return sol;
      }
    }
  }

  const bool pattern = s.analysed && same_pattern(A, s.matrix);
  const bool values =
      pattern && s.factorized &&
      std::equal(A.valuePtr(), A.valuePtr() + A.nonZeros(), s.matrix.valuePtr());
  if (!values) {
    if (!pattern) {
      s.lu.analyzePattern(A);
      s.analysed = true;
    }
    s.matrix = A;
    s.factorized = false;
    s.lu.factorize(s.matrix);
    if (s.lu.info() != Eigen::Success)
      throw SolverError("singular Jacobian: " + s.lu.lastErrorMessage(), {});
    s.factorized = true;
  }

  Eigen::VectorXd sol = s.lu.solve(rhs);
  Eigen::VectorXd res = rhs - s.matrix * sol;
  for (int k = 0; k < 2 && res.norm() > 1e-10 * bnorm; ++k) {
    sol += s.lu.solve(res);
    res = rhs - s.matrix * sol;
  }
  const double rel = res.norm() / bnorm;
  if (!std::isfinite(rel) || rel > 1e-10) {
    std::ostringstream msg;
    msg << "linear solve reached only relative residual " << rel
        << " (numerically singular Jacobian)";
    throw SolverError(msg.str(), {});
  }
  s.last_solution = sol;
  return sol;
}

Eigen::VectorXd linear_solve(const SparseMatrix& J, const Eigen::VectorXd& rhs) {
  LinearSolver solver;
  return solver.solve(J, rhs);
}

SystemState reduced_newton_iterate(const StepProblem& p, const SystemState& x,
                                   NewtonWorkspace& ws) {
  if (p.implicit_reaction)
    throw std::invalid_argument("block elimination needs time-lagged coupling");
  check_sizes(p, x);
  const auto q = static_cast<Eigen::Index>(p.size());
  const double dt = p.dt;
  const auto inactive = inactive_nodes(p, x);

  // Unknown z_j is B_j on inactive nodes and dt Lambda_j on active ones;
  // active B_j sit on the bound the node is projected onto.
  Eigen::VectorXd bound = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd keep_B(q), keep_L(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const bool act = !p.fixed[j] && !inactive[j];
    keep_B(j) = act ? 0.0 : 1.0;
    keep_L(j) = act ? 1.0 : 0.0;
    if (act)
      bound(j) = x.B(j) - scale_at(p, j) * x.Lambda(j) >= p.bounds.upper ? p.bounds.upper
                                                                         : p.bounds.lower;
  }
  const SparseMatrix KB = p.mass + dt * p.stiff_B - dt * p.growth;
  const SparseMatrix S = with_identity_rows(
      SparseMatrix(KB * keep_B.asDiagonal()) - SparseMatrix(p.mass * keep_L.asDiagonal()),
      p.fixed);
  Eigen::VectorXd rb = dt * p.load_B + p.mass * p.B_prev - KB * bound;
  for (Eigen::Index i = 0; i < q; ++i)
    if (p.fixed[i]) rb(i) = 0.0;
  const Eigen::VectorXd z = ws.biofilm.solve(S, rb);

  SystemState out;
  out.t = x.t;
  out.B = keep_B.cwiseProduct(z) + bound;
  out.Lambda = keep_L.cwiseProduct(z) / dt;
  for (Eigen::Index i = 0; i < q; ++i)
    if (p.fixed[i]) out.B(i) = out.Lambda(i) = 0.0;

  const SparseMatrix KN = with_identity_rows(p.mass + dt * p.stiff_N, p.fixed);
  Eigen::VectorXd rn = dt * p.load_N + p.mass * p.N_prev - dt * (p.uptake * out.B);
  for (Eigen::Index i = 0; i < q; ++i)
    if (p.fixed[i]) rn(i) = 0.0;
  out.N = ws.nutrient.solve(KN, rn);
  return out;
}

std::pair<SystemState, NewtonReport> semismooth_newton(const StepProblem& p,
                                                       const SystemState& initial,
                                                       const SolverOptions& options,
                                                       NewtonWorkspace* workspace) {
  NewtonWorkspace local;
  NewtonWorkspace& ws = workspace ? *workspace : local;
  const bool reduced = options.block_elimination && !p.implicit_reaction;
  const auto q = static_cast<Eigen::Index>(p.size());
  SystemState x = initial;
  x.t = p.t_new;
  NewtonReport report;
  std::vector<char> previous;

  for (int k = 0;; ++k) {
    const Eigen::VectorXd F = build_residual(p, x);
    const auto inactive = inactive_nodes(p, x);
    report.iterations = k;
    report.final_residual_maxnorm = F.lpNorm<Eigen::Infinity>();
    report.active_node_count = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!p.fixed[i] && !inactive[i]) ++report.active_node_count;

    if (!std::isfinite(report.final_residual_maxnorm))
      throw SolverError("non-finite residual in Newton iteration " + std::to_string(k),
                        report, k);
    if (k >= 1 && report.final_residual_maxnorm < options.tol && inactive == previous) {
      report.converged = true;
      return {x, report};
    }
    if (k >= options.max_iter) {
      std::ostringstream msg;
      msg << "Newton did not converge in " << options.max_iter
          << " iterations (residual " << report.final_residual_maxnorm << ")";
      throw SolverError(msg.str(), report, k);
    }

    try {
      if (reduced) {
        SystemState next = reduced_newton_iterate(p, x, ws);
        x.B = std::move(next.B);
        x.Lambda = std::move(next.Lambda);
        x.N = std::move(next.N);
      } else {
        const Eigen::VectorXd s = ws.full.solve(select_jacobian(p, x), -F);
        x.B += s.segment(0, q);
        x.Lambda += s.segment(q, q);
        x.N += s.segment(2 * q, q);
      }
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " in Newton iteration " +
                            std::to_string(k),
                        report, k);
    }
    previous = inactive;
  }
}

SystemState unconstrained_step(const StepProblem& p) {
  if (p.implicit_reaction)
    throw std::invalid_argument("unconstrained_step supports time-lagged coupling only");
  const double dt = p.dt;
  const auto q = static_cast<Eigen::Index>(p.size());

  const SparseMatrix KB = with_identity_rows(p.mass + dt * p.stiff_B - dt * p.growth, p.fixed);
  Eigen::VectorXd rb = dt * p.load_B + p.mass * p.B_prev;
  for (Eigen::Index i = 0; i < q; ++i)
    if (p.fixed[i]) rb(i) = 0.0;

  SystemState out;
  out.t = p.t_new;
  out.B = linear_solve(KB, rb);
  out.Lambda = NodalField::Zero(q);

  const SparseMatrix KN = with_identity_rows(p.mass + dt * p.stiff_N, p.fixed);
  Eigen::VectorXd rn = dt * p.load_N + p.mass * p.N_prev - dt * (p.uptake * out.B);
  for (Eigen::Index i = 0; i < q; ++i)
    if (p.fixed[i]) rn(i) = 0.0;
  out.N = linear_solve(KN, rn);
  return out;
}

StepBuilder::StepBuilder(const SimplicialMesh& mesh, const ModelSpec& model,
                         bool lump_mass, const SolverOptions& options)
    : mesh_(&mesh), model_(&model), lump_(lump_mass), options_(options), assembler_(mesh) {
  consistent_mass_ = assembler_.mass();
  mass_ = lump_ ? lumped(consistent_mass_) : consistent_mass_;
  if (model.diffusivity_B.is_constant() || !model.nutrient_enabled ||
      model.diffusivity_N.is_constant()) {
    const SparseMatrix unit = assembler_.stiffness();
    if (model.diffusivity_B.is_constant())
      const_stiff_B_ = model.diffusivity_B(0.0) * unit;
    if (!model.nutrient_enabled)
      const_stiff_N_ = 0.0 * unit;
    else if (model.diffusivity_N.is_constant())
      const_stiff_N_ = model.diffusivity_N(0.0) * unit;
  }
  fixed_.assign(mesh.num_vertices(), 0);
  if (model.bc == BoundaryCondition::DirichletZero)
    for (int v : mesh.boundary_vertices()) fixed_[v] = 1;
}

SparseMatrix StepBuilder::reaction_matrix(const NodalField& N, bool growth) const {
  const NodalField* fields[] = {&N};
  const ModelSpec& m = *model_;
  SparseMatrix r = assembler_.weighted_mass(
      fields, [&m, growth](const Point& x, std::span<const double> v) {
        return growth ? m.growth_rate(x, v[0]) : m.uptake_rate(x, v[0]);
      });
  return lump_ ? lumped(r) : r;
}

StepProblem StepBuilder::build(const SystemState& prev, double dt) const {
  const ModelSpec& m = *model_;
  const auto q = static_cast<Eigen::Index>(mesh_->num_vertices());
  if (prev.B.size() != q || prev.N.size() != q)
    throw std::invalid_argument("state does not match the mesh");

  StepProblem p;
  p.dt = dt;
  p.t_new = prev.t + dt;
  p.bounds = m.bounds;
  p.fixed = fixed_;
  p.mass = mass_;
  p.B_prev = prev.B;
  p.N_prev = prev.N;

  last_clamp_count_ = 0;
  for (Eigen::Index i = 0; i < q; ++i)
    if (prev.N(i) < 0) ++last_clamp_count_;

  const auto law_B = m.diffusivity_B;
  const auto law_N = m.diffusivity_N;
  p.stiff_B = const_stiff_B_ ? *const_stiff_B_
                             : assembler_.stiffness(prev.B, [&](double b) { return law_B(b); });
  p.stiff_N = const_stiff_N_ ? *const_stiff_N_
                             : assembler_.stiffness(prev.B, [&](double b) { return law_N(b); });

  p.load_B = assembler_.load(m.source_B, p.t_new);
  p.load_N = m.nutrient_enabled ? assembler_.load(m.source_N, p.t_new)
                                : Eigen::VectorXd::Zero(q);

  if (options_.mode == CouplingMode::TimeLagged) {
    p.growth = reaction_matrix(prev.N, true);
    p.uptake = reaction_matrix(prev.N, false);
  } else {
    const Assembler* as = &assembler_;
    const ModelSpec* model = model_;
    const bool lump = lump_;
    p.implicit_reaction = [as, model, lump](const NodalField& B, const NodalField& N) {
      const NodalField* fields[] = {&N, &B};
      auto assemble = [&](auto&& w) {
        SparseMatrix r = as->weighted_mass(fields, w);
        return lump ? lumped(r) : r;
      };
      ReactionLinearization lin;
      lin.growth = assemble([model](const Point& x, std::span<const double> v) {
        return model->growth_rate(x, v[0]);
      });
      lin.uptake = assemble([model](const Point& x, std::span<const double> v) {
        return model->uptake_rate(x, v[0]);
      });
      lin.growth_dN = assemble([model](const Point& x, std::span<const double> v) {
        return model->growth_rate_dN(x, v[0]) * v[1];
      });
      lin.uptake_dN = assemble([model](const Point& x, std::span<const double> v) {
        return model->uptake_rate_dN(x, v[0]) * v[1];
      });
      return lin;
    };
  }
  if (options_.scaled_complementarity) {
    const SparseMatrix K = p.mass + dt * p.stiff_B -
                           dt * (p.implicit_reaction ? reaction_matrix(prev.N, true) : p.growth);
    const Eigen::VectorXd m = consistent_mass_ * Eigen::VectorXd::Ones(q);
    p.complementarity_scale.resize(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      const double kii = K.coeff(i, i);
      p.complementarity_scale(i) = kii > 0 ? dt * m(i) / kii : 1.0;
    }
  }
  return p;
}

TimestepAdvice check_timestep_condition(const ModelSpec& model,
                                        const SimplicialMesh& mesh, double dt) {
  TimestepAdvice a;
  a.gamma = std::min(model.diffusivity_B.min_value(), model.diffusivity_N.min_value());
  a.lipschitz = std::max(model.monod.kappa_B, model.monod.kappa_N);
  if (model.spatial_growth)
    for (const Point& x : mesh.vertices())
      a.lipschitz = std::max(a.lipschitz, std::abs(model.spatial_growth(x)));
  a.poincare = mesh.diameter() / M_PI;
  const double c2 = a.poincare * a.poincare;
  const double denom = 2.0 * a.lipschitz * c2 - a.gamma;
  a.diffusion_dominated = a.gamma > 2.0 * a.lipschitz * c2;
  a.dt_bound = denom > 0.0 ? c2 / denom : std::numeric_limits<double>::infinity();
  a.dt_ok = dt < a.dt_bound;
  std::ostringstream msg;
  if (a.diffusion_dominated)
    msg << "diffusion dominates reactions (gamma = " << a.gamma
        << "); any time step gives a unique step solution";
  else if (a.dt_ok)
    msg << "dt = " << dt << " is below the uniqueness bound " << a.dt_bound;
  else
    msg << "dt = " << dt << " exceeds the uniqueness bound " << a.dt_bound
        << "; the discrete step may have several solutions";
  a.message = msg.str();
  return a;
}

}  // namespace pvi

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pvi/oracle.hpp"
#include "pvi/solver.hpp"

namespace pvi::oracle {

Comparison compare_with_newton(const Instance& in, bool inject_fault) {
  const Solution ref = solve_by_enumeration(in);

  const SimplicialMesh mesh = generate_interval(0.0, 1.0, in.cells);
  ModelSpec model;
  model.name = "oracle instance";
  model.diffusivity_B = DiffusivityLaw::constant(in.D_B);
  model.diffusivity_N = DiffusivityLaw::constant(in.D_N);
  model.monod = {in.kappa_B, in.kappa_N, in.half_saturation};
  model.bounds.upper = in.B_star;
  const double fB = in.f_B, fN = in.f_N;
  model.source_B = [fB](const Point&, double) { return fB; };
  model.source_N = [fN](const Point&, double) { return fN; };
  model.bc = BoundaryCondition::DirichletZero;

  const auto q = static_cast<Eigen::Index>(mesh.num_vertices());
  SystemState prev;
  prev.B = Eigen::Map<const Eigen::VectorXd>(in.B_prev.data(), q);
  prev.N = Eigen::Map<const Eigen::VectorXd>(in.N_prev.data(), q);
  prev.Lambda = NodalField::Zero(q);

  const StepBuilder builder(mesh, model);
  const StepProblem problem = builder.build(prev, in.dt);
  auto [x, report] = semismooth_newton(problem, prev, SolverOptions{});
  if (inject_fault) x.Lambda = -x.Lambda;

  Comparison c;
  c.active_nodes = report.active_node_count;
  for (Eigen::Index i = 0; i < q; ++i) {
    c.max_diff_B = std::max(c.max_diff_B, std::abs(x.B(i) - ref.B[i]));
    c.max_diff_Lambda = std::max(c.max_diff_Lambda, std::abs(x.Lambda(i) - ref.Lambda[i]));
    c.max_diff_N = std::max(c.max_diff_N, std::abs(x.N(i) - ref.N[i]));
  }
  c.agree = c.max_diff_B <= 1e-8 && c.max_diff_Lambda <= 1e-8 && c.max_diff_N <= 1e-8;
  std::ostringstream msg;
  msg << (c.agree ? "agree" : "DISAGREE") << " active=" << c.active_nodes
      << " |dB|=" << c.max_diff_B << " |dLambda|=" << c.max_diff_Lambda
      << " |dN|=" << c.max_diff_N;
  c.message = msg.str();
  return c;
}

}  // namespace pvi::oracle

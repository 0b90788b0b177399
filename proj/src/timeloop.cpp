#include "pvi/timeloop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pvi {

const Capture* Trajectory::at(double t) const {
  for (const Capture& c : captures)
    if (std::abs(c.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return &c;
  return nullptr;
}

StepPlan plan_steps(double dt, double final_time, const std::vector<double>& samples) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ConfigError("time step must be positive and finite");
  if (!(final_time >= 0.0) || !std::isfinite(final_time))
    throw ConfigError("final time must be non-negative and finite");
  const double tol = 1e-12 * std::max(final_time, dt);
  StepPlan plan;
  plan.steps = static_cast<int>(std::llround(final_time / dt));
  if (std::abs(plan.steps * dt - final_time) > 1e-9 * std::max(final_time, dt)) {
    std::ostringstream msg;
    msg << "final time " << final_time << " is not a multiple of dt = " << dt;
    throw ConfigError(msg.str());
  }
  for (double s : samples) {
    const auto n = std::llround(s / dt);
    if (s < -tol || s > final_time + tol || std::abs(n * dt - s) > tol) {
      std::ostringstream msg;
      msg << "sample time " << s << " does not coincide with a time step (dt = " << dt
          << ", T = " << final_time << ")";
      throw ConfigError(msg.str());
    }
    plan.sample_steps.push_back(static_cast<int>(n));
  }
  std::sort(plan.sample_steps.begin(), plan.sample_steps.end());
  plan.sample_steps.erase(std::unique(plan.sample_steps.begin(), plan.sample_steps.end()),
                          plan.sample_steps.end());
  return plan;
}

SystemState initialize(const ModelSpec& model, const SimplicialMesh& mesh) {
  if (!model.initial_B || !model.initial_N)
    throw ModelError("model '" + model.name + "' has no initial data");
  SystemState s;
  s.B = nodal_interpolate(mesh, std::function<double(const Point&, int)>(model.initial_B));
  s.N = nodal_interpolate(mesh, std::function<double(const Point&, int)>(model.initial_N));
  s.Lambda = NodalField::Zero(s.B.size());
  const double slack = 1e-14 * std::max(1.0, std::abs(model.bounds.upper));
  for (Eigen::Index i = 0; i < s.B.size(); ++i) {
    if (s.B(i) > model.bounds.upper + slack || s.B(i) < model.bounds.lower - slack) {
      const Point& x = mesh.vertex(static_cast<std::size_t>(i));
      std::ostringstream msg;
      msg << "initial biofilm density " << s.B(i) << " at node " << i << " ("
          << x[0] << ", " << x[1] << ", " << x[2] << ") violates the bounds ["
          << model.bounds.lower << ", " << model.bounds.upper << "]";
      throw ModelError(msg.str());
    }
  }
  return s;
}

double total_biomass(const SimplicialMesh& mesh, const NodalField& B) {
  const auto vol = mesh.cell_volumes();
  const int nloc = mesh.dim() + 1;
  double sum = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    double s = 0.0;
    for (int k = 0; k < nloc; ++k) s += B(mesh.cell(c)[k]);
    sum += vol[c] * s / nloc;
  }
  return sum;
}

std::vector<char> active_nodes(const Bounds& bounds, const std::vector<char>& fixed,
                               const SystemState& state) {
  std::vector<char> out(fixed.size(), 0);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (fixed[i]) continue;
    const double psi = state.B(i) - state.Lambda(i);
    out[i] = (psi >= bounds.upper || psi <= bounds.lower) ? 1 : 0;
  }
  return out;
}

std::vector<char> active_cells(const SimplicialMesh& mesh, const std::vector<char>& nodes) {
  std::vector<char> out(mesh.num_cells(), 0);
  const int nloc = mesh.dim() + 1;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int k = 0; k < nloc; ++k)
      if (nodes[mesh.cell(c)[k]]) out[c] = 1;
  return out;
}

double activity_measure(const SimplicialMesh& mesh, const std::vector<char>& before,
                        const std::vector<char>& after) {
  const auto a = active_cells(mesh, before);
  const auto b = active_cells(mesh, after);
  const auto vol = mesh.cell_volumes();
  double m = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c)
    if (a[c] != b[c]) m += vol[c];
  return m;
}

ActivitySummary free_boundary_activity(const Trajectory& trajectory) {
  ActivitySummary s;
  for (const StepRecord& r : trajectory.series) s.running_sum.push_back(r.dn_sum);
  if (s.running_sum.empty()) return s;
  s.total = s.running_sum.back();
  const std::size_t n = s.running_sum.size() - 1;
  const std::size_t q = n - n / 4;
  s.plateaued = s.total - s.running_sum[q] <= 0.1 * s.total;
  return s;
}

namespace {

bool all_finite(const SystemState& s) {
  return s.B.allFinite() && s.N.allFinite() && s.Lambda.allFinite();
}

}  // namespace

Trajectory run(const ModelSpec& model, const SimplicialMesh& mesh, const RunConfig& config,
               const StepCallback& on_step, const StateCallback& on_state) {
  const StepPlan plan = plan_steps(config.dt, config.final_time, config.sample_times);
  Trajectory traj;
  traj.warnings = model.validate();
  const TimestepAdvice advice = check_timestep_condition(model, mesh, config.dt);
  if (!advice.diffusion_dominated && !advice.dt_ok) traj.warnings.push_back(advice.message);

  SystemState state = initialize(model, mesh);
  const StepBuilder builder(mesh, model, config.lump_mass, config.solver);
  NewtonWorkspace workspace;
  auto next_sample = plan.sample_steps.begin();
  auto capture = [&](int step) {
    if (next_sample != plan.sample_steps.end() && *next_sample == step) {
      traj.captures.push_back({step, state.t, state.B, state.Lambda, state.N});
      ++next_sample;
    }
  };

  std::vector<char> active = active_nodes(model.bounds, builder.fixed_nodes(), state);
  StepRecord rec;
  rec.total_B = total_biomass(mesh, state.B);
  rec.total_N = total_biomass(mesh, state.N);
  rec.active_nodes = static_cast<int>(std::count(active.begin(), active.end(), 1));
  traj.series.push_back(rec);
  if (on_step) on_step(rec);
  if (on_state) on_state(rec, state);
  capture(0);

  for (int n = 1; n <= plan.steps; ++n) {
    const StepProblem problem = builder.build(state, config.dt);
    NewtonReport report;
    try {
      auto [next, rep] = semismooth_newton(problem, state, config.solver, &workspace);
      report = rep;
      next.t = n * config.dt;
      state = std::move(next);
    } catch (const SolverError& e) {
      traj.final_state = state;
      std::ostringstream msg;
      msg << "step " << n << " (t = " << n * config.dt << ") failed: " << e.what();
      throw RunFailure(msg.str(), std::move(traj), n);
    }
    if (!all_finite(state)) {
      std::ostringstream msg;
      msg << "non-finite values at step " << n << " (t = " << state.t << ")";
      throw RunFailure(msg.str(), std::move(traj), n);
    }
    const auto now = active_nodes(model.bounds, builder.fixed_nodes(), state);
    rec.step = n;
    rec.t = state.t;
    rec.total_B = total_biomass(mesh, state.B);
    rec.total_N = total_biomass(mesh, state.N);
    rec.active_nodes = static_cast<int>(std::count(now.begin(), now.end(), 1));
    rec.newton_iters = report.iterations;
    rec.residual = report.final_residual_maxnorm;
    rec.clamp_count = builder.last_clamp_count();
    rec.dn_sum += activity_measure(mesh, active, now);
    active = now;
    traj.series.push_back(rec);
    if (on_step) on_step(rec);
    if (on_state) on_state(rec, state);
    capture(n);
  }
  traj.final_state = state;
  return traj;
}

}  // namespace pvi

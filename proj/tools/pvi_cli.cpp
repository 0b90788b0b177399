#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "pvi/analysis.hpp"
#include "pvi/io.hpp"
#include "pvi/oracle.hpp"
#include "pvi/timeloop.hpp"

namespace {

struct RunOverrides {
  std::string config_file;
  std::string mesh;
  std::optional<double> dt, final_time, tol;
  std::optional<int> max_iter;
  std::vector<double> samples;
  std::string mode;
  bool lump = false;
};

void add_overrides(CLI::App* cmd, RunOverrides& o) {
  cmd->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--mesh", o.mesh,
                  "'interval a b n', 'rectangle x0 x1 y0 y1 m' or 'file PATH'");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--T", o.final_time, "final time");
  cmd->add_option("--samples", o.samples, "capture times")->delimiter(',');
  cmd->add_option("--tol", o.tol, "Newton tolerance on the residual max-norm");
  cmd->add_option("--max-iter", o.max_iter, "Newton iteration limit");
  cmd->add_option("--mode", o.mode, "coupling: lagged or implicit")
      ->check(CLI::IsMember({"lagged", "implicit"}));
  cmd->add_flag("--lump", o.lump, "lump the mass matrix");
}

pvi::Experiment resolve(const std::string& name, const RunOverrides& o) {
  std::string experiment = name;
  std::optional<pvi::RunConfig> from_file;
  if (!o.config_file.empty()) {
    const pvi::ConfigFile cfg = pvi::load_config(o.config_file);
    if (experiment.empty()) experiment = cfg.experiment;
    if (experiment != cfg.experiment)
      throw pvi::ConfigError("config file is for '" + cfg.experiment + "', not '" +
                             experiment + "'");
    from_file = cfg.run;
  }
  if (experiment.empty()) throw pvi::ConfigError("no experiment given");
  pvi::Experiment ex = pvi::builtin_experiment(experiment);
  if (from_file) ex.run = *from_file;
  pvi::RunConfig& r = ex.run;
  if (!o.mesh.empty()) r.mesh = pvi::MeshSource::parse(o.mesh);
  if (o.dt) r.dt = *o.dt;
  if (o.final_time) {
    r.final_time = *o.final_time;
    std::erase_if(r.sample_times, [&](double t) { return t > r.final_time * (1 + 1e-12); });
  }
  if (!o.samples.empty()) r.sample_times = o.samples;
  if (o.tol) r.solver.tol = *o.tol;
  if (o.max_iter) r.solver.max_iter = *o.max_iter;
  if (o.mode == "implicit") r.solver.mode = pvi::CouplingMode::FullyImplicit;
  if (o.mode == "lagged") r.solver.mode = pvi::CouplingMode::TimeLagged;
  if (o.lump) r.lump_mass = true;
  return ex;
}

std::string capture_name(const pvi::Capture& c) {
  std::ostringstream s;
  s << "state_" << std::setw(6) << std::setfill('0') << c.step << ".vtk";
  return s.str();
}

void write_outputs(const std::filesystem::path& out, const pvi::SimplicialMesh& mesh,
                   const pvi::Trajectory& traj) {
  pvi::write_series_csv(out / "series.csv", traj);
  for (const pvi::Capture& c : traj.captures) pvi::write_vtk(out / capture_name(c), mesh, c);
}

int cmd_run(const std::string& name, const RunOverrides& o, const std::string& out,
            bool quiet) {
  const pvi::Experiment ex = resolve(name, o);
  const pvi::SimplicialMesh mesh = ex.run.mesh.build();
  std::cout << ex.model.name << ": " << ex.run.mesh.describe() << " (" << mesh.num_vertices()
            << " vertices), dt = " << ex.run.dt << ", T = " << ex.run.final_time << "\n";
  const auto start = std::chrono::steady_clock::now();
  pvi::StepCallback report;
  if (!quiet)
    report = [](const pvi::StepRecord& r) {
      if (r.step % 50 == 0)
        std::cout << "  step " << r.step << " t = " << r.t << " total_B = " << r.total_B
                  << " active = " << r.active_nodes << " newton = " << r.newton_iters
                  << "\n";
    };
  try {
    const pvi::Trajectory traj = pvi::run(ex.model, mesh, ex.run, report);
    for (const auto& w : traj.warnings) std::cerr << "warning: " << w << "\n";
    write_outputs(out, mesh, traj);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const pvi::StepRecord& last = traj.series.back();
    std::cout << "done in " << secs << " s: total_B = " << last.total_B
              << ", total_N = " << last.total_N << ", active nodes = " << last.active_nodes
              << ", free-boundary activity = " << last.dn_sum << "\n";
    std::cout << "wrote " << (std::filesystem::path(out) / "series.csv").string() << " and "
              << traj.captures.size() << " VTK file(s)\n";
    return 0;
  } catch (const pvi::RunFailure& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    write_outputs(out, mesh, e.partial());
    std::cerr << "partial results written to " << out << "\n";
    return 1;
  }
}

int cmd_converge(const std::string& name, int levels, const std::string& out) {
  const pvi::Experiment ex = pvi::builtin_experiment(name);
  if (!ex.study) throw pvi::ConfigError("experiment '" + name + "' has no study plan");
  std::cout << ex.model.name << ": " << (levels < 0 ? ex.study->levels.size()
                                                    : static_cast<std::size_t>(levels))
            << " levels against " << ex.study->fine.mesh.describe() << ", "
            << pvi::worker_count() << " worker(s)\n";
  const pvi::ConvergenceTable table = pvi::convergence_study(
      ex.model, *ex.study, ex.run.solver, ex.run.lump_mass, levels,
      [](const std::string& m) { std::cout << "  " << m << "\n"; });
  const std::string csv = table.to_csv();
  pvi::write_text(std::filesystem::path(out) / "convergence.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_oracle(int instances, unsigned seed, bool inject_fault) {
  std::mt19937_64 rng(seed);
  int failures = 0, with_active = 0;
  for (int k = 0; k < instances; ++k) {
    const pvi::oracle::Instance in = pvi::oracle::random_instance(rng);
    const pvi::oracle::Comparison c = pvi::oracle::compare_with_newton(in, inject_fault);
    if (!c.agree) ++failures;
    if (c.active_nodes > 0) ++with_active;
    std::cout << "instance " << k << ": " << c.message << "  [" << in.describe() << "]\n";
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << ": " << instances - failures << "/"
            << instances << " instances agree (" << with_active
            << " with active nodes)\n";
  return failures == 0 ? 0 : 1;
}

int cmd_advise(const std::string& name, const RunOverrides& o) {
  const pvi::Experiment ex = resolve(name, o);
  const pvi::SimplicialMesh mesh = ex.run.mesh.build();
  const pvi::TimestepAdvice a = pvi::check_timestep_condition(ex.model, mesh, ex.run.dt);
  std::cout << "gamma = " << a.gamma << ", L = " << a.lipschitz << ", C_PF = " << a.poincare
            << "\n" << a.message << "\n";
  for (const auto& w : ex.model.validate()) std::cout << "warning: " << w << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biofilm growth with a density constraint: P1 finite elements, "
               "backward Euler and semismooth Newton"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "list built-in experiments");

  std::string run_name, out = "out";
  bool quiet = false;
  RunOverrides run_o;
  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("experiment", run_name, "experiment name (see 'list')");
  run->add_option("--out", out, "output directory");
  run->add_flag("--quiet", quiet, "no progress output");
  add_overrides(run, run_o);

  std::string conv_name, conv_out = "out";
  int levels = -1;
  auto* conv = app.add_subcommand("converge", "convergence study against a fine run");
  conv->add_option("experiment", conv_name)->required();
  conv->add_option("--levels", levels, "number of coarse levels (default: all)");
  conv->add_option("--out", conv_out, "output directory");

  int instances = 20;
  unsigned seed = 1;
  bool fault = false;
  auto* oracle = app.add_subcommand(
      "oracle-check", "compare Newton steps with active-set enumeration on small 1D problems");
  oracle->add_option("--instances", instances)->check(CLI::PositiveNumber);
  oracle->add_option("--seed", seed);
  oracle->add_flag("--inject-fault", fault, "negate the Newton multiplier before comparing");

  std::string adv_name;
  RunOverrides adv_o;
  auto* advise = app.add_subcommand("advise", "time step solvability check");
  advise->add_option("experiment", adv_name);
  add_overrides(advise, adv_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& n : pvi::experiment_names())
        std::cout << std::left << std::setw(13) << n << pvi::builtin_experiment(n).description
                  << "\n";
      return 0;
    }
    if (*run) return cmd_run(run_name, run_o, out, quiet);
    if (*conv) return cmd_converge(conv_name, levels, conv_out);
    if (*oracle) return cmd_oracle(instances, seed, fault);
    if (*advise) return cmd_advise(adv_name, adv_o);
  } catch (const pvi::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const pvi::ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 2;
  } catch (const pvi::MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

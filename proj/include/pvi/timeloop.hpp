#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvi/config.hpp"
#include "pvi/model.hpp"
#include "pvi/solver.hpp"

namespace pvi {

/// Diagnostics of one time level (step 0 is the initial state).
struct StepRecord {
  int step = 0;
  double t = 0.0;
  double total_B = 0.0;
  double total_N = 0.0;
  int active_nodes = 0;
  int newton_iters = 0;
  double residual = 0.0;
  int clamp_count = 0;  // negative N values clamped when building the step
  double dn_sum = 0.0;  // running sum of the free-boundary activity measure
};

struct Capture {
  int step = 0;
  double t = 0.0;
  NodalField B, Lambda, N;
};

struct Trajectory {
  std::vector<StepRecord> series;
  std::vector<Capture> captures;
  SystemState final_state;
  std::vector<std::string> warnings;

  /// Capture at time t (within 1e-9 relative), or nullptr.
  const Capture* at(double t) const;
};

class RunFailure : public std::runtime_error {
 public:
  RunFailure(const std::string& what, Trajectory partial, int step)
      : std::runtime_error(what), partial_(std::move(partial)), step_(step) {}
  const Trajectory& partial() const { return partial_; }
  int step() const { return step_; }

 private:
  Trajectory partial_;
  int step_;
};

/// Step count and the step index of each sample time. Throws ConfigError
/// when dt or T are invalid or a sample does not coincide with a step.
struct StepPlan {
  int steps = 0;
  std::vector<int> sample_steps;
};
StepPlan plan_steps(double dt, double final_time, const std::vector<double>& samples);

/// Interpolated initial data with Lambda = 0. Throws ModelError naming the
/// first node where B leaves the bounds.
SystemState initialize(const ModelSpec& model, const SimplicialMesh& mesh);

using StepCallback = std::function<void(const StepRecord&)>;
/// Sees every accepted state, including the initial one.
using StateCallback = std::function<void(const StepRecord&, const SystemState&)>;

/// Backward-Euler time loop. Throws RunFailure, carrying everything computed
/// so far, when a step fails or produces non-finite values.
Trajectory run(const ModelSpec& model, const SimplicialMesh& mesh,
               const RunConfig& config, const StepCallback& on_step = {},
               const StateCallback& on_state = {});

/// Integral of the P1 field over the domain.
double total_biomass(const SimplicialMesh& mesh, const NodalField& B);

/// Nodes (outside `fixed`) where B - Lambda is on or beyond a bound.
std::vector<char> active_nodes(const Bounds& bounds, const std::vector<char>& fixed,
                               const SystemState& state);

/// A cell is active when any of its vertices is active.
std::vector<char> active_cells(const SimplicialMesh& mesh, const std::vector<char>& nodes);

/// Total volume of cells whose classification differs between two node sets.
double activity_measure(const SimplicialMesh& mesh, const std::vector<char>& before,
                        const std::vector<char>& after);

struct ActivitySummary {
  std::vector<double> running_sum;
  double total = 0.0;
  /// The last quarter of the steps adds less than 10% of the total.
  bool plateaued = false;
};
ActivitySummary free_boundary_activity(const Trajectory& trajectory);

}  // namespace pvi

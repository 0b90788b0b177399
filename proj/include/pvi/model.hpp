#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pvi/config.hpp"
#include "pvi/mesh.hpp"

namespace pvi {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monod kinetics: F = kappa_B P(N) B, G = -kappa_N P(N) B.
struct MonodSpec {
  double kappa_B = 0.0;        // growth, 1/s
  double kappa_N = 0.0;        // utilization, 1/s
  double half_saturation = 1;  // N_0

  void validate() const;
};

/// N / (N + N0). Negative N is treated as zero.
double monod_P(double N, double N0);
/// dP/dN = N0 / (N + N0)^2 for N > 0, and 0 on the clamped branch.
double monod_P_derivative(double N, double N0);
double reaction_F(double B, double N, const MonodSpec& monod);
double reaction_G(double B, double N, const MonodSpec& monod);

/// Biofilm or nutrient diffusivity as a function of the biofilm density.
class DiffusivityLaw {
 public:
  enum class Kind { Constant, LinearInB, PowerInB };

  static DiffusivityLaw constant(double value);
  /// (d_max - d_min) (B / B*) + d_min
  static DiffusivityLaw linear_in_B(double d_max, double d_min, double b_star);
  /// (d_max - d_min) (B / B*)^exponent + d_min
  static DiffusivityLaw power_in_B(double d_max, double d_min, double b_star,
                                   double exponent);

  /// B is clamped into [0, B*] before evaluation.
  double operator()(double B) const;

  Kind kind() const { return kind_; }
  double min_value() const { return d_min_; }
  double max_value() const { return d_max_; }
  bool is_constant() const { return kind_ == Kind::Constant; }

 private:
  Kind kind_ = Kind::Constant;
  double d_max_ = 1.0;
  double d_min_ = 1.0;
  double b_star_ = 1.0;
  double exponent_ = 1.0;
};

enum class BoundaryCondition { DirichletZero, NeumannZero };

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

using SpatialFn = std::function<double(const Point&)>;
using SpaceTimeFn = std::function<double(const Point&, double)>;
/// Initial data may read the vertex tag (subdomain labels from mesh files).
using InitialFn = std::function<double(const Point&, int)>;

/// Continuous model data for one experiment.
struct ModelSpec {
  std::string name;
  DiffusivityLaw diffusivity_B = DiffusivityLaw::constant(1.0);
  DiffusivityLaw diffusivity_N = DiffusivityLaw::constant(1.0);
  MonodSpec monod;
  /// When set, the biofilm reaction is spatial_growth(x) * B instead of the
  /// Monod growth term.
  SpatialFn spatial_growth;
  /// false freezes N: no uptake and no nutrient source, so N stays at its
  /// initial value (used for scalar problems).
  bool nutrient_enabled = true;
  Bounds bounds;
  SpaceTimeFn source_B;  // empty means zero
  SpaceTimeFn source_N;
  BoundaryCondition bc = BoundaryCondition::DirichletZero;
  InitialFn initial_B;
  InitialFn initial_N;

  /// Coefficient r_B with F = r_B(x, N) B.
  double growth_rate(const Point& x, double N) const;
  double growth_rate_dN(const Point& x, double N) const;
  /// Coefficient r_N with G = -r_N(x, N) B.
  double uptake_rate(const Point& x, double N) const;
  double uptake_rate_dN(const Point& x, double N) const;

  /// Throws ModelError on inconsistent data. Returns warnings that do not
  /// block a run.
  std::vector<std::string> validate() const;
};

/// Value taken by an indicator function on the boundary of its set.
enum class EdgeValue { Closed, Open, Midpoint };

/// Indicator of the interval (a, b) in the first coordinate.
SpatialFn interval_indicator(double a, double b, EdgeValue edge = EdgeValue::Closed);
/// Indicator of the axis-aligned box (x0, x1) x (y0, y1); edge values multiply
/// per axis.
SpatialFn box_indicator(std::array<double, 2> xr, std::array<double, 2> yr,
                        EdgeValue edge = EdgeValue::Closed);
/// Indicator of the open disc of the given radius centered at the origin.
SpatialFn disc_indicator(double radius, EdgeValue edge = EdgeValue::Closed);

struct Experiment {
  ModelSpec model;
  RunConfig run;
  std::optional<StudyPlan> study;
  std::string description;
};

/// Stable identifiers: ex5_1, ex5_2_i .. ex5_2_iv, ex5_3, ex5_4, ex5_5, ex5_6,
/// appendix_A1, appendix_A2.
const std::vector<std::string>& experiment_names();
Experiment builtin_experiment(const std::string& name);

/// Model with no reactions, no sources, homogeneous Neumann conditions and no
/// constraint; B and N are only redistributed by diffusion.
ModelSpec pure_diffusion_model(DiffusivityLaw d_B, DiffusivityLaw d_N,
                               InitialFn B0, InitialFn N0);

}  // namespace pvi

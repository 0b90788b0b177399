#include "pvi/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pvi {

void MonodSpec::validate() const {
  if (!(half_saturation > 0))
    throw ModelError("Monod half-saturation constant must be positive");
  if (kappa_B < 0 || kappa_N < 0)
    throw ModelError("Monod rate constants must be nonnegative");
}

double monod_P(double N, double N0) {
  const double n = std::max(N, 0.0);
  return n / (n + N0);
}

double monod_P_derivative(double N, double N0) {
  if (N < 0) return 0.0;
  return N0 / ((N + N0) * (N + N0));
}

double reaction_F(double B, double N, const MonodSpec& m) {
  return m.kappa_B * monod_P(N, m.half_saturation) * B;
}

double reaction_G(double B, double N, const MonodSpec& m) {
  return -m.kappa_N * monod_P(N, m.half_saturation) * B;
}

DiffusivityLaw DiffusivityLaw::constant(double value) {
  if (!(value > 0)) throw ModelError("diffusivity must be positive");
  DiffusivityLaw d;
  d.kind_ = Kind::Constant;
  d.d_max_ = d.d_min_ = value;
  return d;
}

DiffusivityLaw DiffusivityLaw::linear_in_B(double d_max, double d_min,
                                           double b_star) {
  return power_in_B(d_max, d_min, b_star, 1.0);
}

DiffusivityLaw DiffusivityLaw::power_in_B(double d_max, double d_min,
                                          double b_star, double exponent) {
  if (!(d_min > 0) || !(d_max >= d_min))
    throw ModelError("diffusivity law needs 0 < d_min <= d_max");
  if (!(b_star > 0) || !std::isfinite(b_star))
    throw ModelError("diffusivity law needs a finite positive B*");
  if (!(exponent > 0)) throw ModelError("diffusivity exponent must be positive");
  DiffusivityLaw d;
  d.kind_ = exponent == 1.0 ? Kind::LinearInB : Kind::PowerInB;
  d.d_max_ = d_max;
  d.d_min_ = d_min;
  d.b_star_ = b_star;
  d.exponent_ = exponent;
  return d;
}

double DiffusivityLaw::operator()(double B) const {
  if (kind_ == Kind::Constant) return d_max_;
  const double s = std::clamp(B, 0.0, b_star_) / b_star_;
  const double w = kind_ == Kind::LinearInB ? s : std::pow(s, exponent_);
  return (d_max_ - d_min_) * w + d_min_;
}

double ModelSpec::growth_rate(const Point& x, double N) const {
  if (spatial_growth) return spatial_growth(x);
  return monod.kappa_B * monod_P(N, monod.half_saturation);
}

double ModelSpec::growth_rate_dN(const Point&, double N) const {
  if (spatial_growth) return 0.0;
  return monod.kappa_B * monod_P_derivative(N, monod.half_saturation);
}

double ModelSpec::uptake_rate(const Point&, double N) const {
  if (!nutrient_enabled) return 0.0;
  return monod.kappa_N * monod_P(N, monod.half_saturation);
}

double ModelSpec::uptake_rate_dN(const Point&, double N) const {
  if (!nutrient_enabled) return 0.0;
  return monod.kappa_N * monod_P_derivative(N, monod.half_saturation);
}

std::vector<std::string> ModelSpec::validate() const {
  std::vector<std::string> warnings;
  monod.validate();
  if (!(bounds.lower < bounds.upper))
    throw ModelError("lower bound must be below the upper bound");
  if (!initial_B || !initial_N) throw ModelError("initial data missing");
  if (!spatial_growth && nutrient_enabled && monod.kappa_B < monod.kappa_N)
    warnings.push_back("kappa_B < kappa_N; Monod kinetics usually take kappa_B >= kappa_N");
  return warnings;
}

namespace {

double edge_weight(EdgeValue e) {
  switch (e) {
    case EdgeValue::Closed:
      return 1.0;
    case EdgeValue::Open:
      return 0.0;
    case EdgeValue::Midpoint:
      return 0.5;
  }
  return 1.0;
}

constexpr double kEdgeTol = 1e-12;

double interval_value(double x, double a, double b, double on_edge) {
  if (std::abs(x - a) <= kEdgeTol || std::abs(x - b) <= kEdgeTol) return on_edge;
  return (x > a && x < b) ? 1.0 : 0.0;
}

InitialFn ignore_tag(SpatialFn f) {
  return [f = std::move(f)](const Point& x, int) { return f(x); };
}

InitialFn constant_fn(double c) {
  return [c](const Point&, int) { return c; };
}

// Indicator data in the builtin experiments take the mean value on the set
// boundary. On meshes with vertices on the jump this keeps the integral of
// the nodal interpolant exact.
constexpr EdgeValue kDataEdge = EdgeValue::Midpoint;

ModelSpec ex5_1_model() {
  ModelSpec m;
  m.name = "ex5_1";
  m.diffusivity_B = DiffusivityLaw::constant(0.5);
  m.diffusivity_N = DiffusivityLaw::constant(0.1);
  m.monod = {2500.0, 100.0, 0.7};
  m.bounds.upper = 0.02;
  m.bc = BoundaryCondition::DirichletZero;
  m.initial_B = [](const Point& x, int) {
    return 0.01 * std::abs(std::sin(std::numbers::pi * x[0]));
  };
  auto chi = interval_indicator(0.25, 0.75, kDataEdge);
  m.initial_N = [chi](const Point& x, int) { return 0.02 * chi(x); };
  return m;
}

Experiment ex5_1() {
  Experiment e;
  e.model = ex5_1_model();
  e.description = "1D coupled system, Dirichlet, constant diffusivities, B* = 0.02";
  e.run.mesh = MeshSource::interval(0.0, 1.0, 50);
  e.run.dt = 0.005;
  e.run.final_time = 0.1;
  e.run.sample_times = {0.05, 0.1};
  StudyPlan s;
  for (int n : {100, 200, 400})
    s.levels.push_back({MeshSource::interval(0, 1, n), 1.0 / n, 1.0 / n});
  s.fine = {MeshSource::interval(0, 1, 1200), 1.0 / 1200, 1e-4};
  s.sample_times = {0.05, 0.1};
  e.study = s;
  return e;
}

Experiment ex5_2(const std::string& variant) {
  Experiment e;
  ModelSpec& m = e.model;
  m.name = "ex5_2_" + variant;
  const double b_star = 0.03, d_max = 0.1, d_min = 0.001;
  if (variant == "i")
    m.diffusivity_B = DiffusivityLaw::constant(0.1);
  else if (variant == "ii")
    m.diffusivity_B = DiffusivityLaw::constant(0.001);
  else if (variant == "iii")
    m.diffusivity_B = DiffusivityLaw::linear_in_B(d_max, d_min, b_star);
  else
    m.diffusivity_B = DiffusivityLaw::power_in_B(d_max, d_min, b_star, 8.0);
  m.diffusivity_N = DiffusivityLaw::constant(0.5);
  m.monod = {10.0, 5.0, 0.007};
  m.bounds.upper = b_star;
  m.bc = BoundaryCondition::NeumannZero;
  // The initial colony must respect B <= B*; it starts below the bound.
  auto chi = interval_indicator(0.4, 0.6, kDataEdge);
  m.initial_B = [chi](const Point& x, int) { return 0.02 * chi(x); };
  m.initial_N = constant_fn(1.0);
  e.description = "1D growth in an isolated system, diffusivity variant (" +
                  variant + ")";
  e.run.mesh = MeshSource::interval(0.0, 1.0, 100);
  e.run.dt = variant == "i" ? 0.002 : 0.0002;
  e.run.final_time = 0.3;
  e.run.sample_times = {0.05, 0.1, 0.2, 0.3};
  return e;
}

ModelSpec square_model(bool neumann) {
  ModelSpec m;
  m.diffusivity_B = DiffusivityLaw::constant(0.01);
  m.diffusivity_N = DiffusivityLaw::constant(0.5);
  m.monod = {5.0, 0.5, 0.7};
  m.bounds.upper = 0.3;
  if (!neumann) {
    m.name = "ex5_3";
    m.bc = BoundaryCondition::DirichletZero;
    auto b = disc_indicator(0.5, kDataEdge);
    auto n = disc_indicator(0.75, kDataEdge);
    m.initial_B = [b](const Point& x, int) { return 0.2 * b(x); };
    m.initial_N = ignore_tag(n);
  } else {
    m.name = "ex5_4";
    m.bc = BoundaryCondition::NeumannZero;
    auto b = box_indicator({-0.75, 0.0}, {-0.5, 0.5}, kDataEdge);
    m.initial_B = [b](const Point& x, int) { return 0.3 * b(x); };
    m.initial_N = constant_fn(1.0);
  }
  return m;
}

Experiment square(bool neumann) {
  Experiment e;
  e.model = square_model(neumann);
  e.description = neumann ? "2D square, Neumann, abundant nutrient"
                          : "2D square, Dirichlet, disc initial data";
  e.run.mesh = MeshSource::rectangle({-1, 1}, {-1, 1}, 20);
  e.run.dt = 0.004;
  e.run.final_time = 1.2;
  e.run.sample_times = {0.1, 0.2, 0.3, 0.6, 1.2};
  // Mesh size is the longest edge, the cell diagonal: about 0.14, 0.1 and
  // 0.05, all nested in m = 280. The coarsest step is the divisor of 0.1
  // closest to 0.006.
  const auto diagonal = [](int m) { return std::sqrt(2.0) * rectangle_axis_spacing({-1, 1}, m); };
  StudyPlan s;
  const std::pair<int, double> levels[] = {{20, 0.1 / 17}, {28, 0.004}, {56, 0.002}};
  for (const auto& [m, dt] : levels)
    s.levels.push_back({MeshSource::rectangle({-1, 1}, {-1, 1}, m), diagonal(m), dt});
  s.fine = {MeshSource::rectangle({-1, 1}, {-1, 1}, 280), diagonal(280), 5e-5};
  s.sample_times = {0.1, 0.2, 0.3};
  e.study = s;
  return e;
}

ModelSpec porescale_model(const std::string& name) {
  ModelSpec m;
  m.name = name;
  const double b_star = 0.12, d_star = 0.01;
  m.bounds.upper = b_star;
  m.monod = {1.8, 18.0, 0.16};
  m.diffusivity_N = DiffusivityLaw::constant(20.0);
  m.diffusivity_B = DiffusivityLaw::linear_in_B(d_star, 1e-4 * d_star, b_star);
  m.bc = BoundaryCondition::NeumannZero;
  m.initial_N = constant_fn(1.0);
  // Vertex tag 1 marks the initial biofilm region next to the grains.
  m.initial_B = [](const Point&, int tag) { return tag == 1 ? 0.03 : 0.0; };
  return m;
}

Experiment porescale(bool three_d) {
  Experiment e;
  e.model = porescale_model(three_d ? "ex5_6" : "ex5_5");
  e.description = three_d ? "3D ball with two grains, pore-scale kinetics"
                          : "2D pore-scale geometry with four grains";
  e.run.mesh = MeshSource::file(data_directory() /
                                (three_d ? "ball_two_holes_3d.msh"
                                         : "porescale_2d.msh"));
  e.run.dt = 0.01;
  e.run.final_time = 2.0;
  e.run.sample_times = {0.5, 1.0, 1.5, 2.0};
  return e;
}

Experiment appendix_a1() {
  Experiment e;
  ModelSpec& m = e.model;
  m.name = "appendix_A1";
  m.diffusivity_B = DiffusivityLaw::constant(0.5);
  m.diffusivity_N = DiffusivityLaw::constant(1.0);
  m.monod = {0.0, 0.0, 1.0};
  m.spatial_growth = [](const Point& x) {
    return std::numbers::pi * std::numbers::pi * std::sin(x[0]);
  };
  m.nutrient_enabled = false;
  m.bounds = {-0.04, 0.06};
  m.bc = BoundaryCondition::DirichletZero;
  // 3 H(0.5 - x) - 3 H(x - 0.5) with H(0) = 1/2.
  m.source_B = [](const Point& x, double) {
    if (x[0] < 0.5) return 3.0;
    if (x[0] > 0.5) return -3.0;
    return 0.0;
  };
  m.initial_B = [](const Point& x, int) {
    return 0.04 * std::sin(std::numbers::pi * x[0]);
  };
  m.initial_N = constant_fn(0.0);
  e.description = "scalar double-obstacle problem on (0,1)";
  e.run.mesh = MeshSource::interval(0.0, 1.0, 100);
  e.run.solver.scaled_complementarity = true;
  e.run.dt = 0.001;
  e.run.final_time = 0.1;
  e.run.sample_times = {0.05, 0.1};
  StudyPlan s;
  for (int n : {100, 200, 400})
    s.levels.push_back({MeshSource::interval(0, 1, n), 1.0 / n, 1.0 / n});
  s.fine = {MeshSource::interval(0, 1, 1200), 1.0 / 1200, 1e-4};
  s.sample_times = {0.05, 0.1};
  e.study = s;
  return e;
}

Experiment appendix_a2() {
  Experiment e;
  e.model = ex5_1_model();
  e.model.name = "appendix_A2";
  e.model.bounds.upper = std::numeric_limits<double>::infinity();
  e.description = "ex5_1 data without the density constraint";
  e.run.mesh = MeshSource::interval(0.0, 1.0, 50);
  e.run.dt = 0.005;
  e.run.final_time = 0.1;
  e.run.sample_times = {0.05, 0.1};
  StudyPlan s;
  for (int n : {20, 40, 80}) {
    const double h = 1.0 / n;
    s.levels.push_back({MeshSource::interval(0, 1, n), h, h * h / 10});
  }
  const double hf = 1.0 / 320;
  s.fine = {MeshSource::interval(0, 1, 320), hf, hf * hf / 10};
  s.sample_times = {0.05, 0.1};
  e.study = s;
  return e;
}

}  // namespace

SpatialFn interval_indicator(double a, double b, EdgeValue edge) {
  const double w = edge_weight(edge);
  return [a, b, w](const Point& x) { return interval_value(x[0], a, b, w); };
}

SpatialFn box_indicator(std::array<double, 2> xr, std::array<double, 2> yr,
                        EdgeValue edge) {
  const double w = edge_weight(edge);
  return [xr, yr, w](const Point& x) {
    return interval_value(x[0], xr[0], xr[1], w) *
           interval_value(x[1], yr[0], yr[1], w);
  };
}

SpatialFn disc_indicator(double radius, EdgeValue edge) {
  const double w = edge_weight(edge);
  return [radius, w](const Point& x) {
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if (std::abs(r - radius) <= kEdgeTol) return w;
    return r < radius ? 1.0 : 0.0;
  };
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "ex5_1", "ex5_2_i", "ex5_2_ii", "ex5_2_iii", "ex5_2_iv", "ex5_3",
      "ex5_4", "ex5_5",   "ex5_6",    "appendix_A1", "appendix_A2"};
  return names;
}

Experiment builtin_experiment(const std::string& name) {
  if (name == "ex5_1") return ex5_1();
  if (name == "ex5_2_i") return ex5_2("i");
  if (name == "ex5_2_ii") return ex5_2("ii");
  if (name == "ex5_2_iii") return ex5_2("iii");
  if (name == "ex5_2_iv") return ex5_2("iv");
  if (name == "ex5_3") return square(false);
  if (name == "ex5_4") return square(true);
  if (name == "ex5_5") return porescale(false);
  if (name == "ex5_6") return porescale(true);
  if (name == "appendix_A1") return appendix_a1();
  if (name == "appendix_A2") return appendix_a2();
  std::string list;
  for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
  throw ModelError("unknown experiment '" + name + "'; available: " + list);
}

ModelSpec pure_diffusion_model(DiffusivityLaw d_B, DiffusivityLaw d_N,
                               InitialFn B0, InitialFn N0) {
  ModelSpec m;
  m.name = "pure_diffusion";
  m.diffusivity_B = d_B;
  m.diffusivity_N = d_N;
  m.monod = {0.0, 0.0, 1.0};
  m.bc = BoundaryCondition::NeumannZero;
  m.initial_B = std::move(B0);
  m.initial_N = std::move(N0);
  return m;
}

}  // namespace pvi

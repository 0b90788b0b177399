#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvi/mesh.hpp"

namespace pvi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the Monod factor enters a step. TimeLagged evaluates it (and the
/// diffusivity arguments) at the previous time level; FullyImplicit rebuilds
/// the reaction matrices from the current Newton iterate.
enum class CouplingMode { TimeLagged, FullyImplicit };

struct SolverOptions {
  double tol = 1e-6;  // max-norm of the residual
  int max_iter = 50;
  CouplingMode mode = CouplingMode::TimeLagged;
  /// Use B - P(B - c Lambda) with c_i = dt m_i / K_ii (m the lumped mass, K
  /// the biofilm step matrix) instead of c = 1. Same solutions; keeps
  /// multipliers of a narrow two-sided band from flipping nodes between the
  /// bounds during the iteration.
  bool scaled_complementarity = false;
  /// Time-lagged coupling only: compute each Newton correction by eliminating
  /// the complementarity rows and the nutrient block (one q x q solve for the
  /// biofilm block, one for N) instead of factorizing the 3q x 3q Jacobian.
  /// The iterates are the same.
  bool block_elimination = true;
};

/// Recipe for a mesh: a generator call or a file to import.
struct MeshSource {
  enum class Kind { Interval, Rectangle, File };

  Kind kind = Kind::Interval;
  std::array<double, 2> x_range{0.0, 1.0};
  std::array<double, 2> y_range{0.0, 1.0};
  int cells = 1;  // per side for rectangles
  std::filesystem::path path;

  static MeshSource interval(double a, double b, int n);
  static MeshSource rectangle(std::array<double, 2> xr, std::array<double, 2> yr,
                              int m);
  static MeshSource file(std::filesystem::path p);

  /// Parses "interval a b n", "rectangle x0 x1 y0 y1 m" or "file PATH".
  static MeshSource parse(const std::string& text);
  std::string describe() const;

  SimplicialMesh build() const;
};

struct RunConfig {
  MeshSource mesh;
  double dt = 0.01;
  double final_time = 0.1;
  /// Times at which full fields are captured; each must coincide with a step.
  std::vector<double> sample_times;
  SolverOptions solver;
  bool lump_mass = false;
};

struct StudyLevel {
  MeshSource mesh;
  double h = 0.0;  // label used for orders
  double dt = 0.0;
};

/// Coarse levels plus a fine surrogate level; every coarse mesh must be
/// nested in the fine one.
struct StudyPlan {
  std::vector<StudyLevel> levels;
  StudyLevel fine;
  std::vector<double> sample_times;
};

/// Directory holding the shipped mesh fixtures. PVI_DATA_DIR overrides the
/// compiled-in default.
std::filesystem::path data_directory();

/// Flat "key = value" configuration. Recognized keys mirror RunConfig:
/// experiment, mesh, dt, T, samples, tol, max_iter, mode, lump_mass.
struct ConfigFile {
  std::string experiment;
  RunConfig run;
};

/// Parses a config file on top of the defaults of the experiment it names.
ConfigFile parse_config_text(const std::string& text);
ConfigFile load_config(const std::filesystem::path& path);

}  // namespace pvi

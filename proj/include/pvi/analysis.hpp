#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pvi/assembly.hpp"
#include "pvi/config.hpp"
#include "pvi/model.hpp"
#include "pvi/timeloop.hpp"

namespace pvi {

/// Exact P1 interpolation from a coarse mesh onto a nested fine mesh, stored
/// as a sparse (fine x coarse) matrix. Throws MeshError when some fine cell
/// is not contained in a single coarse cell.
class Prolongation {
 public:
  Prolongation(const SimplicialMesh& coarse, const SimplicialMesh& fine);
  NodalField operator()(const NodalField& coarse_values) const;
  const SparseMatrix& matrix() const { return P_; }

 private:
  SparseMatrix P_;
  std::size_t coarse_size_;
};

NodalField prolongate(const SimplicialMesh& coarse, const NodalField& values,
                      const SimplicialMesh& fine);

/// Transfers a field from level `from` to a finer level `to` of the hierarchy
/// through the stored parent maps.
NodalField transfer_to_fine(const MeshHierarchy& hierarchy, const NodalField& values,
                            std::size_t from, std::size_t to);

struct FeNorms {
  double l2 = 0.0;       // ||u - v||_{L2}
  double h1_semi = 0.0;  // ||grad(u - v)||_{L2}
  double h1 = 0.0;       // sqrt(l2^2 + h1_semi^2)
};

/// Norms of a P1 difference on a fixed mesh (matrices assembled once).
class NormEvaluator {
 public:
  explicit NormEvaluator(const SimplicialMesh& mesh);
  FeNorms operator()(const NodalField& field, const NodalField& reference) const;

 private:
  SparseMatrix M_, K_;
};

FeNorms fe_norms(const SimplicialMesh& mesh, const NodalField& field,
                 const NodalField& reference);

struct SampleError {
  double t = 0.0;
  FeNorms B, N;
};

/// ERR1 = max over samples of (||e_B||_L2 + ||e_N||_L2),
/// ERR2 = sqrt(sum over samples of (||e_B||_H1^2 + ||e_N||_H1^2) dt).
struct ErrorReport {
  double h = 0.0;
  double dt = 0.0;
  std::vector<SampleError> samples;
  double err1 = 0.0;
  double err2 = 0.0;
};

ErrorReport compute_error_report(const SimplicialMesh& coarse_mesh,
                                 const Trajectory& coarse,
                                 const SimplicialMesh& fine_mesh, const Trajectory& fine,
                                 const std::vector<double>& sample_times, double h,
                                 double dt);

/// log(e_prev / e_cur) / log(h_prev / h_cur)
double observed_order(double e_prev, double e_cur, double h_prev, double h_cur);

struct ConvergenceRow {
  double h = 0.0;
  double dt = 0.0;
  double err1 = 0.0;
  double err2 = 0.0;
  std::optional<double> order1, order2;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  /// Header h,dt,err1,err2,order1,order2; orders are empty on the first row.
  std::string to_csv() const;
};

ConvergenceTable make_table(const std::vector<ErrorReport>& reports);

/// Worker count for independent runs: PVI_THREADS when set, else the number
/// of hardware threads.
int worker_count();

using StudyProgress = std::function<void(const std::string& message)>;

/// Runs the first `max_levels` coarse levels (all when negative) and the fine
/// surrogate, in parallel, and tabulates errors and observed orders.
ConvergenceTable convergence_study(const ModelSpec& model, const StudyPlan& plan,
                                   const SolverOptions& options, bool lump_mass = false,
                                   int max_levels = -1, const StudyProgress& progress = {});

/// Convergence table of a built-in experiment with a study plan.
ConvergenceTable appendix_rate_check(const std::string& experiment, int max_levels = -1,
                                     const StudyProgress& progress = {});

}  // namespace pvi

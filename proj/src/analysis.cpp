#include "pvi/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace pvi {

Prolongation::Prolongation(const SimplicialMesh& coarse, const SimplicialMesh& fine)
    : coarse_size_(coarse.num_vertices()) {
  if (coarse.dim() != fine.dim()) throw MeshError("meshes have different dimensions");
  const PointLocator locator(coarse);
  const int nloc = fine.dim() + 1;
  std::vector<int> owner(fine.num_vertices(), -1);
  std::vector<std::array<double, 4>> weights(fine.num_vertices());
  for (std::size_t c = 0; c < fine.num_cells(); ++c) {
    const int parent = locator.locate(fine.barycenter(c));
    bool inside = parent >= 0;
    std::array<std::array<double, 4>, 4> lam{};
    for (int k = 0; inside && k < nloc; ++k) {
      lam[k] = coarse.barycentric(static_cast<std::size_t>(parent),
                                  fine.vertex(fine.cell(c)[k]));
      for (int j = 0; j < nloc; ++j)
        if (lam[k][j] < -1e-9) inside = false;
    }
    if (!inside)
      throw MeshError("meshes are not nested: fine cell " + std::to_string(c) +
                      " is not contained in a single coarse cell");
    for (int k = 0; k < nloc; ++k) {
      const int v = fine.cell(c)[k];
      if (owner[v] >= 0) continue;
      owner[v] = parent;
      weights[v] = lam[k];
    }
  }
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t v = 0; v < fine.num_vertices(); ++v)
    for (int j = 0; j < nloc; ++j)
      if (weights[v][j] != 0.0)
        t.emplace_back(static_cast<int>(v), coarse.cell(owner[v])[j], weights[v][j]);
  P_.resize(static_cast<Eigen::Index>(fine.num_vertices()),
            static_cast<Eigen::Index>(coarse.num_vertices()));
  P_.setFromTriplets(t.begin(), t.end());
}

NodalField Prolongation::operator()(const NodalField& coarse_values) const {
  if (static_cast<std::size_t>(coarse_values.size()) != coarse_size_)
    throw std::invalid_argument("field does not match the coarse mesh");
  return P_ * coarse_values;
}

NodalField prolongate(const SimplicialMesh& coarse, const NodalField& values,
                      const SimplicialMesh& fine) {
  return Prolongation(coarse, fine)(values);
}

NodalField transfer_to_fine(const MeshHierarchy& hierarchy, const NodalField& values,
                            std::size_t from, std::size_t to) {
  if (from > to || to >= hierarchy.num_levels())
    throw std::invalid_argument("invalid hierarchy levels");
  NodalField v = values;
  for (std::size_t k = from; k < to; ++k) {
    const SimplicialMesh& coarse = hierarchy.level(k);
    const SimplicialMesh& fine = hierarchy.level(k + 1);
    const auto parent = hierarchy.parent_map(k);
    const int nloc = fine.dim() + 1;
    NodalField out(static_cast<Eigen::Index>(fine.num_vertices()));
    for (std::size_t c = 0; c < fine.num_cells(); ++c) {
      const auto p = static_cast<std::size_t>(parent[c]);
      for (int a = 0; a < nloc; ++a) {
        const int vert = fine.cell(c)[a];
        const auto lam = coarse.barycentric(p, fine.vertex(vert));
        double s = 0.0;
        for (int j = 0; j < nloc; ++j) s += lam[j] * v(coarse.cell(p)[j]);
        out(vert) = s;
      }
    }
    v = std::move(out);
  }
  return v;
}

NormEvaluator::NormEvaluator(const SimplicialMesh& mesh) {
  const Assembler a(mesh);
  M_ = a.mass();
  K_ = a.stiffness();
}

FeNorms NormEvaluator::operator()(const NodalField& field,
                                  const NodalField& reference) const {
  if (field.size() != M_.rows() || reference.size() != M_.rows())
    throw std::invalid_argument("fields do not match the mesh");
  const NodalField e = field - reference;
  FeNorms n;
  n.l2 = std::sqrt(std::max(0.0, e.dot(M_ * e)));
  n.h1_semi = std::sqrt(std::max(0.0, e.dot(K_ * e)));
  n.h1 = std::hypot(n.l2, n.h1_semi);
  return n;
}

FeNorms fe_norms(const SimplicialMesh& mesh, const NodalField& field,
                 const NodalField& reference) {
  return NormEvaluator(mesh)(field, reference);
}

ErrorReport compute_error_report(const SimplicialMesh& coarse_mesh,
                                 const Trajectory& coarse,
                                 const SimplicialMesh& fine_mesh, const Trajectory& fine,
                                 const std::vector<double>& sample_times, double h,
                                 double dt) {
  const Prolongation P(coarse_mesh, fine_mesh);
  const NormEvaluator norms(fine_mesh);
  ErrorReport r;
  r.h = h;
  r.dt = dt;
  double sum2 = 0.0;
  for (double t : sample_times) {
    const Capture* c = coarse.at(t);
    const Capture* f = fine.at(t);
    if (!c || !f) {
      std::ostringstream msg;
      msg << "no captured state at t = " << t;
      throw std::invalid_argument(msg.str());
    }
    SampleError s;
    s.t = t;
    s.B = norms(P(c->B), f->B);
    s.N = norms(P(c->N), f->N);
    r.err1 = std::max(r.err1, s.B.l2 + s.N.l2);
    sum2 += (s.B.h1 * s.B.h1 + s.N.h1 * s.N.h1) * dt;
    r.samples.push_back(s);
  }
  r.err2 = std::sqrt(sum2);
  return r;
}

double observed_order(double e_prev, double e_cur, double h_prev, double h_cur) {
  return std::log(e_prev / e_cur) / std::log(h_prev / h_cur);
}

ConvergenceTable make_table(const std::vector<ErrorReport>& reports) {
  ConvergenceTable t;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    ConvergenceRow row{reports[k].h, reports[k].dt, reports[k].err1, reports[k].err2,
                       std::nullopt, std::nullopt};
    if (k > 0) {
      const ErrorReport& p = reports[k - 1];
      row.order1 = observed_order(p.err1, row.err1, p.h, row.h);
      row.order2 = observed_order(p.err2, row.err2, p.h, row.h);
    }
    t.rows.push_back(row);
  }
  return t;
}

std::string ConvergenceTable::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "h,dt,err1,err2,order1,order2\n";
  for (const ConvergenceRow& r : rows) {
    out << r.h << ',' << r.dt << ',' << r.err1 << ',' << r.err2 << ',';
    if (r.order1) out << *r.order1;
    out << ',';
    if (r.order2) out << *r.order2;
    out << '\n';
  }
  return out.str();
}

int worker_count() {
  if (const char* env = std::getenv("PVI_THREADS"); env && *env) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ConvergenceTable convergence_study(const ModelSpec& model, const StudyPlan& plan,
                                   const SolverOptions& options, bool lump_mass,
                                   int max_levels, const StudyProgress& progress) {
  std::vector<StudyLevel> levels = plan.levels;
  if (max_levels >= 0 && static_cast<std::size_t>(max_levels) < levels.size())
    levels.resize(static_cast<std::size_t>(max_levels));
  if (levels.empty()) throw ConfigError("convergence study needs at least one level");
  levels.push_back(plan.fine);
  const double final_time =
      *std::max_element(plan.sample_times.begin(), plan.sample_times.end());

  const std::size_t n = levels.size();
  std::vector<std::optional<SimplicialMesh>> meshes(n);
  std::vector<Trajectory> runs(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  // The fine level is the most expensive; start it first.
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      const std::size_t idx = n - 1 - k;
      try {
        meshes[idx].emplace(levels[idx].mesh.build());
        RunConfig cfg;
        cfg.mesh = levels[idx].mesh;
        cfg.dt = levels[idx].dt;
        cfg.final_time = final_time;
        cfg.sample_times = plan.sample_times;
        cfg.solver = options;
        cfg.lump_mass = lump_mass;
        runs[idx] = run(model, *meshes[idx], cfg);
        if (progress) {
          std::lock_guard lock(report_mutex);
          std::ostringstream msg;
          msg << (idx + 1 == n ? "fine level" : "level " + std::to_string(idx))
              << " done: " << levels[idx].mesh.describe() << ", dt = " << levels[idx].dt;
          progress(msg.str());
        }
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    }
  };
  const int workers = std::min<int>(worker_count(), static_cast<int>(n));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<ErrorReport> reports;
  for (std::size_t k = 0; k + 1 < n; ++k)
    reports.push_back(compute_error_report(*meshes[k], runs[k], *meshes[n - 1], runs[n - 1],
                                           plan.sample_times, levels[k].h, levels[k].dt));
  return make_table(reports);
}

ConvergenceTable appendix_rate_check(const std::string& experiment, int max_levels,
                                     const StudyProgress& progress) {
  const Experiment ex = builtin_experiment(experiment);
  if (!ex.study) throw ConfigError("experiment '" + experiment + "' has no study plan");
  return convergence_study(ex.model, *ex.study, ex.run.solver, ex.run.lump_mass,
                           max_levels, progress);
}

}  // namespace pvi

#include "pvi/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pvi {

std::string format_vtk(const SimplicialMesh& mesh, const Capture& capture) {
  const std::size_t nv = mesh.num_vertices();
  const std::size_t nc = mesh.num_cells();
  const int nloc = mesh.dim() + 1;
  if (static_cast<std::size_t>(capture.B.size()) != nv)
    throw std::invalid_argument("captured fields do not match the mesh");
  std::ostringstream out;
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n";
  out << "biofilm state step " << capture.step << " t " << capture.t << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const Point& p : mesh.vertices()) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  out << "CELLS " << nc << ' ' << nc * static_cast<std::size_t>(nloc + 1) << '\n';
  for (const Cell& c : mesh.cells()) {
    out << nloc;
    for (int k = 0; k < nloc; ++k) out << ' ' << c[k];
    out << '\n';
  }
  const int type = mesh.dim() == 1 ? 3 : mesh.dim() == 2 ? 5 : 10;
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t c = 0; c < nc; ++c) out << type << '\n';
  out << "POINT_DATA " << nv << '\n';
  auto field = [&](const char* name, const NodalField& f) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < f.size(); ++i) out << f(i) << '\n';
  };
  field("B", capture.B);
  field("N", capture.N);
  field("Lambda", capture.Lambda);
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("error while writing " + path.string());
}

void write_vtk(const std::filesystem::path& path, const SimplicialMesh& mesh,
               const Capture& capture) {
  write_text(path, format_vtk(mesh, capture));
}

std::string format_series_csv(const Trajectory& trajectory) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "step,t,total_B,total_N,active_nodes,newton_iters,residual,clamp_count,dn_sum\n";
  for (const StepRecord& r : trajectory.series)
    out << r.step << ',' << r.t << ',' << r.total_B << ',' << r.total_N << ','
        << r.active_nodes << ',' << r.newton_iters << ',' << r.residual << ','
        << r.clamp_count << ',' << r.dn_sum << '\n';
  return out.str();
}

void write_series_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  write_text(path, format_series_csv(trajectory));
}

}  // namespace pvi

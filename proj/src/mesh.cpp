#include "pvi/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace pvi {

namespace {

constexpr double kClosureTol = 1e-10;

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double distance(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::string cell_label(std::size_t c) { return "cell " + std::to_string(c); }

}  // namespace

double signed_volume(int dim, std::span<const Point> s) {
  switch (dim) {
    case 1:
      return s[1][0] - s[0][0];
    case 2:
      return 0.5 * ((s[1][0] - s[0][0]) * (s[2][1] - s[0][1]) -
                    (s[2][0] - s[0][0]) * (s[1][1] - s[0][1]));
    case 3: {
      Eigen::Matrix3d m;
      for (int k = 0; k < 3; ++k)
        for (int a = 0; a < 3; ++a) m(a, k) = s[k + 1][a] - s[0][a];
      return m.determinant() / 6.0;
    }
    default:
      throw MeshError("unsupported dimension " + std::to_string(dim));
  }
}

SimplicialMesh SimplicialMesh::build(int dim, std::vector<Point> vertices,
                                     std::vector<Cell> cells,
                                     std::vector<int> vertex_tags,
                                     std::vector<int> cell_tags) {
  if (dim < 1 || dim > 3) throw MeshError("mesh dimension must be 1, 2 or 3");
  if (cells.empty()) throw MeshError("mesh has no cells");
  if (vertex_tags.empty()) vertex_tags.assign(vertices.size(), 0);
  if (cell_tags.empty()) cell_tags.assign(cells.size(), 0);
  if (vertex_tags.size() != vertices.size())
    throw MeshError("vertex tag count does not match vertex count");
  if (cell_tags.size() != cells.size())
    throw MeshError("cell tag count does not match cell count");

  const int nv = dim + 1;
  const auto n_vertices = static_cast<int>(vertices.size());
  SimplicialMesh mesh;
  mesh.dim_ = dim;
  mesh.volumes_.resize(cells.size());

  for (std::size_t c = 0; c < cells.size(); ++c) {
    Cell& cell = cells[c];
    for (int k = 0; k < nv; ++k) {
      if (cell[k] < 0 || cell[k] >= n_vertices)
        throw MeshError(cell_label(c) + " references vertex index " +
                        std::to_string(cell[k]) + " out of range [0, " +
                        std::to_string(n_vertices) + ")");
      for (int j = 0; j < k; ++j)
        if (cell[j] == cell[k])
          throw MeshError(cell_label(c) + " repeats vertex " +
                          std::to_string(cell[k]));
    }
    for (int k = nv; k < 4; ++k) cell[k] = -1;

    std::array<Point, 4> s{};
    for (int k = 0; k < nv; ++k) s[k] = vertices[cell[k]];
    double vol = signed_volume(dim, std::span<const Point>(s.data(), nv));
    if (vol < 0) {
      std::swap(cell[0], cell[1]);
      vol = -vol;
    }
    // Relative to the cell's own size so that tiny but valid cells pass.
    double len = 0.0;
    for (int a = 0; a < nv; ++a)
      for (int b = a + 1; b < nv; ++b)
        len = std::max(len, distance(s[a], s[b]));
    if (!(vol > 1e-12 * std::pow(len, dim)))
      throw MeshError(cell_label(c) + " has zero or negative volume");
    mesh.volumes_[c] = vol;
    mesh.h_ = std::max(mesh.h_, len);
  }

  // Facet incidence. A facet is the sorted set of dim vertex indices.
  std::map<std::array<int, 3>, int> facet_count;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int skip = 0; skip < nv; ++skip) {
      std::array<int, 3> f{-1, -1, -1};
      int n = 0;
      for (int k = 0; k < nv; ++k)
        if (k != skip) f[n++] = cells[c][k];
      std::sort(f.begin(), f.begin() + n);
      if (++facet_count[f] > 2)
        throw MeshError("non-conforming mesh: facet of " + cell_label(c) +
                        " is shared by more than two cells");
    }
  }
  mesh.boundary_flag_.assign(vertices.size(), 0);
  for (const auto& [f, count] : facet_count) {
    if (count != 1) continue;
    for (int k = 0; k < dim; ++k) mesh.boundary_flag_[f[k]] = 1;
  }
  for (int v = 0; v < n_vertices; ++v)
    if (mesh.boundary_flag_[v]) mesh.boundary_list_.push_back(v);

  mesh.vertices_ = std::move(vertices);
  mesh.cells_ = std::move(cells);
  mesh.vertex_tags_ = std::move(vertex_tags);
  mesh.cell_tags_ = std::move(cell_tags);

  {
    std::vector<char> used(mesh.vertices_.size(), 0);
    for (const Cell& cell : mesh.cells_)
      for (int k = 0; k < nv; ++k) used[cell[k]] = 1;
    for (std::size_t v = 0; v < mesh.vertices_.size(); ++v)
      if (!used[v])
        throw MeshError("vertex " + std::to_string(v) +
                        " is not referenced by any cell");
  }
  // In a conforming mesh a vertex touching the closure of a cell is one of
  // that cell's vertices; anything else is a hanging vertex or an overlap.
  {
    const auto [bmin, bmax] = mesh.bounding_box();
    const std::size_t nb = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(
               std::pow(static_cast<double>(mesh.cells_.size()), 1.0 / dim))));
    std::array<std::size_t, 3> dims{1, 1, 1};
    Point width{1, 1, 1};
    for (int a = 0; a < dim; ++a) {
      dims[a] = nb;
      width[a] = std::max(bmax[a] - bmin[a], 1e-300) / static_cast<double>(nb);
    }
    auto bin = [&](double x, int a) {
      const double r = (x - bmin[a]) / width[a];
      return static_cast<std::size_t>(
          std::clamp(r, 0.0, static_cast<double>(dims[a] - 1)));
    };
    std::vector<std::vector<int>> vbins(dims[0] * dims[1] * dims[2]);
    for (std::size_t v = 0; v < mesh.vertices_.size(); ++v) {
      const Point& x = mesh.vertices_[v];
      vbins[(bin(x[2], 2) * dims[1] + bin(x[1], 1)) * dims[0] + bin(x[0], 0)]
          .push_back(static_cast<int>(v));
    }
    for (std::size_t c = 0; c < mesh.cells_.size(); ++c) {
      const Cell& cell = mesh.cells_[c];
      Point lo, hi;
      lo.fill(std::numeric_limits<double>::max());
      hi.fill(std::numeric_limits<double>::lowest());
      for (int k = 0; k < nv; ++k)
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], mesh.vertices_[cell[k]][a]);
          hi[a] = std::max(hi[a], mesh.vertices_[cell[k]][a]);
        }
      std::array<std::size_t, 3> b0{0, 0, 0}, b1{0, 0, 0};
      for (int a = 0; a < dim; ++a) {
        const double pad = 1e-9 * mesh.h_;
        b0[a] = bin(lo[a] - pad, a);
        b1[a] = bin(hi[a] + pad, a);
      }
      for (std::size_t k2 = b0[2]; k2 <= b1[2]; ++k2)
        for (std::size_t k1 = b0[1]; k1 <= b1[1]; ++k1)
          for (std::size_t k0 = b0[0]; k0 <= b1[0]; ++k0)
            for (int v : vbins[(k2 * dims[1] + k1) * dims[0] + k0]) {
              if (std::find(cell.begin(), cell.begin() + nv, v) !=
                  cell.begin() + nv)
                continue;
              const auto lam = mesh.barycentric(c, mesh.vertices_[v]);
              double mn = lam[0];
              for (int k = 1; k < nv; ++k) mn = std::min(mn, lam[k]);
              if (mn >= -kClosureTol)
                throw MeshError("non-conforming mesh: vertex " +
                                std::to_string(v) + " lies on " +
                                cell_label(c) + " without being one of its vertices");
            }
    }
  }
  return mesh;
}

double SimplicialMesh::measure() const {
  double s = 0.0;
  for (double v : volumes_) s += v;
  return s;
}

std::pair<Point, Point> SimplicialMesh::bounding_box() const {
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::numeric_limits<double>::max();
    hi[a] = std::numeric_limits<double>::lowest();
  }
  for (const Point& p : vertices_)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  return {lo, hi};
}

double SimplicialMesh::diameter() const {
  const auto [lo, hi] = bounding_box();
  return distance(lo, hi);
}

Point SimplicialMesh::barycenter(std::size_t c) const {
  Point b{0, 0, 0};
  const int nv = dim_ + 1;
  for (int k = 0; k < nv; ++k)
    for (int a = 0; a < 3; ++a) b[a] += vertices_[cells_[c][k]][a] / nv;
  return b;
}

std::array<double, 4> SimplicialMesh::barycentric(std::size_t c,
                                                  const Point& x) const {
  const Cell& cell = cells_[c];
  const Point& v0 = vertices_[cell[0]];
  std::array<double, 4> lam{0, 0, 0, 0};
  if (dim_ == 1) {
    const double t = (x[0] - v0[0]) / (vertices_[cell[1]][0] - v0[0]);
    lam[0] = 1.0 - t;
    lam[1] = t;
    return lam;
  }
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  for (int k = 0; k < dim_; ++k)
    for (int a = 0; a < dim_; ++a)
      t(a, k) = vertices_[cell[k + 1]][a] - v0[a];
  for (int a = 0; a < dim_; ++a) r(a) = x[a] - v0[a];
  const Eigen::Vector3d s = t.partialPivLu().solve(r);
  lam[0] = 1.0;
  for (int k = 0; k < dim_; ++k) {
    lam[k + 1] = s(k);
    lam[0] -= s(k);
  }
  return lam;
}

SimplicialMesh generate_interval(double a, double b, int n_cells) {
  if (n_cells < 1) throw MeshError("interval needs at least one cell");
  if (!(a < b)) throw MeshError("interval requires a < b");
  std::vector<Point> v(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i)
    v[i] = {a + (b - a) * static_cast<double>(i) / n_cells, 0.0, 0.0};
  v.back()[0] = b;
  std::vector<Cell> c(n_cells);
  for (int i = 0; i < n_cells; ++i) c[i] = {i, i + 1, -1, -1};
  return SimplicialMesh::build(1, std::move(v), std::move(c));
}

SimplicialMesh generate_rectangle(std::array<double, 2> xr,
                                  std::array<double, 2> yr, int m) {
  if (m < 1) throw MeshError("rectangle needs at least one cell per side");
  if (!(xr[0] < xr[1]) || !(yr[0] < yr[1]))
    throw MeshError("rectangle ranges must be nonempty");
  const int n = m + 1;
  std::vector<Point> v(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      v[j * n + i] = {xr[0] + (xr[1] - xr[0]) * i / m,
                      yr[0] + (yr[1] - yr[0]) * j / m, 0.0};
  std::vector<Cell> c;
  c.reserve(2 * static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const int p00 = j * n + i, p10 = p00 + 1, p01 = p00 + n, p11 = p01 + 1;
      c.push_back({p00, p10, p11, -1});
      c.push_back({p00, p11, p01, -1});
    }
  return SimplicialMesh::build(2, std::move(v), std::move(c));
}

double rectangle_axis_spacing(std::array<double, 2> x_range, int m) {
  return (x_range[1] - x_range[0]) / m;
}

RefinedMesh refine_uniform(const SimplicialMesh& mesh) {
  const int dim = mesh.dim();
  if (dim == 3)
    throw MeshError(
        "uniform refinement is not supported for d=3; import a refined mesh");
  std::vector<Point> verts(mesh.vertices().begin(), mesh.vertices().end());
  std::vector<int> vtags(mesh.vertex_tags().begin(), mesh.vertex_tags().end());
  std::unordered_map<std::uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    const Point& pa = verts[a];
    const Point& pb = verts[b];
    verts.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]),
                     0.5 * (pa[2] + pb[2])});
    vtags.push_back(vtags[a] == vtags[b] ? vtags[a] : 0);
    const int id = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<Cell> cells;
  std::vector<int> ctags, parent;
  const int factor = dim == 1 ? 2 : 4;
  cells.reserve(mesh.num_cells() * factor);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const Cell& k = mesh.cell(c);
    if (dim == 1) {
      const int m = mid(k[0], k[1]);
      cells.push_back({k[0], m, -1, -1});
      cells.push_back({m, k[1], -1, -1});
    } else {
      const int m01 = mid(k[0], k[1]), m12 = mid(k[1], k[2]),
                m02 = mid(k[0], k[2]);
      cells.push_back({k[0], m01, m02, -1});
      cells.push_back({m01, k[1], m12, -1});
      cells.push_back({m02, m12, k[2], -1});
      cells.push_back({m01, m12, m02, -1});
    }
    for (int r = 0; r < factor; ++r) {
      ctags.push_back(mesh.cell_tags()[c]);
      parent.push_back(static_cast<int>(c));
    }
  }
  return {SimplicialMesh::build(dim, std::move(verts), std::move(cells),
                                std::move(vtags), std::move(ctags)),
          std::move(parent)};
}

MeshHierarchy::MeshHierarchy(SimplicialMesh coarsest) {
  levels_.push_back(std::move(coarsest));
}

const SimplicialMesh& MeshHierarchy::refine() {
  RefinedMesh r = refine_uniform(levels_.back());
  levels_.push_back(std::move(r.mesh));
  parents_.push_back(std::move(r.parent));
  return levels_.back();
}

namespace {

// Non-comment, non-blank lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> content_lines(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.emplace_back(no, line);
  }
  return out;
}

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> t;
  std::istringstream in(line);
  std::string s;
  while (in >> s) t.push_back(s);
  return t;
}

double parse_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MeshError("line " + std::to_string(line) + ": expected a number, got '" +
                    s + "'");
  }
}

long parse_int(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MeshError("line " + std::to_string(line) +
                    ": expected an integer, got '" + s + "'");
  }
}

}  // namespace

SimplicialMesh parse_mesh_text(const std::string& text) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw MeshError("empty mesh file");
  const auto header = tokens(lines[0].second);
  if (header.size() != 3)
    throw MeshError("line " + std::to_string(lines[0].first) +
                    ": header must be 'dim n_vertices n_cells'");
  const long dim = parse_int(header[0], lines[0].first);
  const long nv = parse_int(header[1], lines[0].first);
  const long nc = parse_int(header[2], lines[0].first);
  if (dim < 1 || dim > 3) throw MeshError("dimension must be 1, 2 or 3");
  if (nv < 1 || nc < 1) throw MeshError("vertex and cell counts must be positive");
  if (static_cast<long>(lines.size()) < 1 + nv + nc)
    throw MeshError("mesh file truncated: expected " + std::to_string(nv) +
                    " vertices and " + std::to_string(nc) + " cells");

  std::vector<Point> verts(nv, Point{0, 0, 0});
  std::vector<int> vtags(nv, 0);
  for (long i = 0; i < nv; ++i) {
    const auto& [no, line] = lines[1 + i];
    const auto t = tokens(line);
    if (t.size() != static_cast<std::size_t>(dim) &&
        t.size() != static_cast<std::size_t>(dim) + 1)
      throw MeshError("line " + std::to_string(no) + ": vertex " +
                      std::to_string(i) + " needs " + std::to_string(dim) +
                      " coordinates and an optional tag");
    for (long a = 0; a < dim; ++a) verts[i][a] = parse_double(t[a], no);
    if (t.size() == static_cast<std::size_t>(dim) + 1)
      vtags[i] = static_cast<int>(parse_int(t[dim], no));
  }
  std::vector<Cell> cells(nc, Cell{-1, -1, -1, -1});
  std::vector<int> ctags(nc, 0);
  for (long c = 0; c < nc; ++c) {
    const auto& [no, line] = lines[1 + nv + c];
    const auto t = tokens(line);
    if (t.size() != static_cast<std::size_t>(dim) + 1 &&
        t.size() != static_cast<std::size_t>(dim) + 2)
      throw MeshError("line " + std::to_string(no) + ": cell " +
                      std::to_string(c) + " needs " + std::to_string(dim + 1) +
                      " vertex indices and an optional tag");
    for (long k = 0; k <= dim; ++k) {
      const long idx = parse_int(t[k], no);
      if (idx < 0 || idx >= nv)
        throw MeshError("cell " + std::to_string(c) +
                        " references vertex index " + std::to_string(idx) +
                        " out of range [0, " + std::to_string(nv) + ")");
      cells[c][k] = static_cast<int>(idx);
    }
    if (t.size() == static_cast<std::size_t>(dim) + 2)
      ctags[c] = static_cast<int>(parse_int(t[dim + 1], no));
  }
  if (static_cast<long>(lines.size()) > 1 + nv + nc)
    throw MeshError("line " + std::to_string(lines[1 + nv + nc].first) +
                    ": unexpected trailing content");
  return SimplicialMesh::build(static_cast<int>(dim), std::move(verts),
                               std::move(cells), std::move(vtags),
                               std::move(ctags));
}

SimplicialMesh import_mesh(const std::filesystem::path& path,
                           const std::string& format) {
  if (format != "pvi-text")
    throw MeshError("unknown mesh format '" + format + "' (supported: pvi-text)");
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_mesh_text(ss.str());
  } catch (const MeshError& e) {
    throw MeshError(path.string() + ": " + e.what());
  }
}

std::string format_mesh_text(const SimplicialMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  const int d = mesh.dim();
  out << d << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    for (int a = 0; a < d; ++a) out << mesh.vertex(v)[a] << ' ';
    out << mesh.vertex_tags()[v] << '\n';
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k <= d; ++k) out << mesh.cell(c)[k] << ' ';
    out << mesh.cell_tags()[c] << '\n';
  }
  return out.str();
}

PointLocator::PointLocator(const SimplicialMesh& mesh) : mesh_(&mesh) {
  const int dim = mesh.dim();
  const auto [lo, hi] = mesh.bounding_box();
  lo_ = lo;
  const std::size_t nb = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(std::pow(static_cast<double>(mesh.num_cells()), 1.0 / dim))));
  for (int a = 0; a < 3; ++a) {
    nbins_[a] = a < dim ? nb : 1;
    const double w = a < dim ? std::max(hi[a] - lo[a], 1e-300) / nb : 1.0;
    inv_width_[a] = 1.0 / w;
  }
  tol_ = 1e-9 * mesh.h();
  bins_.resize(nbins_[0] * nbins_[1] * nbins_[2]);
  const int nv = dim + 1;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    Point clo, chi;
    clo.fill(std::numeric_limits<double>::max());
    chi.fill(std::numeric_limits<double>::lowest());
    for (int k = 0; k < nv; ++k)
      for (int a = 0; a < 3; ++a) {
        clo[a] = std::min(clo[a], mesh.vertex(mesh.cell(c)[k])[a]);
        chi[a] = std::max(chi[a], mesh.vertex(mesh.cell(c)[k])[a]);
      }
    std::array<std::size_t, 3> b0{}, b1{};
    for (int a = 0; a < 3; ++a) {
      clo[a] -= tol_;
      chi[a] += tol_;
      b0[a] = bin_of(clo, a);
      b1[a] = bin_of(chi, a);
    }
    for (std::size_t k2 = b0[2]; k2 <= b1[2]; ++k2)
      for (std::size_t k1 = b0[1]; k1 <= b1[1]; ++k1)
        for (std::size_t k0 = b0[0]; k0 <= b1[0]; ++k0)
          bins_[(k2 * nbins_[1] + k1) * nbins_[0] + k0].push_back(
              static_cast<int>(c));
  }
}

std::size_t PointLocator::bin_of(const Point& x, int axis) const {
  const double r = (x[axis] - lo_[axis]) * inv_width_[axis];
  return static_cast<std::size_t>(
      std::clamp(r, 0.0, static_cast<double>(nbins_[axis] - 1)));
}

int PointLocator::locate(const Point& x) const {
  const auto& bin = bins_[(bin_of(x, 2) * nbins_[1] + bin_of(x, 1)) * nbins_[0] +
                          bin_of(x, 0)];
  const int nv = mesh_->dim() + 1;
  int best = -1;
  double best_min = -std::numeric_limits<double>::max();
  for (int c : bin) {
    const auto lam = mesh_->barycentric(c, x);
    double mn = lam[0];
    for (int k = 1; k < nv; ++k) mn = std::min(mn, lam[k]);
    if (mn > best_min) {
      best_min = mn;
      best = c;
    }
  }
  return best_min >= -kClosureTol ? best : -1;
}

}  // namespace pvi

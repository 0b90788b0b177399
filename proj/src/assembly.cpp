#include "pvi/assembly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pvi {

const QuadratureRule& quadrature_rule(int dim) {
  static const QuadratureRule line = [] {
    const double g = 0.5 / std::sqrt(3.0);
    return QuadratureRule{{{0.5 + g, 0.5 - g, 0, 0}, {0.5 - g, 0.5 + g, 0, 0}},
                          {0.5, 0.5}};
  }();
  static const QuadratureRule triangle{
      {{0.5, 0.5, 0, 0}, {0, 0.5, 0.5, 0}, {0.5, 0, 0.5, 0}},
      {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  static const QuadratureRule tetra = [] {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    return QuadratureRule{
        {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}},
        {0.25, 0.25, 0.25, 0.25}};
  }();
  switch (dim) {
    case 1:
      return line;
    case 2:
      return triangle;
    case 3:
      return tetra;
    default:
      throw std::invalid_argument("no quadrature rule for dimension " +
                                  std::to_string(dim));
  }
}

Assembler::Assembler(const SimplicialMesh& mesh)
    : mesh_(&mesh), nloc_(mesh.dim() + 1) {
  const std::size_t n = mesh.num_vertices();
  const int dim = mesh.dim();

  std::vector<std::vector<int>> adj(n);
  for (const Cell& cell : mesh.cells())
    for (int a = 0; a < nloc_; ++a)
      for (int b = 0; b < nloc_; ++b) adj[cell[a]].push_back(cell[b]);
  row_ptr_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = adj[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    row_ptr_[i + 1] = row_ptr_[i] + static_cast<int>(r.size());
  }
  col_idx_.reserve(row_ptr_[n]);
  for (const auto& r : adj) col_idx_.insert(col_idx_.end(), r.begin(), r.end());

  const std::size_t nc = mesh.num_cells();
  slot_.resize(nc * nloc_ * nloc_);
  grads_.assign(nc * 4, Point{0, 0, 0});
  const auto& rule = quadrature_rule(dim);
  quad_x_.resize(nc * rule.points.size());

  for (std::size_t c = 0; c < nc; ++c) {
    const Cell& cell = mesh.cell(c);
    for (int a = 0; a < nloc_; ++a) {
      const int row = cell[a];
      const auto begin = col_idx_.begin() + row_ptr_[row];
      const auto end = col_idx_.begin() + row_ptr_[row + 1];
      for (int b = 0; b < nloc_; ++b)
        slot_[(c * nloc_ + a) * nloc_ + b] =
            static_cast<int>(std::lower_bound(begin, end, cell[b]) - col_idx_.begin());
    }

    const Point& v0 = mesh.vertex(cell[0]);
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    for (int k = 0; k < dim; ++k)
      for (int x = 0; x < dim; ++x) t(x, k) = mesh.vertex(cell[k + 1])[x] - v0[x];
    Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
    inv.topLeftCorner(dim, dim) = t.topLeftCorner(dim, dim).inverse();
    Point g0{0, 0, 0};
    for (int k = 1; k < nloc_; ++k) {
      Point& g = grads_[c * 4 + k];
      for (int x = 0; x < dim; ++x) {
        g[x] = inv(k - 1, x);
        g0[x] -= g[x];
      }
    }
    grads_[c * 4] = g0;

    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      Point x{0, 0, 0};
      for (int k = 0; k < nloc_; ++k)
        for (int d = 0; d < 3; ++d) x[d] += rule.points[q][k] * mesh.vertex(cell[k])[d];
      quad_x_[c * rule.points.size() + q] = x;
    }
  }
}

namespace {

SparseMatrix from_csr(std::size_t n, const std::vector<int>& row_ptr,
                      const std::vector<int>& cols, const std::vector<double>& vals) {
  const Eigen::Map<const SparseMatrix> view(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
      static_cast<Eigen::Index>(vals.size()), row_ptr.data(), cols.data(),
      vals.data());
  return SparseMatrix(view);
}

}  // namespace

SparseMatrix Assembler::mass() const {
  const QuadratureWeight one = [](const Point&, std::span<const double>) { return 1.0; };
  return weighted_mass(std::span<const NodalField* const>{}, one);
}

SparseMatrix Assembler::weighted_mass(const NodalField& weight,
                                      const ScalarMap& map) const {
  const NodalField* fields[] = {&weight};
  return weighted_mass(fields, [&map](const Point&, std::span<const double> v) {
    return map(v[0]);
  });
}

SparseMatrix Assembler::weighted_mass(std::span<const NodalField* const> fields,
                                      const QuadratureWeight& weight) const {
  for (const NodalField* f : fields)
    if (static_cast<std::size_t>(f->size()) != size())
      throw std::invalid_argument("weight field does not match the mesh");
  const auto& rule = quadrature_rule(mesh_->dim());
  const std::size_t nq = rule.points.size();
  std::vector<double> vals(col_idx_.size(), 0.0);
  std::vector<double> at_q(fields.size());
  const auto volumes = mesh_->cell_volumes();
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    const Cell& cell = mesh_->cell(c);
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& lam = rule.points[q];
      for (std::size_t f = 0; f < fields.size(); ++f) {
        double s = 0.0;
        for (int k = 0; k < nloc_; ++k) s += lam[k] * (*fields[f])(cell[k]);
        at_q[f] = s;
      }
      const double w = volumes[c] * rule.weights[q] * weight(quad_x_[c * nq + q], at_q);
      for (int a = 0; a < nloc_; ++a)
        for (int b = 0; b < nloc_; ++b)
          vals[slot_[(c * nloc_ + a) * nloc_ + b]] += w * lam[a] * lam[b];
    }
  }
  return from_csr(size(), row_ptr_, col_idx_, vals);
}

SparseMatrix Assembler::stiffness(const NodalField& coefficient,
                                  const ScalarMap& map) const {
  if (static_cast<std::size_t>(coefficient.size()) != size())
    throw std::invalid_argument("coefficient field does not match the mesh");
  const auto& rule = quadrature_rule(mesh_->dim());
  std::vector<double> vals(col_idx_.size(), 0.0);
  const auto volumes = mesh_->cell_volumes();
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    const Cell& cell = mesh_->cell(c);
    double avg = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double s = 0.0;
      for (int k = 0; k < nloc_; ++k) s += rule.points[q][k] * coefficient(cell[k]);
      const double d = map(s);
      if (!(d >= 0))
        throw std::domain_error("negative diffusivity " + std::to_string(d) +
                                " in cell " + std::to_string(c));
      avg += rule.weights[q] * d;
    }
    const double scale = volumes[c] * avg;
    for (int a = 0; a < nloc_; ++a) {
      const Point& ga = gradient(c, a);
      for (int b = 0; b < nloc_; ++b) {
        const Point& gb = gradient(c, b);
        vals[slot_[(c * nloc_ + a) * nloc_ + b]] +=
            scale * (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]);
      }
    }
  }
  return from_csr(size(), row_ptr_, col_idx_, vals);
}

SparseMatrix Assembler::stiffness() const {
  return stiffness(NodalField::Zero(static_cast<Eigen::Index>(size())),
                   [](double) { return 1.0; });
}

Eigen::VectorXd Assembler::load(const SourceFn& f, double t) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  if (!f) return out;
  const auto& rule = quadrature_rule(mesh_->dim());
  const std::size_t nq = rule.points.size();
  const auto volumes = mesh_->cell_volumes();
  for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
    const Cell& cell = mesh_->cell(c);
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = volumes[c] * rule.weights[q] * f(quad_x_[c * nq + q], t);
      for (int a = 0; a < nloc_; ++a) out(cell[a]) += w * rule.points[q][a];
    }
  }
  return out;
}

SparseMatrix assemble_mass(const SimplicialMesh& mesh) {
  return Assembler(mesh).mass();
}

SparseMatrix assemble_weighted_mass(const SimplicialMesh& mesh,
                                    const NodalField& weight,
                                    const ScalarMap& pointwise_map) {
  return Assembler(mesh).weighted_mass(weight, pointwise_map);
}

SparseMatrix assemble_stiffness(const SimplicialMesh& mesh,
                                const NodalField& coefficient,
                                const ScalarMap& coefficient_map) {
  return Assembler(mesh).stiffness(coefficient, coefficient_map);
}

Eigen::VectorXd assemble_load(const SimplicialMesh& mesh, const SourceFn& source,
                              double t) {
  return Assembler(mesh).load(source, t);
}

SparseMatrix lumped(const SparseMatrix& m) {
  SparseMatrix d(m.rows(), m.cols());
  d.reserve(Eigen::VectorXi::Ones(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) d.insert(i, i) = m.row(i).sum();
  d.makeCompressed();
  return d;
}

NodalField nodal_interpolate(const SimplicialMesh& mesh,
                             const std::function<double(const Point&)>& f) {
  NodalField v(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) v(i) = f(mesh.vertex(i));
  return v;
}

NodalField nodal_interpolate(const SimplicialMesh& mesh,
                             const std::function<double(const Point&, int)>& f) {
  NodalField v(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    v(i) = f(mesh.vertex(i), mesh.vertex_tags()[i]);
  return v;
}

}  // namespace pvi

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "pvi/config.hpp"
#include "pvi/mesh.hpp"

using namespace pvi;

namespace {

double total_volume(const SimplicialMesh& m) {
  double s = 0.0;
  for (double v : m.cell_volumes()) s += v;
  return s;
}

bool inside_closure(const SimplicialMesh& m, std::size_t c, const Point& x) {
  const auto lam = m.barycentric(c, x);
  for (int k = 0; k <= m.dim(); ++k)
    if (lam[k] < -1e-12) return false;
  return true;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("interval counts and spacing") {
    const auto m = generate_interval(0, 1, 4);
    CHECK(m.num_vertices() == 5);
    CHECK(m.num_cells() == 4);
    CHECK(m.h() == doctest::Approx(0.25));
    CHECK(generate_interval(0, 1, 50).h() == doctest::Approx(0.02));

    const auto one = generate_interval(0, 1, 1);
    CHECK(one.num_vertices() == 2);
    const auto b = one.boundary_vertices();
    CHECK(std::set<int>(b.begin(), b.end()) == std::set<int>{0, 1});
  }

  TEST_CASE("interval rejects bad input") {
    CHECK_THROWS_AS(generate_interval(0, 1, 0), MeshError);
    CHECK_THROWS_AS(generate_interval(1, 1, 3), MeshError);
    CHECK_THROWS_AS(generate_interval(2, 1, 3), MeshError);
  }

  TEST_CASE("rectangle counts, areas and boundary") {
    const auto m = generate_rectangle({0, 1}, {0, 1}, 2);
    CHECK(m.num_vertices() == 9);
    CHECK(m.num_cells() == 8);
    CHECK(m.boundary_vertices().size() == 8);

    const auto unit = generate_rectangle({0, 1}, {0, 1}, 1);
    REQUIRE(unit.num_cells() == 2);
    for (double a : unit.cell_volumes()) CHECK(a == doctest::Approx(0.5));

    const auto sq = generate_rectangle({-1, 1}, {-1, 1}, 20);
    CHECK(sq.num_cells() == 800);
    CHECK(rectangle_axis_spacing({-1, 1}, 20) == doctest::Approx(0.1));
    CHECK(sq.h() == doctest::Approx(0.1 * std::sqrt(2.0)));
    CHECK(sq.measure() == doctest::Approx(4.0));
    CHECK_THROWS_AS(generate_rectangle({0, 1}, {0, 1}, 0), MeshError);
  }

  TEST_CASE("boundary vertices are exactly the vertices of unshared facets") {
    const auto m = generate_rectangle({0, 2}, {0, 1}, 5);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
      const Point& p = m.vertex(v);
      const bool on_edge = std::abs(p[0]) < 1e-12 || std::abs(p[0] - 2) < 1e-12 ||
                           std::abs(p[1]) < 1e-12 || std::abs(p[1] - 1) < 1e-12;
      CHECK(m.is_boundary(v) == on_edge);
    }
  }

  TEST_CASE("uniform refinement") {
    const auto coarse = generate_interval(0, 1, 4);
    const RefinedMesh r = refine_uniform(coarse);
    CHECK(r.mesh.num_cells() == 8);
    CHECK(r.mesh.h() == doctest::Approx(coarse.h() / 2));

    const auto tri = generate_rectangle({0, 1}, {0, 1}, 2);
    const RefinedMesh rt = refine_uniform(tri);
    CHECK(rt.mesh.num_cells() == 32);
    CHECK(total_volume(rt.mesh) == doctest::Approx(total_volume(tri)).epsilon(1e-12));

    MeshHierarchy h(coarse);
    h.refine();
    h.refine();
    CHECK(h.num_levels() == 3);
    CHECK(h.level(2).h() == doctest::Approx(coarse.h() / 4));
  }

  TEST_CASE("parent map contains fine barycenters") {
    const auto tri = generate_rectangle({-1, 1}, {0, 1}, 3);
    MeshHierarchy h(tri);
    h.refine();
    h.refine();
    for (std::size_t k = 1; k < h.num_levels(); ++k) {
      const auto parents = h.parent_map(k - 1);
      const SimplicialMesh& fine = h.level(k);
      const SimplicialMesh& coarse = h.level(k - 1);
      REQUIRE(parents.size() == fine.num_cells());
      for (std::size_t c = 0; c < fine.num_cells(); ++c)
        CHECK(inside_closure(coarse, static_cast<std::size_t>(parents[c]), fine.barycenter(c)));
    }
  }

  TEST_CASE("refining a 3D mesh is rejected") {
    const auto m = parse_mesh_text("3 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\n");
    CHECK(m.measure() == doctest::Approx(1.0 / 6.0));
    CHECK_THROWS_AS(refine_uniform(m), MeshError);
  }

  TEST_CASE("text import") {
    const auto m = parse_mesh_text("# two triangles\n2 4 2\n0 0 1\n1 0\n1 1\n0 1 1\n0 1 2\n0 2 3 7\n");
    CHECK(m.num_vertices() == 4);
    CHECK(m.num_cells() == 2);
    CHECK(m.vertex_tags()[0] == 1);
    CHECK(m.vertex_tags()[1] == 0);
    CHECK(m.cell_tags()[1] == 7);
    CHECK(m.measure() == doctest::Approx(1.0));
  }

  TEST_CASE("text import orients clockwise cells") {
    const auto m = parse_mesh_text("2 3 1\n0 0\n0 1\n1 0\n0 1 2\n");
    CHECK(m.cell_volumes()[0] == doctest::Approx(0.5));
  }

  TEST_CASE("text import errors name the cell") {
    try {
      parse_mesh_text("2 3 2\n0 0\n1 0\n0 1\n0 1 2\n0 1 5\n");
      FAIL("expected MeshError");
    } catch (const MeshError& e) {
      CHECK(std::string(e.what()).find("cell 1") != std::string::npos);
    }
    try {
      parse_mesh_text("2 3 1\n0 0\n1 0\n2 0\n0 1 2\n");
      FAIL("expected MeshError");
    } catch (const MeshError& e) {
      CHECK(std::string(e.what()).find("cell 0") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_mesh_text("2 3 1\n0 0\n1 x\n0 1\n0 1 2\n"), MeshError);
  }

  TEST_CASE("non-conforming mesh is rejected") {
    // Vertex 4 hangs in the middle of the edge shared by the two large cells.
    const std::string text =
        "2 5 3\n0 0\n2 0\n0 2\n2 2\n1 1\n"
        "0 1 2\n1 3 4\n4 3 2\n";
    CHECK_THROWS_AS(parse_mesh_text(text), MeshError);
  }

  TEST_CASE("text round trip") {
    const auto m = generate_rectangle({0, 1}, {0, 2}, 3);
    const auto back = parse_mesh_text(format_mesh_text(m));
    CHECK(back.num_vertices() == m.num_vertices());
    CHECK(back.num_cells() == m.num_cells());
    CHECK(back.measure() == doctest::Approx(m.measure()));
  }

  TEST_CASE("shipped porescale meshes load") {
    const auto m2 = import_mesh(data_directory() / "porescale_2d.msh");
    CHECK(m2.dim() == 2);
    CHECK(m2.boundary_vertices().size() > 0);
    const auto tags = m2.vertex_tags();
    CHECK(std::count(tags.begin(), tags.end(), 1) > 0);

    const auto m3 = import_mesh(data_directory() / "ball_two_holes_3d.msh");
    CHECK(m3.dim() == 3);
    CHECK(m3.boundary_vertices().size() > 0);
    for (double v : m3.cell_volumes()) CHECK(v > 0);
  }

  TEST_CASE("point location") {
    const auto m = generate_rectangle({0, 1}, {0, 1}, 4);
    const PointLocator loc(m);
    const Point x{0.3, 0.7, 0};
    const int c = loc.locate(x);
    REQUIRE(c >= 0);
    CHECK(inside_closure(m, static_cast<std::size_t>(c), x));
    CHECK(loc.locate({1.5, 0.5, 0}) == -1);
  }
}

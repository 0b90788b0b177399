#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "pvi/assembly.hpp"
#include "pvi/model.hpp"

using namespace pvi;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

double max_asymmetry(const SparseMatrix& m) {
  const Eigen::MatrixXd d = dense(m);
  return (d - d.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("assembly") {
  TEST_CASE("1D mass matrix entries") {
    const auto mesh = generate_interval(0, 1, 4);
    const Eigen::MatrixXd M = dense(assemble_mass(mesh));
    const double h = 0.25;
    CHECK(M(2, 2) == doctest::Approx(2 * h / 3));
    CHECK(M(2, 3) == doctest::Approx(h / 6));
    CHECK(M(0, 0) == doctest::Approx(h / 3));
    CHECK(M.sum() == doctest::Approx(1.0));
  }

  TEST_CASE("single triangle mass matrix") {
    const auto mesh = parse_mesh_text("2 3 1\n0 0\n3 0\n0 2\n0 1 2\n");
    const double A = 3.0;
    const Eigen::MatrixXd M = dense(assemble_mass(mesh));
    Eigen::Matrix3d ref;
    ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    ref *= A / 12;
    CHECK((M - ref).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("mass row sums are lumped volumes and total is the measure") {
    const auto mesh = generate_rectangle({-1, 1}, {-1, 1}, 6);
    const SparseMatrix M = assemble_mass(mesh);
    const Eigen::VectorXd rows = M * Eigen::VectorXd::Ones(M.cols());
    const Eigen::VectorXd diag = lumped(M).diagonal();
    CHECK((rows - diag).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(rows.sum() == doctest::Approx(4.0).epsilon(1e-13));
  }

  TEST_CASE("weighted mass special cases") {
    const auto mesh = generate_rectangle({0, 1}, {0, 1}, 4);
    const SparseMatrix M = assemble_mass(mesh);
    const auto q = static_cast<Eigen::Index>(mesh.num_vertices());
    const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(q, 0.1, 2.0);

    const SparseMatrix one = assemble_weighted_mass(mesh, w, [](double) { return 1.0; });
    CHECK((dense(one) - dense(M)).cwiseAbs().maxCoeff() < 1e-14);

    const double N0 = 0.7;
    const SparseMatrix R = assemble_weighted_mass(mesh, Eigen::VectorXd::Constant(q, N0),
                                                  [&](double n) { return monod_P(n, N0); });
    CHECK((dense(R) - 0.5 * dense(M)).cwiseAbs().maxCoeff() < 1e-14);

    const SparseMatrix Z = assemble_weighted_mass(mesh, Eigen::VectorXd::Zero(q),
                                                  [&](double n) { return monod_P(n, N0); });
    CHECK(dense(Z).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("weighted mass integrates a linear weight exactly in 1D") {
    // w(x) = x on one cell [0, 1]: integral of x phi_i phi_j with phi_0 = 1 - x,
    // phi_1 = x gives [1/12, 1/12; 1/12, 1/4].
    const auto mesh = generate_interval(0, 1, 1);
    const Eigen::VectorXd w = (Eigen::VectorXd(2) << 0, 1).finished();
    const Eigen::MatrixXd R = dense(assemble_weighted_mass(mesh, w, [](double v) { return v; }));
    CHECK(R(0, 0) == doctest::Approx(1.0 / 12));
    CHECK(R(0, 1) == doctest::Approx(1.0 / 12));
    CHECK(R(1, 1) == doctest::Approx(1.0 / 4));
  }

  TEST_CASE("1D stiffness with constant coefficient") {
    const auto mesh = generate_interval(0, 1, 50);
    const double D = 0.5, h = 0.02;
    const auto q = static_cast<Eigen::Index>(mesh.num_vertices());
    const Eigen::MatrixXd A =
        dense(assemble_stiffness(mesh, Eigen::VectorXd::Zero(q), [&](double) { return D; }));
    CHECK(A(10, 10) == doctest::Approx(2 * D / h));
    CHECK(A(10, 11) == doctest::Approx(-D / h));
    CHECK(A(0, 0) == doctest::Approx(D / h));
  }

  TEST_CASE("stiffness kernel, symmetry and semidefiniteness") {
    const auto mesh = generate_rectangle({-1, 1}, {0, 1}, 5);
    const auto q = static_cast<Eigen::Index>(mesh.num_vertices());
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 0.03);
    Eigen::VectorXd B(q);
    for (Eigen::Index i = 0; i < q; ++i) B(i) = u(rng);
    const auto law = DiffusivityLaw::power_in_B(0.1, 0.001, 0.03, 8);
    const SparseMatrix A = assemble_stiffness(mesh, B, [&](double b) { return law(b); });
    CHECK((A * Eigen::VectorXd::Ones(q)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(max_asymmetry(A) < 1e-12);
    std::normal_distribution<double> g;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x(q);
      for (Eigen::Index i = 0; i < q; ++i) x(i) = g(rng);
      CHECK(x.dot(A * x) >= -1e-12);
    }
    const SparseMatrix M = assemble_mass(mesh);
    CHECK(max_asymmetry(M) < 1e-12);
    CHECK(dense(M).minCoeff() >= 0.0);
  }

  TEST_CASE("negative diffusivity names the cell") {
    const auto mesh = generate_interval(0, 1, 3);
    try {
      assemble_stiffness(mesh, Eigen::VectorXd::Zero(4), [](double) { return -1.0; });
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("cell 0") != std::string::npos);
    }
  }

  TEST_CASE("load vectors") {
    const auto mesh = generate_interval(0, 1, 8);
    const double h = 0.125;
    CHECK(assemble_load(mesh, [](const Point&, double) { return 0.0; }, 0).cwiseAbs().maxCoeff() ==
          0.0);
    const Eigen::VectorXd ones = assemble_load(mesh, [](const Point&, double) { return 1.0; }, 0);
    CHECK(ones(3) == doctest::Approx(h));
    CHECK(ones(0) == doctest::Approx(h / 2));
    CHECK(ones(8) == doctest::Approx(h / 2));

    const SourceFn step = [](const Point& x, double) {
      if (x[0] < 0.5) return 3.0;
      if (x[0] > 0.5) return -3.0;
      return 0.0;
    };
    const Eigen::VectorXd f = assemble_load(mesh, step, 0);
    for (int i = 0; i <= 8; ++i) CHECK(f(i) == doctest::Approx(-f(8 - i)).epsilon(1e-13));
    CHECK(f(1) > 0);
  }

  TEST_CASE("load of a time-dependent source uses the given time") {
    const auto mesh = generate_interval(0, 2, 4);
    const Eigen::VectorXd f = assemble_load(mesh, [](const Point&, double t) { return t; }, 3.0);
    CHECK(f.sum() == doctest::Approx(6.0));
  }

  TEST_CASE("nodal interpolation") {
    const auto mesh = generate_interval(0, 1, 4);
    const NodalField b = nodal_interpolate(
        mesh, [](const Point& x) { return 0.01 * std::abs(std::sin(std::numbers::pi * x[0])); });
    CHECK(b(2) == doctest::Approx(0.01));
    const NodalField chi = nodal_interpolate(mesh, interval_indicator(0.25, 0.75));
    CHECK(chi(1) == 1.0);
    CHECK(chi(0) == 0.0);
    const NodalField c = nodal_interpolate(mesh, [](const Point&) { return 2.5; });
    CHECK((c.array() == 2.5).all());
  }

  TEST_CASE("nested meshes integrate constants identically") {
    const auto coarse = generate_rectangle({-1, 1}, {-1, 1}, 3);
    const auto fine = generate_rectangle({-1, 1}, {-1, 1}, 9);
    const double mc = (assemble_mass(coarse) * Eigen::VectorXd::Constant(16, 0.3)).sum();
    const double mf = (assemble_mass(fine) * Eigen::VectorXd::Constant(100, 0.3)).sum();
    CHECK(mc == doctest::Approx(mf).epsilon(1e-13));
  }

  TEST_CASE("3D mass and stiffness on one tetrahedron") {
    const auto mesh = parse_mesh_text("3 4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\n");
    const Eigen::MatrixXd M = dense(assemble_mass(mesh));
    const double V = 1.0 / 6;
    CHECK(M(0, 0) == doctest::Approx(V / 10));
    CHECK(M(0, 1) == doctest::Approx(V / 20));
    const Eigen::MatrixXd A =
        dense(assemble_stiffness(mesh, Eigen::VectorXd::Zero(4), [](double) { return 1.0; }));
    // grad phi_1 = e_x, so A_11 = V and A_01 = -V.
    CHECK(A(1, 1) == doctest::Approx(V));
    CHECK(A(0, 1) == doctest::Approx(-V));
    CHECK(A(0, 0) == doctest::Approx(3 * V));
  }
}

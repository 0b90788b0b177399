#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pvi/oracle.hpp"

namespace pvi::oracle {

std::string Instance::describe() const {
  std::ostringstream out;
  out << "cells=" << cells << " D_B=" << D_B << " D_N=" << D_N << " kB=" << kappa_B
      << " kN=" << kappa_N << " N0=" << half_saturation << " dt=" << dt
      << " B*=" << B_star << " fB=" << f_B << " fN=" << f_N;
  return out.str();
}

namespace {

struct Dense1D {
  Eigen::MatrixXd M, A, R;
};

// Element matrices on a uniform grid; R uses two-point Gauss quadrature.
Dense1D assemble(int n, const std::vector<double>& N_prev, double kappa, double N0) {
  const double h = 1.0 / n;
  Dense1D d{Eigen::MatrixXd::Zero(n + 1, n + 1), Eigen::MatrixXd::Zero(n + 1, n + 1),
            Eigen::MatrixXd::Zero(n + 1, n + 1)};
  const double g = 0.5 / std::sqrt(3.0);
  const double xi[2] = {0.5 - g, 0.5 + g};
  for (int e = 0; e < n; ++e) {
    const int idx[2] = {e, e + 1};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        d.M(idx[a], idx[b]) += h / 6.0 * (a == b ? 2.0 : 1.0);
        d.A(idx[a], idx[b]) += (a == b ? 1.0 : -1.0) / h;
      }
    for (double s : xi) {
      const double phi[2] = {1.0 - s, s};
      double Nq = phi[0] * N_prev[e] + phi[1] * N_prev[e + 1];
      if (Nq < 0) Nq = 0;
      const double r = kappa * Nq / (Nq + N0);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) d.R(idx[a], idx[b]) += 0.5 * h * r * phi[a] * phi[b];
    }
  }
  return d;
}

}  // namespace

Solution solve_by_enumeration(const Instance& in) {
  const int n = in.cells;
  const int q = n - 1;
  if (q < 1 || q > 16) throw std::invalid_argument("enumeration needs 1..16 interior nodes");
  if (static_cast<int>(in.B_prev.size()) != n + 1 || static_cast<int>(in.N_prev.size()) != n + 1)
    throw std::invalid_argument("previous state has the wrong length");
  const double h = 1.0 / n;
  const Dense1D g = assemble(n, in.N_prev, in.kappa_B, in.half_saturation);
  const Dense1D u = assemble(n, in.N_prev, in.kappa_N, in.half_saturation);

  Eigen::VectorXd Bp(n + 1), Np(n + 1);
  for (int i = 0; i <= n; ++i) {
    Bp(i) = in.B_prev[i];
    Np(i) = in.N_prev[i];
  }
  const Eigen::MatrixXd KB =
      (g.M + in.dt * in.D_B * g.A - in.dt * g.R).block(1, 1, q, q);
  const Eigen::MatrixXd Mi = g.M.block(1, 1, q, q);
  const Eigen::VectorXd rhs =
      (g.M * Bp).segment(1, q) + Eigen::VectorXd::Constant(q, in.dt * in.f_B * h);

  Solution best;
  const double tol = 1e-12 * std::max(1.0, in.B_star);
  for (unsigned mask = 0; mask < (1u << q); ++mask) {
    Eigen::MatrixXd S(q, q);
    Eigen::VectorXd b = rhs;
    for (int j = 0; j < q; ++j) {
      if (mask & (1u << j)) {
        S.col(j) = -in.dt * Mi.col(j);
        b -= KB.col(j) * in.B_star;
      } else {
        S.col(j) = KB.col(j);
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd z = lu.solve(b);
    bool ok = true;
    for (int j = 0; j < q && ok; ++j)
      ok = (mask & (1u << j)) ? z(j) <= tol : z(j) <= in.B_star + tol;
    if (!ok) continue;
    if (++best.feasible_sets > 1) continue;
    best.B.assign(n + 1, 0.0);
    best.Lambda.assign(n + 1, 0.0);
    best.active.assign(n + 1, 0);
    for (int j = 0; j < q; ++j) {
      if (mask & (1u << j)) {
        best.B[j + 1] = in.B_star;
        best.Lambda[j + 1] = z(j);
        best.active[j + 1] = 1;
      } else {
        best.B[j + 1] = z(j);
      }
    }
  }
  if (best.feasible_sets == 0) throw std::runtime_error("no feasible active set found");

  Eigen::VectorXd B(n + 1);
  for (int i = 0; i <= n; ++i) B(i) = best.B[i];
  const Eigen::MatrixXd KN = (u.M + in.dt * in.D_N * u.A).block(1, 1, q, q);
  const Eigen::VectorXd rn = (u.M * Np - in.dt * (u.R * B)).segment(1, q) +
                             Eigen::VectorXd::Constant(q, in.dt * in.f_N * h);
  const Eigen::VectorXd N = KN.llt().solve(rn);
  best.N.assign(n + 1, 0.0);
  for (int j = 0; j < q; ++j) best.N[j + 1] = N(j);
  return best;
}

Instance random_instance(std::mt19937_64& rng) {
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  Instance in;
  in.cells = std::uniform_int_distribution<int>(2, 7)(rng);
  in.D_B = U(0.01, 1.0);
  in.D_N = U(0.05, 1.0);
  in.dt = U(0.01, 0.2);
  in.kappa_B = U(0.0, 0.9) / in.dt;
  in.kappa_N = U(0.0, 5.0);
  in.half_saturation = U(0.05, 1.0);
  in.B_star = U(0.02, 0.3);
  in.f_B = U(0.0, 10.0) * in.B_star;
  in.f_N = U(0.0, 1.0);
  in.B_prev.assign(in.cells + 1, 0.0);
  in.N_prev.assign(in.cells + 1, 0.0);
  for (int i = 1; i < in.cells; ++i) {
    in.B_prev[i] = U(0.5, 1.0) * in.B_star;
    in.N_prev[i] = U(0.0, 1.0);
  }
  return in;
}

}  // namespace pvi::oracle

#pragma once

#include <random>
#include <string>
#include <vector>

namespace pvi::oracle {

/// One backward-Euler step on (0, 1) with n uniform cells, homogeneous
/// Dirichlet data, constant diffusivities and sources, Monod kinetics lagged
/// at N_prev, and the upper bound B*. Nodal vectors have n + 1 entries.
struct Instance {
  int cells = 2;
  double D_B = 1.0, D_N = 1.0;
  double kappa_B = 0.0, kappa_N = 0.0, half_saturation = 1.0;
  double dt = 0.1;
  double B_star = 1.0;
  double f_B = 0.0, f_N = 0.0;
  std::vector<double> B_prev, N_prev;

  std::string describe() const;
};

struct Solution {
  std::vector<double> B, Lambda, N;
  std::vector<char> active;  // nodes with B = B*
  int feasible_sets = 0;
};

/// Solves the step by trying every active set of the interior nodes and
/// keeping the one whose solution satisfies B <= B* off the set and
/// Lambda <= 0 on it. Dense matrices, at most 16 interior nodes.
Solution solve_by_enumeration(const Instance& instance);

/// Random instance with 1..6 interior nodes and kappa_B dt < 0.9, so the
/// biofilm step matrix is positive definite and the solution is unique.
Instance random_instance(std::mt19937_64& rng);

struct Comparison {
  double max_diff_B = 0.0, max_diff_Lambda = 0.0, max_diff_N = 0.0;
  int active_nodes = 0;
  bool agree = false;
  std::string message;
};

/// Solves the instance with the library's semismooth Newton step and
/// compares against the enumeration at tolerance 1e-8. With inject_fault the
/// Newton multiplier is negated before comparing.
Comparison compare_with_newton(const Instance& instance, bool inject_fault = false);

}  // namespace pvi::oracle

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "pvi/timeloop.hpp"

using namespace pvi;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

RunConfig config(MeshSource mesh, double dt, double T, std::vector<double> samples = {}) {
  RunConfig c;
  c.mesh = std::move(mesh);
  c.dt = dt;
  c.final_time = T;
  c.sample_times = std::move(samples);
  return c;
}

}  // namespace

TEST_SUITE("timeloop") {
  TEST_CASE("step planning") {
    const StepPlan p = plan_steps(0.005, 0.1, {0.05, 0.1});
    CHECK(p.steps == 20);
    CHECK(p.sample_steps == std::vector<int>{10, 20});
    CHECK(plan_steps(0.1 / 17, 0.3, {0.1, 0.2, 0.3}).sample_steps == std::vector<int>{17, 34, 51});
    CHECK_THROWS_AS(plan_steps(0.0, 1.0, {}), ConfigError);
    CHECK_THROWS_AS(plan_steps(0.3, 1.0, {}), ConfigError);
    CHECK_THROWS_AS(plan_steps(0.1, 1.0, {0.25}), ConfigError);
    CHECK_THROWS_AS(plan_steps(0.1, 1.0, {1.5}), ConfigError);
  }

  TEST_CASE("initial states") {
    const Experiment e1 = builtin_experiment("ex5_1");
    const auto m1 = generate_interval(0, 1, 50);
    const SystemState s1 = initialize(e1.model, m1);
    CHECK(s1.B.maxCoeff() == doctest::Approx(0.01));
    CHECK(s1.B(25) == doctest::Approx(0.01));
    CHECK(s1.Lambda.cwiseAbs().maxCoeff() == 0.0);

    const Experiment e4 = builtin_experiment("ex5_4");
    const auto m4 = generate_rectangle({-1, 1}, {-1, 1}, 20);
    const SystemState s4 = initialize(e4.model, m4);
    for (std::size_t v = 0; v < m4.num_vertices(); ++v) {
      const Point& x = m4.vertex(v);
      if (x[0] > -0.75 + 1e-9 && x[0] < -1e-9 && x[1] > -0.5 + 1e-9 && x[1] < 0.5 - 1e-9)
        CHECK(s4.B(static_cast<Eigen::Index>(v)) == 0.3);
      if (x[0] > 1e-9 || x[1] > 0.5 + 1e-9) CHECK(s4.B(static_cast<Eigen::Index>(v)) == 0.0);
    }
  }

  TEST_CASE("initial data above the bound names the node") {
    ModelSpec m = builtin_experiment("ex5_1").model;
    m.initial_B = [](const Point& x, int) { return x[0] > 0.5 ? 0.05 : 0.0; };
    try {
      initialize(m, generate_interval(0, 1, 4));
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find("node 3") != std::string::npos);
    }
  }

  TEST_CASE("total biomass") {
    const auto line = generate_interval(0, 1, 7);
    CHECK(total_biomass(line, Eigen::VectorXd::Constant(8, 0.02)) == doctest::Approx(0.02));
    const auto sq = generate_rectangle({-1, 1}, {-1, 1}, 5);
    CHECK(total_biomass(sq, Eigen::VectorXd::Constant(36, 0.3)) == doctest::Approx(1.2));
    // Exact for linear fields: integral of x over (0, 1) is 1/2.
    Eigen::VectorXd x(8);
    for (int i = 0; i < 8; ++i) x(i) = i / 7.0;
    CHECK(total_biomass(line, x) == doctest::Approx(0.5));
  }

  TEST_CASE("pure diffusion conserves both totals") {
    const auto B0 = [](const Point& x, int) { return 0.2 + 0.1 * std::cos(3 * x[0]) * x[1]; };
    const auto N0 = [](const Point& x, int) { return 1.0 + x[0] * x[0]; };
    const ModelSpec m =
        pure_diffusion_model(DiffusivityLaw::linear_in_B(0.5, 0.05, 1.0),
                             DiffusivityLaw::constant(0.3), B0, N0);
    CHECK(m.bounds.upper == inf);
    const RunConfig c = config(MeshSource::rectangle({-1, 1}, {-1, 1}, 10), 0.01, 0.2);
    const auto mesh = c.mesh.build();
    const Trajectory t = run(m, mesh, c);
    REQUIRE(t.series.size() == 21);
    const double b0 = t.series.front().total_B, n0 = t.series.front().total_N;
    for (const StepRecord& r : t.series) {
      CHECK(std::abs(r.total_B - b0) <= 1e-10 * std::abs(b0));
      CHECK(std::abs(r.total_N - n0) <= 1e-10 * std::abs(n0));
    }
  }

  TEST_CASE("consumption only lowers the nutrient total") {
    Experiment e = builtin_experiment("ex5_4");
    e.model.monod.kappa_B = 0.0;
    e.run.final_time = 0.2;
    e.run.sample_times = {};
    const Trajectory t = run(e.model, e.run.mesh.build(), e.run);
    for (std::size_t k = 1; k < t.series.size(); ++k)
      CHECK(t.series[k].total_N <= t.series[k - 1].total_N + 1e-12);
    CHECK(t.series.back().total_N < t.series.front().total_N);
  }

  TEST_CASE("ex5_1 activates early and stays active") {
    const Experiment e = builtin_experiment("ex5_1");
    const Trajectory t = run(e.model, e.run.mesh.build(), e.run);
    REQUIRE(t.series.size() == 21);
    int first = -1;
    for (const StepRecord& r : t.series) {
      if (first < 0 && r.active_nodes > 0) first = r.step;
      if (first >= 0) CHECK(r.active_nodes > 0);
    }
    CHECK(first >= 1);
    CHECK(t.series[static_cast<std::size_t>(first)].t <= 0.02 + 1e-12);
    CHECK(t.captures.size() == 2);
    CHECK(t.at(0.05) != nullptr);
    CHECK(t.at(0.07) == nullptr);
  }

  TEST_CASE("zero steps keep only the initial state") {
    Experiment e = builtin_experiment("ex5_1");
    e.run.final_time = 0.0;
    e.run.sample_times = {0.0};
    const Trajectory t = run(e.model, e.run.mesh.build(), e.run);
    CHECK(t.series.size() == 1);
    CHECK(t.captures.size() == 1);
  }

  TEST_CASE("solver failure keeps the partial trajectory") {
    Experiment e = builtin_experiment("ex5_1");
    e.run.solver.max_iter = 1;
    try {
      run(e.model, e.run.mesh.build(), e.run);
      FAIL("expected RunFailure");
    } catch (const RunFailure& f) {
      CHECK(f.step() >= 2);
      CHECK(f.partial().series.size() == static_cast<std::size_t>(f.step()));
    }
  }

  TEST_CASE("identical runs give identical trajectories") {
    const Experiment e = builtin_experiment("ex5_2_iv");
    RunConfig c = e.run;
    c.final_time = 0.1;
    c.sample_times = {0.1};
    const auto mesh = c.mesh.build();
    const Trajectory a = run(e.model, mesh, c), b = run(e.model, mesh, c);
    CHECK((a.final_state.B - b.final_state.B).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.final_state.N - b.final_state.N).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("free-boundary activity") {
    const auto mesh = generate_interval(0, 1, 4);
    std::vector<char> none(5, 0), one(5, 0);
    one[2] = 1;
    CHECK(activity_measure(mesh, none, none) == 0.0);
    // Node 2 activates the two cells touching it.
    CHECK(activity_measure(mesh, none, one) == doctest::Approx(0.5));
    CHECK(activity_measure(mesh, one, one) == 0.0);

    Trajectory t;
    StepRecord r;
    for (int n = 0; n < 8; ++n) {
      r.step = n;
      r.dn_sum = n >= 2 ? 0.25 : 0.0;
      t.series.push_back(r);
    }
    const ActivitySummary s = free_boundary_activity(t);
    CHECK(s.total == 0.25);
    CHECK(s.plateaued);
    CHECK(s.running_sum.size() == 8);
  }

  TEST_CASE("active node classification") {
    SystemState s{(Eigen::VectorXd(3) << 0.02, 0.01, 0.02).finished(),
                  (Eigen::VectorXd(3) << -1.0, 0.0, 0.0).finished(), Eigen::VectorXd::Zero(3),
                  0};
    const Bounds b{-inf, 0.02};
    const auto a = active_nodes(b, std::vector<char>(3, 0), s);
    CHECK(a == std::vector<char>{1, 0, 1});
    CHECK(active_nodes(b, std::vector<char>{1, 0, 0}, s) == std::vector<char>{0, 0, 1});
  }
}

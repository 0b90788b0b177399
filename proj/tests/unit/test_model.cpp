#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pvi/config.hpp"
#include "pvi/model.hpp"

using namespace pvi;

TEST_SUITE("model") {
  TEST_CASE("Monod factor") {
    CHECK(monod_P(0.0, 0.7) == 0.0);
    CHECK(monod_P(0.7, 0.7) == doctest::Approx(0.5));
    CHECK(monod_P(0.16, 0.16) == doctest::Approx(0.5));
    CHECK(monod_P(-0.3, 0.16) == 0.0);
    CHECK(monod_P_derivative(0.3, 0.2) == doctest::Approx(0.2 / 0.25));
  }

  TEST_CASE("Monod factor is monotone and below one") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 100.0);
    for (int k = 0; k < 1000; ++k) {
      const double a = u(rng), b = u(rng);
      const double lo = std::min(a, b), hi = std::max(a, b);
      CHECK(monod_P(lo, 0.5) <= monod_P(hi, 0.5));
      CHECK(monod_P(hi, 0.5) < 1.0);
    }
  }

  TEST_CASE("reaction terms") {
    const MonodSpec ex51{2500.0, 1.0, 0.7};
    CHECK(reaction_F(0.0, 0.4, ex51) == 0.0);
    CHECK(reaction_G(0.0, 0.4, ex51) == 0.0);
    CHECK(reaction_F(0.01, 0.7, ex51) == doctest::Approx(12.5));
    const MonodSpec table3{1.8, 18.0, 0.16};
    CHECK(reaction_G(0.03, 0.16, table3) == doctest::Approx(-0.27));
  }

  TEST_CASE("growth is linear in B") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    const MonodSpec m{3.0, 1.5, 0.4};
    for (int k = 0; k < 100; ++k) {
      const double a = u(rng), B = u(rng), N = u(rng);
      CHECK(reaction_F(a * B, N, m) == doctest::Approx(a * reaction_F(B, N, m)));
    }
  }

  TEST_CASE("diffusivity laws") {
    CHECK(DiffusivityLaw::constant(0.1)(0.5) == 0.1);
    const auto lin = DiffusivityLaw::linear_in_B(0.1, 0.001, 0.03);
    CHECK(lin(0.03) == doctest::Approx(0.1));
    CHECK(lin(0.0) == doctest::Approx(0.001));
    const double d_star = 0.01;
    const auto t3 = DiffusivityLaw::linear_in_B(d_star, 1e-4 * d_star, 0.12);
    CHECK(t3(0.06) == doctest::Approx(0.0050005));
    const auto pw = DiffusivityLaw::power_in_B(0.1, 0.001, 0.03, 8);
    CHECK(pw(0.015) == doctest::Approx(0.099 * std::pow(0.5, 8) + 0.001));
  }

  TEST_CASE("diffusivity stays within its range") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const DiffusivityLaw laws[] = {DiffusivityLaw::linear_in_B(0.1, 0.001, 0.03),
                                   DiffusivityLaw::power_in_B(0.1, 0.001, 0.03, 8)};
    for (const auto& law : laws)
      for (int k = 0; k < 1000; ++k) {
        const double d = law(u(rng));
        CHECK(d >= law.min_value());
        CHECK(d <= law.max_value());
      }
  }

  TEST_CASE("invalid data") {
    CHECK_THROWS_AS(DiffusivityLaw::constant(0.0), ModelError);
    CHECK_THROWS_AS(DiffusivityLaw::linear_in_B(0.001, 0.1, 0.03), ModelError);
    CHECK_THROWS_AS((MonodSpec{1, 1, 0}.validate()), ModelError);
    ModelSpec m = builtin_experiment("ex5_1").model;
    m.bounds.lower = 1.0;
    m.bounds.upper = 0.5;
    CHECK_THROWS_AS(m.validate(), ModelError);
  }

  TEST_CASE("builtin experiments") {
    const Experiment e1 = builtin_experiment("ex5_1");
    CHECK(e1.model.bounds.upper == 0.02);
    CHECK(e1.model.diffusivity_B(0.01) == 0.5);
    CHECK(e1.model.diffusivity_N(0.01) == 0.1);
    CHECK(e1.model.bc == BoundaryCondition::DirichletZero);

    const Experiment e2 = builtin_experiment("ex5_2_iv");
    CHECK(e2.model.diffusivity_B.kind() == DiffusivityLaw::Kind::PowerInB);
    CHECK(e2.model.diffusivity_B.max_value() == doctest::Approx(0.1));
    CHECK(e2.model.diffusivity_B.min_value() == doctest::Approx(0.001));
    CHECK(e2.model.bounds.upper == 0.03);

    const Experiment a1 = builtin_experiment("appendix_A1");
    CHECK(a1.model.bounds.lower == -0.04);
    CHECK(a1.model.bounds.upper == 0.06);
    CHECK(a1.model.diffusivity_B(0) == 0.5);
    CHECK_FALSE(a1.model.nutrient_enabled);
    CHECK(a1.model.initial_B({0.5, 0, 0}, 0) == doctest::Approx(0.04));

    const Experiment e5 = builtin_experiment("ex5_5");
    CHECK(e5.model.bounds.upper == 0.12);
    CHECK(e5.model.monod.kappa_B == 1.8);
    CHECK(e5.model.monod.kappa_N == 18.0);
    CHECK(e5.model.monod.half_saturation == 0.16);
    CHECK(e5.model.diffusivity_N(0) == 20.0);
    CHECK(e5.model.initial_B({0, 0, 0}, 1) == 0.03);
    CHECK(e5.model.initial_B({0, 0, 0}, 0) == 0.0);
    CHECK(e5.model.initial_N({0, 0, 0}, 0) == 1.0);

    CHECK(builtin_experiment("appendix_A2").model.bounds.upper == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("every named experiment builds and validates") {
    for (const auto& name : experiment_names()) {
      CAPTURE(name);
      const Experiment e = builtin_experiment(name);
      CHECK(e.model.name == name);
      CHECK_NOTHROW(e.model.validate());
    }
  }

  TEST_CASE("unknown experiment lists the available names") {
    try {
      builtin_experiment("ex9");
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find("ex5_1") != std::string::npos);
    }
  }

  TEST_CASE("indicator edge conventions") {
    CHECK(interval_indicator(0.25, 0.75)({0.25, 0, 0}) == 1.0);
    CHECK(interval_indicator(0.25, 0.75, EdgeValue::Open)({0.25, 0, 0}) == 0.0);
    CHECK(interval_indicator(0.25, 0.75, EdgeValue::Midpoint)({0.25, 0, 0}) == 0.5);
    CHECK(box_indicator({-0.75, 0}, {-0.5, 0.5}, EdgeValue::Midpoint)({0, 0.5, 0}) == 0.25);
    CHECK(disc_indicator(0.75)({0.75, 0, 0}) == 1.0);
    CHECK(disc_indicator(0.75)({0.8, 0, 0}) == 0.0);
  }
}

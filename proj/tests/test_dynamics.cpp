#include <stdexcept>
#include <cmath>
#include <random>

#include "doctest.h"
#include "isacdt/dynamics.hpp"

using namespace isacdt;

TEST_SUITE("dynamics") {
  TEST_CASE("cos(3x) = 0 is a fixed point at rest") {
    const double x = -std::acos(-1.0) / 6.0;
    const AgvState next = step({x, 0.0}, 0.0, {0.0, 0.0});
    CHECK(next.x == doctest::Approx(x).epsilon(1e-15));
    CHECK(std::abs(next.v) < 1e-18);
  }

  TEST_CASE("full force at the origin") {
    const AgvState next = step({0.0, 0.0}, 1.0, {0.0, 0.0});
    CHECK(next.x == 0.0);
    CHECK(next.v == doctest::Approx(-0.001).epsilon(1e-12));
  }

  TEST_CASE("position advances with the pre-update velocity") {
    const AgvState next = step({0.3, 0.05}, 0.0, {0.0, 0.0});
    CHECK(next.x == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(next.v == doctest::Approx(0.048445975079323342).epsilon(1e-14));
  }

  TEST_CASE("left wall is inelastic") {
    const AgvState next = step({-1.19, -0.05}, -1.0, {0.0, 0.0});
    CHECK(next.x == -1.2);
    CHECK(next.v == 0.0);
  }

  TEST_CASE("force and state are clamped") {
    const AgvState a = step({0.0, 0.0}, 5.0, {0.0, 0.0});
    const AgvState b = step({0.0, 0.0}, 1.0, {0.0, 0.0});
    CHECK(a == b);
    const AgvState c = step({0.59, 0.069}, 1.0, {0.0, 0.05});
    CHECK(c.x <= 0.6);
    CHECK(c.v <= 0.07);
  }

  TEST_CASE("goal reward") {
    const AgvState prev{0.4, 0.01};
    auto r = goal_reward(prev, 0.0, {0.5, 0.01});
    CHECK(r.done);
    CHECK(r.reward == 100.0);
    r = goal_reward(prev, 1.0, {0.0, 0.0});
    CHECK_FALSE(r.done);
    CHECK(r.reward == doctest::Approx(-0.1));
    r = goal_reward(prev, 0.0, {0.449, 0.0});
    CHECK_FALSE(r.done);
    CHECK(r.reward == 0.0);
  }

  TEST_CASE("stepping is deterministic and stays in the box") {
    Rng rng(7);
    std::uniform_real_distribution<double> ux(-1.2, 0.6), uv(-0.07, 0.07), uf(-1.5, 1.5), un(-0.1, 0.1);
    for (int i = 0; i < 10000; ++i) {
      const AgvState s{ux(rng), uv(rng)};
      const double f = uf(rng);
      const std::array<double, 2> n{un(rng), un(rng)};
      const AgvState a = step(s, f, n);
      const AgvState b = step(s, f, n);
      REQUIRE(a == b);
      REQUIRE(a.x >= -1.2);
      REQUIRE(a.x <= 0.6);
      REQUIRE(std::abs(a.v) <= 0.07);
    }
  }

  TEST_CASE("unforced motion from rest never exceeds the speed limit") {
    for (double x0 = -1.2; x0 <= 0.6; x0 += 0.05) {
      AgvState s{x0, 0.0};
      double vmax = 0.0;
      for (int t = 0; t < 2000; ++t) {
        s = step(s, 0.0, {0.0, 0.0});
        vmax = std::max(vmax, std::abs(s.v));
      }
      CHECK(vmax <= 0.07);
    }
  }

  TEST_CASE("process noise has the configured covariance") {
    DynamicsConstants k;
    k.process_noise_cov = {4e-6, 1e-6, 1e-6, 1e-6};
    Rng rng(3);
    const int n = 200000;
    double sxx = 0, sxv = 0, svv = 0;
    for (int i = 0; i < n; ++i) {
      const auto u = sample_process_noise(k, rng);
      sxx += u[0] * u[0];
      sxv += u[0] * u[1];
      svv += u[1] * u[1];
    }
    CHECK(sxx / n == doctest::Approx(4e-6).epsilon(0.02));
    CHECK(sxv / n == doctest::Approx(1e-6).epsilon(0.05));
    CHECK(svv / n == doctest::Approx(1e-6).epsilon(0.02));
    k.process_noise_cov = {1.0, 2.0, 2.0, 1.0};
    CHECK_THROWS_AS(sample_process_noise(k, rng), std::invalid_argument);
  }
}

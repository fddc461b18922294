#include <stdexcept>
#include <algorithm>
#include <random>

#include "doctest.h"
#include "isacdt/allocator.hpp"
#include "isacdt/config.hpp"

using namespace isacdt;

TEST_SUITE("allocator") {
  TEST_CASE("communication priority") {
    auto d = allocate(512, 600, 100, AllocMode::CommPriority);
    CHECK(d.n_c == 512);
    CHECK(d.n_s == 0);
    CHECK_FALSE(d.feasible_c);
    d = allocate(512, 300, 300, AllocMode::CommPriority);
    CHECK(d.n_c == 300);
    CHECK(d.n_s == 212);
    CHECK(d.feasible_c);
    CHECK_FALSE(d.feasible_s);
    d = allocate(512, 200, 100, AllocMode::CommPriority);
    CHECK(d.n_c == 200);
    CHECK(d.n_s == 100);
    CHECK(d.feasible_c);
    CHECK(d.feasible_s);
  }

  TEST_CASE("sensing priority mirrors it") {
    auto d = allocate(512, 100, 600, AllocMode::SensingPriority);
    CHECK(d.n_s == 512);
    CHECK(d.n_c == 0);
    d = allocate(512, 300, 300, AllocMode::SensingPriority);
    CHECK(d.n_s == 300);
    CHECK(d.n_c == 212);
  }

  TEST_CASE("equal split") {
    for (int dc : {0, 10, 300, 700})
      for (int ds : {0, 50, 513}) {
        const auto d = allocate(512, dc, ds, AllocMode::Equal);
        CHECK(d.n_s == 256);
        CHECK(d.n_c == 256);
      }
  }

  TEST_CASE("fuzzed capacity and feasibility flags") {
    Rng rng(41);
    std::uniform_int_distribution<int> ud(0, 1200);
    for (int i = 0; i < 100000; ++i) {
      const int dc = ud(rng), ds = ud(rng);
      for (AllocMode m : {AllocMode::CommPriority, AllocMode::SensingPriority, AllocMode::Equal}) {
        const auto d = allocate(512, dc, ds, m);
        REQUIRE(d.n_s >= 0);
        REQUIRE(d.n_c >= 0);
        REQUIRE(d.n_s + d.n_c <= 512);
        REQUIRE(d.feasible_s == (d.n_s >= ds));
        REQUIRE(d.feasible_c == (d.n_c >= dc));
        if (m == AllocMode::CommPriority && dc <= 512) REQUIRE(d.feasible_c);
        if (m == AllocMode::SensingPriority && ds <= 512) REQUIRE(d.feasible_s);
      }
      if (dc + ds <= 512) {
        const auto a = allocate(512, dc, ds, AllocMode::CommPriority);
        const auto b = allocate(512, dc, ds, AllocMode::SensingPriority);
        REQUIRE(a.n_s == b.n_s);
        REQUIRE(a.n_c == b.n_c);
      }
    }
  }

  TEST_CASE("mode names") {
    CHECK(parse_alloc_mode("CP") == AllocMode::CommPriority);
    CHECK(parse_alloc_mode("sp") == AllocMode::SensingPriority);
    CHECK(parse_alloc_mode("equal") == AllocMode::Equal);
    CHECK(to_string(AllocMode::SensingPriority) == "sp");
    CHECK_THROWS_AS(parse_alloc_mode("both"), std::invalid_argument);
  }

  TEST_CASE("weighted allocation objective") {
    P1Weights w{0.6, 0.0, 0.3};
    CHECK(p1_objective(w, 1e-4, 4e-4, 100, 300, 1.2e9, 1e9) == 0.0);
    w = {1.0, 0.0, 0.0};
    CHECK(p1_objective(w, 4e-4 + 0.01, 4e-4, 0, 0, 0, 1e9) == doctest::Approx(0.01));
    Rng rng(43);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1000; ++i) {
      const P1Weights r{u(rng), u(rng), u(rng)};
      const double xv = u(rng) * 1e-3, xb = u(rng) * 1e-3, rate = u(rng) * 2e9;
      const int ns = static_cast<int>(u(rng) * 256), nc = static_cast<int>(u(rng) * 256);
      const double expected =
          r.alpha1 * std::max(xv - xb, 0.0) + r.alpha2 * (ns + nc) + r.alpha3 * std::max(1e9 - rate, 0.0);
      REQUIRE(p1_objective(r, xv, xb, ns, nc, rate, 1e9) == doctest::Approx(expected).epsilon(1e-14));
      REQUIRE(p1_objective(r, xv * 0.5, xb, ns, nc, rate, 1e9) <= p1_objective(r, xv, xb, ns, nc, rate, 1e9));
    }
  }
}

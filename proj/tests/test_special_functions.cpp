#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "riskcap/normal.hpp"
#include "riskcap/riskmeasures.hpp"

using namespace riskcap;
using Catch::Approx;

TEST_CASE("normal_quantile against the tail oracle") {
  CHECK(normal_quantile(0.01) ==
        Approx(-2.3263478740408408).margin(1e-10));
  CHECK(normal_quantile(0.05) ==
        Approx(-1.6448536269514722).margin(1e-10));
  // oracle recomputation
  for (double a : {0.01, 0.05, 0.2, 1e-6, 1e-10}) {
    CHECK(normal_quantile(a) ==
          Approx(fixtures::normal_quantile_oracle(a)).margin(1e-10));
  }
  CHECK_THROWS_AS(normal_quantile(0.5), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
  CHECK(normal_quantile(0.499999) < 0.0);
}

TEST_CASE("mills_ratio values and bounds") {
  CHECK(mills_ratio(2.0) ==
        Approx(0.42136922928805447).epsilon(1e-12));
  // at y = |q_0.01| the tail is alpha sqrt(2 pi) exactly
  const double q = -normal_quantile(0.01);
  CHECK(mills_ratio(q) ==
        Approx(0.01 * kSqrt2Pi * std::exp(0.5 * q * q)).epsilon(1e-11));
  CHECK(mills_ratio(q) == Approx(0.37520436157295173).epsilon(1e-12));

  SECTION("large-argument branch") {
    const double v = mills_ratio(40.0);
    CHECK(v > 1.0 / 40.0 - 1.0 / (40.0 * 40.0 * 40.0));
    CHECK(v < 1.0 / 40.0);
    CHECK(v == Approx(static_cast<double>(fixtures::mills_asymptotic(40.0L)))
                   .epsilon(1e-12));
    CHECK(v == Approx(0.024984404205720571).epsilon(1e-12));
  }
  SECTION("bounds strict on a log grid") {
    for (int i = 0; i <= 300; ++i) {
      const double y = std::exp(std::log(1e-2) +
                                (std::log(50.0) - std::log(1e-2)) * i / 300.0);
      const double v = mills_ratio(y);
      CHECK(v < 1.0 / y);
      CHECK(v > 1.0 / y - 1.0 / (y * y * y));
    }
  }
  SECTION("continuity across the branch seam") {
    const double lo = mills_ratio(std::nextafter(8.0, 0.0));
    const double hi = mills_ratio(8.0);
    CHECK(lo == Approx(hi).epsilon(1e-12));
  }
  SECTION("oracle agreement across the range") {
    for (double y : {0.0, 0.3, 1.0, 2.5, 5.0, 7.9, 8.1, 12.0, 25.0}) {
      CHECK(mills_ratio(y) ==
            Approx(static_cast<double>(fixtures::mills_oracle(y)))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("F_alpha") {
  const double q = -normal_quantile(0.01);
  CHECK(F_alpha(q, 0.01) == 1.0);
  SECTION("tail ratio against the oracle") {
    const double z = q + 0.25;
    const double expected = static_cast<double>(
        fixtures::tail_oracle(z) / fixtures::tail_oracle(q));
    CHECK(F_alpha(z, 0.01) == Approx(expected).epsilon(1e-12));
    CHECK(F_alpha(z, 0.01) == Approx(0.49925066100396507).epsilon(1e-10));
  }
  SECTION("decreasing in z, to zero") {
    double prev = 1.0;
    for (int i = 1; i <= 40; ++i) {
      const double v = F_alpha(q + 0.25 * i, 0.01);
      CHECK(v < prev);
      prev = v;
    }
    CHECK(F_alpha(q + 30.0, 0.01) < 1e-100);
  }
  CHECK_THROWS_AS(F_alpha(q - 0.1, 0.01), std::domain_error);
}

TEST_CASE("iota_alpha") {
  const double q = -normal_quantile(0.01);
  CHECK(iota_alpha(0.0, 0.01) ==
        Approx(1.0 / 0.37520436157295173).epsilon(1e-12));
  CHECK(iota_alpha(0.0, 0.01) == Approx(2.6652142203458048).epsilon(1e-12));
  SECTION("recomputed by the tail oracle at u = 1") {
    const double expected =
        static_cast<double>(1.0L / fixtures::mills_oracle(q + 1.0)) - 1.0;
    CHECK(iota_alpha(1.0, 0.01) == Approx(expected).epsilon(1e-12));
  }
  SECTION("lower bound |q_alpha|") {
    for (double a : {0.01, 0.05, 0.1, 1e-6}) {
      const double qa = -normal_quantile(a);
      for (int i = 0; i <= 200; ++i) {
        const double u = 20.0 * i / 200.0;
        CHECK(iota_alpha(u, a) >= qa - 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(iota_alpha(-0.5, 0.01), std::domain_error);
}

TEST_CASE("normal tail helpers are stable at large arguments") {
  CHECK(log_normal_tail(40.0) ==
        Approx(std::log(0.024984404205720571) - 800.0).epsilon(1e-12));
  CHECK(normal_cdf(0.0) == Approx(0.5).margin(1e-16));
  CHECK(normal_tail(0.0) == Approx(kSqrt2Pi / 2).epsilon(1e-14));
  // round trip through inverse_normal_cdf far in the tail
  for (double p : {1e-15, 1e-10, 1e-4, 0.3, 0.5, 0.97}) {
    CHECK(normal_cdf(inverse_normal_cdf(p)) == Approx(p).epsilon(1e-11));
  }
}

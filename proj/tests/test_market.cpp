#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "riskcap/market.hpp"

using namespace riskcap;
using Catch::Approx;

TEST_CASE("theta derivation on the canonical markets") {
  const auto m1 = fixtures::make_m1();
  CHECK(m1.theta_at(0.0)[0] == Approx(0.25).margin(1e-15));

  const auto m0 = fixtures::make_m0();
  CHECK(m0.theta_at(0.5)[0] == Approx(0.0).margin(1e-15));
  CHECK(m0.theta_norm_sq(1.0) == 0.0);

  // d=2 identity volatility: theta = mu - r 1
  MarketModel m2d(1.0, 2,
                  {{0.0, 1.0, 0.01, {0.04, 0.06}, {1.0, 0.0, 0.0, 1.0}}});
  CHECK(m2d.theta_at(0.3)[0] == Approx(0.03).margin(1e-15));
  CHECK(m2d.theta_at(0.3)[1] == Approx(0.05).margin(1e-15));
}

TEST_CASE("theta solves a genuinely coupled sigma") {
  // sigma = [[0.2, 0.05], [0.0, 0.3]], mu - r = (0.03, 0.06)
  MarketModel m(1.0, 2,
                {{0.0, 1.0, 0.01, {0.04, 0.07}, {0.2, 0.05, 0.0, 0.3}}});
  // solve by hand: 0.3 th2 = 0.06 -> th2 = 0.2; 0.2 th1 + 0.05*0.2 = 0.03
  const auto& th = m.theta_at(0.0);
  CHECK(th[1] == Approx(0.2).margin(1e-14));
  CHECK(th[0] == Approx((0.03 - 0.01) / 0.2).margin(1e-14));
}

TEST_CASE("singular sigma is rejected at construction") {
  CHECK_THROWS_AS(MarketModel(1.0, 2,
                              {{0.0, 1.0, 0.01, {0.04, 0.07},
                                {0.2, 0.1, 0.4, 0.2}}}),
                  config_error);
  CHECK_THROWS_AS(MarketModel(1.0, 1, {{0.0, 1.0, 0.05, {0.1}, {0.0}}}),
                  config_error);
}

TEST_CASE("schedule must tile the horizon") {
  CHECK_THROWS_AS(MarketModel(1.0, 1,
                              {{0.0, 0.4, 0.05, {0.1}, {0.2}},
                               {0.5, 1.0, 0.05, {0.1}, {0.2}}}),
                  config_error);
  CHECK_THROWS_AS(MarketModel(1.0, 1, {{0.0, 0.9, 0.05, {0.1}, {0.2}}}),
                  config_error);
}

TEST_CASE("discount_R accumulates the rate exactly") {
  const auto m1 = fixtures::make_m1();
  CHECK(m1.discount_R(1.0) == Approx(0.05).epsilon(1e-15));
  CHECK(m1.discount_R(0.0) == 0.0);

  MarketModel two(1.0, 1,
                  {{0.0, 0.5, 0.02, {0.02}, {0.2}},
                   {0.5, 1.0, 0.04, {0.04}, {0.2}}});
  CHECK(two.discount_R(1.0) == Approx(0.03).epsilon(1e-15));
  CHECK(two.discount_R(0.75) == Approx(0.01 + 0.25 * 0.04).epsilon(1e-15));
}

TEST_CASE("omega endpoints are exact") {
  const auto m1 = fixtures::make_m1();
  CHECK(m1.omega(0.0) == 2.0);
  CHECK(m1.omega(1.0) == 1.0);
  MarketModel m3t(3.0, 1, {{0.0, 3.0, 0.0, {0.0}, {0.2}}});
  CHECK(m3t.omega(1.5) == 2.5);
  CHECK(m3t.omega(0.0) == 3.0 + 1.0);
  CHECK(m3t.omega(3.0) == 1.0);
}

TEST_CASE("integrate matches closed forms") {
  const auto m1 = fixtures::make_m1();
  SECTION("|theta|^2 on M1") {
    const double v =
        m1.integrate([&](double t) { return m1.theta_sq_at(t); }, 0.0, 1.0);
    CHECK(v == Approx(0.0625).epsilon(1e-13));
  }
  SECTION("zero integrand") {
    CHECK(m1.integrate([](double) { return 0.0; }, 0.0, 1.0) == 0.0);
  }
  SECTION("omega integral") {
    const double v = m1.integrate([&](double t) { return m1.omega(t); }, 0.0,
                                  1.0);
    CHECK(v == Approx(1.5).epsilon(1e-14));
    CHECK(omega_integral(m1, 0.0, 1.0) == Approx(1.5).epsilon(1e-15));
  }
  SECTION("piecewise-constant integrand agrees with the piece sum") {
    const auto m3 = fixtures::make_m3();
    const double v =
        m3.integrate([&](double t) { return m3.theta_sq_at(t); }, 0.0, 1.0);
    CHECK(v == Approx(m3.theta_norm_sq(1.0)).epsilon(1e-12));
  }
  SECTION("smooth non-polynomial integrand") {
    const double v =
        m1.integrate([](double t) { return std::exp(t); }, 0.0, 1.0);
    CHECK(v == Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
  }
}

TEST_CASE("theta_norm_sq is monotone and additive") {
  const auto m3 = fixtures::make_m3();
  auto rng = fixtures::test_rng();
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double prev = -1.0;
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    const double v = m3.theta_norm_sq(t);
    CHECK(v >= prev);
    prev = v;
  }
  for (int i = 0; i < 50; ++i) {
    double a = U(rng), b = U(rng);
    if (a > b) std::swap(a, b);
    const double whole = m3.theta_norm_sq(b) - m3.theta_norm_sq(a);
    const double split = U(rng) * (b - a) + a;
    const double sum = (m3.theta_norm_sq(split) - m3.theta_norm_sq(a)) +
                       (m3.theta_norm_sq(b) - m3.theta_norm_sq(split));
    CHECK(whole == Approx(sum).margin(1e-15));
  }
  CHECK(m3.theta_norm_sq(0.0) == 0.0);
}

TEST_CASE("M1 running theta norm") {
  const auto m1 = fixtures::make_m1();
  CHECK(m1.theta_norm_sq(1.0) == Approx(0.0625).epsilon(1e-15));
  CHECK(m1.theta_norm_sq(0.5) == Approx(0.03125).epsilon(1e-15));
}

TEST_CASE("integrate rejects a reversed interval") {
  const auto m1 = fixtures::make_m1();
  CHECK_THROWS_AS(m1.integrate([](double) { return 1.0; }, 0.7, 0.2),
                  std::domain_error);
}

TEST_CASE("quadrature spec validation") {
  QuadratureSpec bad;
  bad.order = 1;
  CHECK_THROWS_AS(bad.validate(), config_error);
  QuadratureSpec bad2;
  bad2.refinement_tolerance = 0.0;
  CHECK_THROWS_AS(bad2.validate(), config_error);
}

TEST_CASE("non-default quadrature order works") {
  const auto m1 = fixtures::make_m1();
  QuadratureSpec q;
  q.order = 5;
  const double v =
      m1.integrate([](double t) { return std::sin(t); }, 0.0, 1.0, q);
  CHECK(v == Approx(1.0 - std::cos(1.0)).epsilon(1e-12));
}

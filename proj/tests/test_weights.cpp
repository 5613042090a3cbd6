// Dual-route checks of the closed-form piece integrals behind G, Phi and
// Gamma: every closed form is compared against the adaptive quadrature
// engine on the same integrand.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "riskcap/weights.hpp"

using namespace riskcap;
using Catch::Approx;

namespace {

QuadratureSpec tight() {
  QuadratureSpec q;
  q.refinement_tolerance = 1e-13;
  return q;
}

} // namespace

TEST_CASE("tau piece integrals agree with quadrature") {
  auto rng = fixtures::test_rng(31);
  std::uniform_real_distribution<double> Ua(1e-4, 2.0);
  std::uniform_real_distribution<double> Us(1.0, 3.0);
  // include the series regime p*s_hi/a << 1 and the crossover
  const double ps[] = {1e-12, 1e-8, 1e-5, 1e-3, 0.02, 0.0999,
                       0.1001, 0.2, 1.0, 5.0};
  for (double pbase : ps) {
    for (int rep = 0; rep < 8; ++rep) {
      const double a = Ua(rng);
      const double p = pbase * a; // so p*s/a ~ pbase*s
      const double s_lo = Us(rng);
      const double s_hi = s_lo + Us(rng) - 0.9;
      auto tau = [&](double s) { return p * s / (a + p * s); };
      const auto ti = detail::tau_integrals(a, p, s_lo, s_hi);
      const double i_tau = integrate_smooth(tau, s_lo, s_hi, tight());
      const double i_tau2 = integrate_smooth(
          [&](double s) { return tau(s) * tau(s); }, s_lo, s_hi, tight());
      const double i_stau = integrate_smooth(
          [&](double s) { return s * tau(s); }, s_lo, s_hi, tight());
      const double i_stau2 = integrate_smooth(
          [&](double s) { return s * tau(s) * tau(s); }, s_lo, s_hi, tight());
      const double scale = std::max(i_tau, 1e-280);
      CHECK(ti.tau == Approx(i_tau).epsilon(1e-11).margin(1e-13 * scale));
      CHECK(ti.tau2 == Approx(i_tau2).epsilon(1e-11).margin(1e-13 * scale));
      CHECK(ti.s_tau == Approx(i_stau).epsilon(1e-11).margin(1e-13 * scale));
      CHECK(ti.s_tau2 ==
            Approx(i_stau2).epsilon(1e-11).margin(1e-13 * scale));
    }
  }
  SECTION("degenerate parameters") {
    const auto z = detail::tau_integrals(0.7, 0.0, 1.0, 2.0);
    CHECK(z.tau == 0.0);
    CHECK(z.s_tau2 == 0.0);
    const auto one = detail::tau_integrals(0.0, 0.3, 1.0, 2.0);
    CHECK(one.tau == Approx(1.0).epsilon(1e-15));
    CHECK(one.s_tau == Approx(1.5).epsilon(1e-15));
  }
}

TEST_CASE("g piece integral agrees with quadrature") {
  auto rng = fixtures::test_rng(37);
  std::uniform_real_distribution<double> Ua(1e-3, 1.5);
  std::uniform_real_distribution<double> Us(1.0, 2.5);
  const double us[] = {0.0, 1e-10, 1e-6, 1e-3, 0.04, 0.06, 0.3, 2.0};
  for (double ubase : us) {
    for (int rep = 0; rep < 8; ++rep) {
      const double a = Ua(rng);
      const double u = ubase * a;
      const double s_lo = Us(rng);
      const double s_hi = s_lo + Us(rng) - 0.9;
      const double closed = detail::g_integral(a, u, s_lo, s_hi);
      const double quad = integrate_smooth(
          [&](double s) {
            const double w = a + u * s;
            return s * s / (w * w);
          },
          s_lo, s_hi, tight());
      CHECK(closed == Approx(quad).epsilon(1e-11));
    }
  }
  CHECK(detail::g_integral(0.0, 0.5, 1.0, 2.0) ==
        Approx(1.0 / 0.25).epsilon(1e-15));
}

TEST_CASE("G on M1 and M3 matches the quadrature route") {
  const auto m1 = fixtures::make_m1();
  const auto m3 = fixtures::make_m3();
  const double q = 2.3263478740408408;
  for (const auto* m : {&m1, &m3}) {
    for (double lam : {0.0, 0.05, 0.13}) {
      for (double u : {0.02, 0.25, 1.0}) {
        if (lam == 0.0 && u == 0.0) continue;
        const double direct = G_var(*m, u, lam, q);
        const double quad = m->integrate(
            [&](double t) {
              const double s = m->omega(t) + lam;
              const double w = lam * q + u * s;
              return m->theta_sq_at(t) * s * s / (w * w);
            },
            0.0, m->horizon(), tight());
        CHECK(direct == Approx(quad).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("G closed forms at lambda = 0") {
  const auto m1 = fixtures::make_m1();
  const double q = 2.3263478740408408;
  // G(u, 0) = ||theta||_T^2 / u^2; at u = ||theta||_T it equals 1
  CHECK(G_var(m1, 0.25, 0.0, q) == Approx(1.0).epsilon(1e-14));
  CHECK(G_var(m1, 0.5, 0.0, q) == Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(G_var(m1, 0.0, 0.0, q), std::domain_error);
  CHECK(G_es(m1, 0.25, 0.0, q) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("G_es is dominated by G_var") {
  const auto m3 = fixtures::make_m3();
  const double q = 2.3263478740408408;
  for (double lam : {0.01, 0.05, 0.1})
    for (double u : {0.01, 0.1, 0.5, 2.0})
      CHECK(G_es(m3, u, lam, q) <= G_var(m3, u, lam, q) + 1e-14);
}

TEST_CASE("weight norms and cost integral against quadrature") {
  const auto m3 = fixtures::make_m3();
  const double q = 2.3263478740408408;
  for (double lam : {0.02, 0.08, 0.12}) {
    const auto w = tau_curve(m3, lam, q);
    const auto n = weight_norms(m3, w);
    const double n1q = m3.integrate(
        [&](double t) { return m3.theta_sq_at(t) * w(t); }, 0.0, 1.0, tight());
    const double n2q = m3.integrate(
        [&](double t) { return m3.theta_sq_at(t) * w(t) * w(t); }, 0.0, 1.0,
        tight());
    CHECK(n.n1 == Approx(n1q).epsilon(1e-10));
    CHECK(n.n2 == Approx(n2q).epsilon(1e-10));
    const double eq = m3.integrate(
        [&](double t) {
          const double wt = w(t);
          return m3.omega(t) * m3.theta_sq_at(t) * (wt - 0.5 * wt * wt);
        },
        0.0, 1.0, tight());
    CHECK(weighted_cost_integral(m3, w) == Approx(eq).epsilon(1e-10));
  }
}

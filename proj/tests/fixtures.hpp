#pragma once

// Shared test fixtures: the canonical markets and independent numerical
// oracles (long-double quadrature for normal tails, bisection inverses).
// The oracles deliberately avoid the library's code paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "riskcap/market.hpp"

namespace fixtures {

// --- canonical markets -----------------------------------------------------

// M1: d=1, T=1, r=0.05, mu=0.10, sigma=0.20 -> theta = 0.25
inline riskcap::MarketModel make_m1() {
  return riskcap::MarketModel(
      1.0, 1, {{0.0, 1.0, 0.05, {0.10}, {0.20}}});
}

// M0: mu == r -> theta == 0
inline riskcap::MarketModel make_m0() {
  return riskcap::MarketModel(1.0, 1, {{0.0, 1.0, 0.03, {0.03}, {0.20}}});
}

// M3: three pieces with theta in {0.1, 0.3, 0.2}
inline riskcap::MarketModel make_m3() {
  return riskcap::MarketModel(
      1.0, 1,
      {{0.0, 1.0 / 3.0, 0.02, {0.04}, {0.20}},
       {1.0 / 3.0, 2.0 / 3.0, 0.03, {0.09}, {0.20}},
       {2.0 / 3.0, 1.0, 0.025, {0.075}, {0.25}}});
}

// M2: the designated interior-regime market, theta = 1.5, T = 1; used with
// alpha = 1e-10 so the quantile-strength condition holds despite the large
// theta.
inline riskcap::MarketModel make_m2() {
  return riskcap::MarketModel(1.0, 1, {{0.0, 1.0, 0.02, {0.47}, {0.30}}});
}

// --- independent oracles ---------------------------------------------------

// Adaptive Simpson in long double.
inline long double simpson_rec(const std::function<long double(long double)>& f,
                               long double a, long double b, long double fa,
                               long double fm, long double fb, long double whole,
                               long double tol, int depth) {
  const long double m = 0.5L * (a + b);
  const long double lm = 0.5L * (a + m), rm = 0.5L * (m + b);
  const long double flm = f(lm), frm = f(rm);
  const long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
  const long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0L * tol)
    return left + right + (left + right - whole) / 15.0L;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5L * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5L * tol, depth - 1);
}

inline long double integrate_oracle(
    const std::function<long double(long double)>& f, long double a,
    long double b, long double tol = 1e-19L) {
  const long double m = 0.5L * (a + b);
  const long double fa = f(a), fm = f(m), fb = f(b);
  const long double whole = (b - a) / 6.0L * (fa + 4.0L * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// Mills ratio by quadrature of the scaled tail:
// e^{y^2/2} int_y^inf e^{-t^2/2} dt = int_0^inf e^{-y u - u^2/2} du,
// whose integrand is O(1), so the quadrature keeps relative accuracy for
// every y.
inline long double mills_oracle(long double y) {
  return integrate_oracle(
      [y](long double u) { return std::exp(-y * u - 0.5L * u * u); }, 0.0L,
      60.0L);
}

// int_z^inf e^{-t^2/2} dt for z >= 0.
inline long double tail_oracle(long double z) {
  return std::exp(-0.5L * z * z) * mills_oracle(z);
}

// Mills ratio asymptotic series 1/y sum (-1)^n (2n-1)!! / y^{2n}, truncated
// at the smallest term.
inline long double mills_asymptotic(long double y) {
  long double acc = 0.0L, term = 1.0L / y, prev = 1e300L;
  for (int n = 0; n < 60; ++n) {
    if (std::fabs(term) >= prev) break;
    acc += term;
    prev = std::fabs(term);
    term *= -(2.0L * n + 1.0L) / (y * y);
  }
  return acc;
}

// alpha-quantile of the standard normal by bisection on the tail oracle.
inline double normal_quantile_oracle(double alpha) {
  long double lo = 0.0L, hi = 40.0L; // |q| bracket
  const long double target = static_cast<long double>(alpha) *
                             std::sqrt(2.0L * 3.14159265358979323846L);
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (tail_oracle(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return -static_cast<double>(0.5L * (lo + hi));
}

// deterministic RNG for property tests
inline std::mt19937_64 test_rng(std::uint64_t seed = 20240901ULL) {
  return std::mt19937_64(seed);
}

} // namespace fixtures

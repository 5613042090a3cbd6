#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "riskcap/errors.hpp"

namespace riskcap {

/// Root of a continuous strictly decreasing function on [lo, hi] with
/// f(lo) >= 0 >= f(hi). Plain bisection: unconditionally convergent on
/// monotone brackets, which is all the solvers need. Runs until the
/// bracket collapses to floating-point resolution (or abs_tol if larger).
template <typename F>
double bisect_decreasing(F&& f, double lo, double hi, double abs_tol = 0.0) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo < 0.0 && fhi < 0.0) return lo;
  if (flo > 0.0 && fhi > 0.0) return hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break; // bracket at ulp resolution
    const double fm = f(mid);
    if (fm >= 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= abs_tol) break;
  }
  return 0.5 * (lo + hi);
}

/// Golden-section refinement of a scalar maximum on [lo, hi].
/// Returns (argmax, max). Assumes a maximum exists in the bracket; the
/// caller supplies a bracket from a scan, so no unimodality is required
/// globally.
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi,
                                     double x_tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > x_tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

} // namespace riskcap

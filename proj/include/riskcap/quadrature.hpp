#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "riskcap/errors.hpp"

namespace riskcap {

/// Quadrature controls: Gauss-Legendre order per sub-interval and the
/// relative tolerance for the interval-halving refinement.
struct QuadratureSpec {
  int order = 16;                      // points per sub-interval
  double refinement_tolerance = 1e-12; // relative
  int max_refinements = 18;

  void validate() const {
    if (order < 2) throw config_error("QuadratureSpec: order must be >= 2");
    if (!(refinement_tolerance > 0.0))
      throw config_error("QuadratureSpec: refinement_tolerance must be > 0");
  }
};

namespace detail {

struct GaussNode {
  double x; // abscissa in (0, 1]: positive half, symmetric rule
  double w;
};

// Nodes of the n-point Gauss-Legendre rule on [-1, 1] with x >= 0.
// Newton iteration on P_n from the Chebyshev initial guess; standard.
inline std::vector<GaussNode> make_gauss_half(int n) {
  std::vector<GaussNode> half;
  const int m = (n + 1) / 2;
  half.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    // k-th root counted from +1 side; x stays in [0, 1).
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Recompute dp at the converged x for the weight.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    half.push_back({x, 2.0 / ((1.0 - x * x) * dp * dp)});
  }
  // Ascending in x: for odd n the center node (x = 0) comes first.
  std::sort(half.begin(), half.end(),
            [](const GaussNode& a, const GaussNode& b) { return a.x < b.x; });
  return half;
}

inline const std::vector<GaussNode>& gauss_half(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<GaussNode>> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_half(n)).first;
  return it->second;
}

template <typename F>
double gauss_panel(F&& f, double a, double b, const std::vector<GaussNode>& half,
                   bool odd) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double acc = 0.0;
  std::size_t i = 0;
  if (odd) { // center node pairs with itself
    acc += half[0].w * f(c);
    i = 1;
  }
  for (; i < half.size(); ++i) {
    acc += half[i].w * (f(c - h * half[i].x) + f(c + h * half[i].x));
  }
  return acc * h;
}

} // namespace detail

/// Composite Gauss-Legendre integral of a smooth function on [a, b],
/// refined by interval halving until two successive composite values agree
/// to the relative tolerance. Discontinuities must not lie inside (a, b);
/// callers split at known breakpoints first.
template <typename F>
double integrate_smooth(F&& f, double a, double b, const QuadratureSpec& q) {
  if (a == b) return 0.0;
  q.validate();
  const auto& half = detail::gauss_half(q.order);
  const bool odd = (q.order % 2) != 0;

  auto composite = [&](std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = a + h * static_cast<double>(i);
      const double hi = (i + 1 == n) ? b : lo + h;
      acc += detail::gauss_panel(f, lo, hi, half, odd);
    }
    return acc;
  };

  double prev = composite(1);
  std::size_t n = 1;
  for (int level = 0; level < q.max_refinements; ++level) {
    n *= 2;
    const double cur = composite(n);
    const double scale = std::max(std::abs(cur), 1e-300);
    if (std::abs(cur - prev) <= q.refinement_tolerance * scale) return cur;
    prev = cur;
  }
  throw numerical_error("integrate_smooth: refinement did not converge",
                        composite(2 * n), prev);
}

} // namespace riskcap

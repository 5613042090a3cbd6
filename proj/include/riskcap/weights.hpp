#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "riskcap/errors.hpp"
#include "riskcap/market.hpp"
#include "riskcap/normal.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/rootfind.hpp"

namespace riskcap {
namespace detail {

// Coefficient piece seen through s = omega(t) + lambda; s decreases in t,
// so the piece covers s in [s_lo, s_hi] with s_lo >= 1 + lambda.
struct SPiece {
  double s_lo, s_hi, theta_sq;
};

inline std::vector<SPiece> s_pieces(const MarketModel& m, double lambda) {
  const double c = m.horizon() + 1.0 + lambda;
  std::vector<SPiece> out;
  out.reserve(m.piece_count());
  for (std::size_t i = 0; i < m.piece_count(); ++i) {
    const auto& p = m.piece(i);
    out.push_back({c - p.t_end, c - p.t_start, m.theta_sq_at(p.t_start)});
  }
  return out;
}

// Integrals over s in [s_lo, s_hi] of tau, tau^2, s tau, s tau^2 where
// tau(s) = p s / (a + p s). Closed forms in logs and reciprocals; a series
// branch takes over when p s_hi << a, where the closed forms cancel.
struct TauIntegrals {
  double tau = 0.0, tau2 = 0.0, s_tau = 0.0, s_tau2 = 0.0;
};

inline TauIntegrals tau_integrals(double a, double p, double s_lo,
                                  double s_hi) {
  TauIntegrals out;
  const double ds = s_hi - s_lo;
  const double A1 = 0.5 * (s_hi * s_hi - s_lo * s_lo);
  if (p == 0.0) return out; // tau == 0 (a > 0 by caller contract)
  if (a == 0.0) {           // tau == 1
    out.tau = ds;
    out.tau2 = ds;
    out.s_tau = A1;
    out.s_tau2 = A1;
    return out;
  }
  const double beta = p / a;
  if (beta * s_hi <= 0.3) {
    // tau = sum_{k>=1} (-1)^{k+1} (beta s)^k. The closed forms above the
    // crossover cancel to O((beta s)^3), so the series keeps the branch
    // with the smaller relative error; 48 terms bottom out well below
    // double resolution at beta s = 0.3.
    double bk = 1.0; // beta^k
    double powlo = s_lo, powhi = s_hi;
    for (int k = 1; k <= 48; ++k) {
      bk *= beta;
      powlo *= s_lo;
      powhi *= s_hi; // s^{k+1}
      const double Pk = (powhi - powlo) / static_cast<double>(k + 1);
      const double Pk1 =
          (powhi * s_hi - powlo * s_lo) / static_cast<double>(k + 2);
      const double sgn = (k % 2) ? 1.0 : -1.0;
      out.tau += sgn * bk * Pk;
      out.s_tau += sgn * bk * Pk1;
      if (k >= 2) {
        out.tau2 += -sgn * (k - 1) * bk * Pk;
        out.s_tau2 += -sgn * (k - 1) * bk * Pk1;
      }
    }
    return out;
  }
  const double w_lo = a + p * s_lo;
  const double w_hi = a + p * s_hi;
  const double L = std::log(w_hi / w_lo);
  const double D = p * ds / (w_lo * w_hi); // 1/w_lo - 1/w_hi
  const double ap = a / p;
  out.tau = ds - ap * L;
  out.tau2 = ds - 2.0 * ap * L + ap * a * D;
  out.s_tau = A1 - ap * ds + ap * ap * L;
  out.s_tau2 = A1 - 2.0 * ap * ds + 3.0 * ap * ap * L - ap * ap * a * D;
  return out;
}

// int_{s_lo}^{s_hi} s^2 / (a + u s)^2 ds
inline double g_integral(double a, double u, double s_lo, double s_hi) {
  const double ds = s_hi - s_lo;
  if (u == 0.0) {
    const double P2 =
        (s_hi * s_hi * s_hi - s_lo * s_lo * s_lo) / 3.0;
    return P2 / (a * a);
  }
  if (a == 0.0) return ds / (u * u);
  const double beta = u / a;
  if (beta * s_hi <= 0.3) {
    // s^2/(a+us)^2 = (1/a^2) sum_{j>=0} (-1)^j (j+1) (beta s)^j s^2
    double acc = 0.0;
    double bj = 1.0;
    double powlo = s_lo * s_lo * s_lo, powhi = s_hi * s_hi * s_hi; // s^{j+3}
    for (int j = 0; j <= 48; ++j) {
      const double Pj2 = (powhi - powlo) / static_cast<double>(j + 3);
      const double sgn = (j % 2) ? -1.0 : 1.0;
      acc += sgn * (j + 1) * bj * Pj2;
      bj *= beta;
      powlo *= s_lo;
      powhi *= s_hi;
    }
    return acc / (a * a);
  }
  const double w_lo = a + u * s_lo;
  const double w_hi = a + u * s_hi;
  const double L = std::log(w_hi / w_lo);
  const double D = u * ds / (w_lo * w_hi);
  return (u * ds - 2.0 * a * L + a * a * D) / (u * u * u);
}

} // namespace detail

/// Risk-cap weight multiplier t -> rho (omega(t)+lambda) /
/// (a + rho (omega(t)+lambda)), the factor shrinking theta to meet the cap.
/// a is lambda |q_alpha| for the VaR problem and lambda iota_alpha(rho)
/// for the ES problem. Conventions: weight == 1 when rho is infinite or
/// a == 0, weight == 0 when rho == 0 with a > 0.
struct WeightCurve {
  double lambda = 0.0;
  double a = 0.0;
  double rho = 0.0;
  double c = 0.0; // T + 1 + lambda, so s(t) = c - t

  double operator()(double t) const {
    if (!std::isfinite(rho)) return 1.0;
    if (rho == 0.0) return 0.0;
    if (a == 0.0) return 1.0;
    const double s = c - t;
    return rho * s / (a + rho * s);
  }
};

/// Norms of a weighted strategy: n1 = int w |theta|^2 dt (= ||sqrt(w)
/// theta||_T^2) and n2 = int w^2 |theta|^2 dt (= ||w theta||_T^2).
struct WeightNorms {
  double n1 = 0.0;
  double n2 = 0.0;
};

inline WeightNorms weight_norms(const MarketModel& m, const WeightCurve& w) {
  WeightNorms out;
  if (!std::isfinite(w.rho)) { // weight == 1
    out.n1 = out.n2 = m.theta_norm_sq(m.horizon());
    return out;
  }
  for (const auto& p : detail::s_pieces(m, w.lambda)) {
    const auto ti = detail::tau_integrals(w.a, w.rho, p.s_lo, p.s_hi);
    out.n1 += p.theta_sq * ti.tau;
    out.n2 += p.theta_sq * ti.tau2;
  }
  return out;
}

/// int_0^T omega(t) |theta_t|^2 (w - w^2/2) dt for a weight curve; the
/// strategy-dependent part of the constrained cost.
inline double weighted_cost_integral(const MarketModel& m,
                                     const WeightCurve& w) {
  if (!std::isfinite(w.rho)) {
    double acc = 0.0;
    for (const auto& p : detail::s_pieces(m, 0.0)) {
      const double A1 = 0.5 * (p.s_hi * p.s_hi - p.s_lo * p.s_lo);
      acc += 0.5 * p.theta_sq * A1;
    }
    return acc;
  }
  double acc = 0.0;
  for (const auto& p : detail::s_pieces(m, w.lambda)) {
    const auto ti = detail::tau_integrals(w.a, w.rho, p.s_lo, p.s_hi);
    const double i_omega_tau = ti.s_tau - w.lambda * ti.tau;
    const double i_omega_tau2 = ti.s_tau2 - w.lambda * ti.tau2;
    acc += p.theta_sq * (i_omega_tau - 0.5 * i_omega_tau2);
  }
  return acc;
}

/// k1 = ||sqrt(omega) theta||_T^2 and k2 = ||omega theta||_T^2, exact.
inline std::pair<double, double> omega_theta_norms(const MarketModel& m) {
  double k1 = 0.0, k2 = 0.0;
  for (const auto& p : detail::s_pieces(m, 0.0)) {
    k1 += p.theta_sq * 0.5 * (p.s_hi * p.s_hi - p.s_lo * p.s_lo);
    k2 += p.theta_sq * (p.s_hi * p.s_hi * p.s_hi - p.s_lo * p.s_lo * p.s_lo) /
          3.0;
  }
  return {k1, k2};
}

// ---------------------------------------------------------------------------
// VaR side
// ---------------------------------------------------------------------------

/// G(u, lambda) = int_0^T (omega+lambda)^2 |theta|^2 /
/// (lambda |q_alpha| + u (omega+lambda))^2 dt; strictly decreasing in u.
inline double G_var(const MarketModel& m, double u, double lambda,
                    double q_abs) {
  if (!(u >= 0.0 && lambda >= 0.0))
    throw std::domain_error("G_var: u and lambda must be >= 0");
  if (u == 0.0 && lambda == 0.0)
    throw std::domain_error("G_var: u and lambda cannot both be 0");
  const double a = lambda * q_abs;
  double acc = 0.0;
  for (const auto& p : detail::s_pieces(m, lambda))
    acc += p.theta_sq * detail::g_integral(a, u, p.s_lo, p.s_hi);
  return acc;
}

/// Largest multiplier for which G(., lambda) = 1 still has a root:
/// (k1 + sqrt(k2 (q^2 - ||theta||^2) + k1^2)) / (q^2 - ||theta||^2).
inline double lambda_max(const MarketModel& m, double q_abs) {
  const double nth2 = m.theta_norm_sq(m.horizon());
  if (!(nth2 > 0.0))
    throw std::domain_error("lambda_max: requires ||theta||_T > 0");
  if (!(q_abs > std::sqrt(nth2)))
    throw std::domain_error("lambda_max: requires |q_alpha| > ||theta||_T");
  const auto [k1, k2] = omega_theta_norms(m);
  const double gap = q_abs * q_abs - nth2;
  return (k1 + std::sqrt(k2 * gap + k1 * k1)) / gap;
}

/// rho(lambda): the positive root of G(., lambda) = 1 for lambda in
/// [0, lambda_max]; 0 from lambda_max on (there G(0, lambda) <= 1 already,
/// so inf{u >= 0 : G <= 1} = 0).
inline double rho_var(const MarketModel& m, double lambda, double q_abs) {
  if (!(lambda >= 0.0))
    throw std::domain_error("rho_var: lambda must be >= 0");
  const double nth2 = m.theta_norm_sq(m.horizon());
  if (nth2 == 0.0) return 0.0;
  if (lambda == 0.0) return std::sqrt(nth2);
  if (G_var(m, 0.0, lambda, q_abs) <= 1.0) return 0.0;
  double hi = std::sqrt(nth2);
  int guard = 0;
  while (G_var(m, hi, lambda, q_abs) > 1.0) {
    hi *= 2.0;
    if (++guard > 200)
      throw numerical_error("rho_var: failed to bracket the root", hi, 0.0);
  }
  return bisect_decreasing(
      [&](double u) { return G_var(m, u, lambda, q_abs) - 1.0; }, 0.0, hi);
}

/// Weight function tau_lambda as a curve (solves for rho internally).
inline WeightCurve tau_curve(const MarketModel& m, double lambda,
                             double q_abs) {
  WeightCurve w;
  w.lambda = lambda;
  w.a = lambda * q_abs;
  w.rho = rho_var(m, lambda, q_abs);
  w.c = m.horizon() + 1.0 + lambda;
  return w;
}

inline double tau(const MarketModel& m, double t, double lambda,
                  double q_abs) {
  if (!(t >= 0.0 && t <= m.horizon()))
    throw std::domain_error("tau: t outside [0, T]");
  return tau_curve(m, lambda, q_abs)(t);
}

/// Phi(lambda) = |q_alpha| ||tau theta||_T + ||tau theta||_T^2 / 2 -
/// ||sqrt(tau) theta||_T^2; strictly decreasing from Phi(0) to 0.
inline double Phi(const MarketModel& m, double lambda, double q_abs) {
  const auto w = tau_curve(m, lambda, q_abs);
  const auto n = weight_norms(m, w);
  return q_abs * std::sqrt(n.n2) + 0.5 * n.n2 - n.n1;
}

/// Phi(0) = |q_alpha| ||theta||_T - ||theta||_T^2 / 2 in closed form.
inline double Phi_at_zero(const MarketModel& m, double q_abs) {
  const double nth2 = m.theta_norm_sq(m.horizon());
  return q_abs * std::sqrt(nth2) - 0.5 * nth2;
}

/// Inverse of Phi on [0, Phi(0)]: the multiplier with Phi(lambda) = a.
/// Requires the cap condition zeta < 1 - e^{-Phi(0)} so that every
/// a <= -ln(1-zeta) is attainable, and the monotonicity condition
/// |q_alpha| >= 2 (T+1) ||theta||_T.
inline double Phi_inverse(const MarketModel& m, double a, double q_abs,
                          double zeta) {
  const double nth = m.theta_norm_T();
  if (!(q_abs >= 2.0 * (m.horizon() + 1.0) * nth))
    throw infeasible_error("quantile_strength",
                           "Phi_inverse: |q_alpha| < 2 (T+1) ||theta||_T");
  const double bound = -std::log1p(-zeta);
  if (!(Phi_at_zero(m, q_abs) > bound))
    throw infeasible_error("interior_cap",
                           "Phi_inverse: zeta exceeds the feasible cap");
  if (!(a >= 0.0 && a <= bound * (1.0 + 1e-12) + 1e-300))
    throw std::domain_error("Phi_inverse: a outside [0, -ln(1-zeta)]");
  const double lm = lambda_max(m, q_abs);
  if (a <= 0.0) return lm;
  return bisect_decreasing([&](double l) { return Phi(m, l, q_abs) - a; },
                           0.0, lm);
}

// ---------------------------------------------------------------------------
// ES side
// ---------------------------------------------------------------------------

/// G_1(u, lambda): as G with lambda iota_alpha(u) in place of
/// lambda |q_alpha|; dominated by G since iota_alpha >= |q_alpha|.
inline double G_es(const MarketModel& m, double u, double lambda,
                   double q_abs) {
  if (!(u >= 0.0 && lambda >= 0.0))
    throw std::domain_error("G_es: u and lambda must be >= 0");
  if (u == 0.0 && lambda == 0.0)
    throw std::domain_error("G_es: u and lambda cannot both be 0");
  const double a = lambda * iota_alpha_q(u, q_abs);
  double acc = 0.0;
  for (const auto& p : detail::s_pieces(m, lambda))
    acc += p.theta_sq * detail::g_integral(a, u, p.s_lo, p.s_hi);
  return acc;
}

inline double lambda_prime_max(const MarketModel& m, double q_abs) {
  const double nth2 = m.theta_norm_sq(m.horizon());
  if (!(nth2 > 0.0))
    throw std::domain_error("lambda_prime_max: requires ||theta||_T > 0");
  if (!(q_abs > std::sqrt(nth2)))
    throw std::domain_error(
        "lambda_prime_max: requires |q_alpha| > ||theta||_T");
  const auto [k1, k2] = omega_theta_norms(m);
  const double i0 = iota_alpha_q(0.0, q_abs);
  const double gap = i0 * i0 - nth2;
  return (k1 + std::sqrt(k2 * gap + k1 * k1)) / gap;
}

/// rho_1(lambda): root of G_1(., lambda) = 1. G_1 depends on u through
/// iota_alpha(u) as well, so monotonicity of the bracket is verified by
/// 8-point sampling; a scan locates the sign-change cell if it ever fails.
inline double rho_es(const MarketModel& m, double lambda, double q_abs) {
  if (!(lambda >= 0.0))
    throw std::domain_error("rho_es: lambda must be >= 0");
  const double nth2 = m.theta_norm_sq(m.horizon());
  if (nth2 == 0.0) return 0.0;
  if (lambda == 0.0) return std::sqrt(nth2);
  if (G_es(m, 0.0, lambda, q_abs) <= 1.0) return 0.0;
  double hi = std::sqrt(nth2);
  int guard = 0;
  while (G_es(m, hi, lambda, q_abs) > 1.0) {
    hi *= 2.0;
    if (++guard > 200)
      throw numerical_error("rho_es: failed to bracket the root", hi, 0.0);
  }
  // Verify a decreasing bracket; otherwise fall back to the first
  // down-crossing cell.
  double lo = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  double samples[9];
  for (int i = 0; i <= 8; ++i) {
    const double u = hi * static_cast<double>(i) / 8.0;
    samples[i] = G_es(m, u, lambda, q_abs);
    if (samples[i] > prev * (1.0 + 1e-12)) monotone = false;
    prev = samples[i];
  }
  if (!monotone) {
    for (int i = 0; i < 8; ++i) {
      if (samples[i] >= 1.0 && samples[i + 1] < 1.0) {
        lo = hi * static_cast<double>(i) / 8.0;
        hi = hi * static_cast<double>(i + 1) / 8.0;
        break;
      }
    }
  }
  return bisect_decreasing(
      [&](double u) { return G_es(m, u, lambda, q_abs) - 1.0; }, lo, hi);
}

/// Weight function varsigma_lambda as a curve.
inline WeightCurve varsigma_curve(const MarketModel& m, double lambda,
                                  double q_abs) {
  WeightCurve w;
  w.lambda = lambda;
  w.rho = rho_es(m, lambda, q_abs);
  w.a = lambda * iota_alpha_q(w.rho, q_abs);
  w.c = m.horizon() + 1.0 + lambda;
  return w;
}

inline double varsigma(const MarketModel& m, double t, double lambda,
                       double q_abs) {
  if (!(t >= 0.0 && t <= m.horizon()))
    throw std::domain_error("varsigma: t outside [0, T]");
  return varsigma_curve(m, lambda, q_abs)(t);
}

/// Phi_1(lambda) = -||sqrt(varsigma) theta||_T^2 -
/// ln F_alpha(|q_alpha| + ||varsigma theta||_T).
inline double Phi1(const MarketModel& m, double lambda, double q_abs) {
  const auto w = varsigma_curve(m, lambda, q_abs);
  const auto n = weight_norms(m, w);
  return -n.n1 - f_alpha_log(std::sqrt(n.n2), q_abs);
}

inline double Phi1_at_zero(const MarketModel& m, double q_abs) {
  const double nth2 = m.theta_norm_sq(m.horizon());
  return -nth2 - f_alpha_log(std::sqrt(nth2), q_abs);
}

inline double Phi1_inverse(const MarketModel& m, double a, double q_abs,
                           double zeta) {
  const double nth = m.theta_norm_T();
  if (!(q_abs >= std::max(1.0, 2.0 * (m.horizon() + 1.0) * nth)))
    throw infeasible_error(
        "quantile_strength",
        "Phi1_inverse: |q_alpha| < max(1, 2 (T+1) ||theta||_T)");
  const double bound = -std::log1p(-zeta);
  if (!(Phi1_at_zero(m, q_abs) > bound))
    throw infeasible_error("interior_cap",
                           "Phi1_inverse: zeta exceeds the feasible cap");
  if (!(a >= 0.0 && a <= bound * (1.0 + 1e-12) + 1e-300))
    throw std::domain_error("Phi1_inverse: a outside [0, -ln(1-zeta)]");
  const double lm = lambda_prime_max(m, q_abs);
  if (a <= 0.0) return lm;
  return bisect_decreasing([&](double l) { return Phi1(m, l, q_abs) - a; },
                           0.0, lm);
}

// ---------------------------------------------------------------------------
// The consumption-parameter objective Gamma and its maximisation
// ---------------------------------------------------------------------------

struct GammaPoint {
  double kappa = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  double lambda = 0.0;
};

/// Gamma(kappa) = ln(1-kappa) + T ln(kappa) + int omega |theta|^2
/// (w - w^2/2) dt with the weight at multiplier Phi^{-1}(ln((1-kappa)/(1-zeta))).
inline GammaPoint Gamma_var(const MarketModel& m, double kappa, double q_abs,
                            double zeta) {
  if (kappa < 0.0 || kappa > zeta)
    throw std::domain_error("Gamma_var: kappa must be in [0, zeta]");
  GammaPoint pt;
  pt.kappa = kappa;
  if (kappa == 0.0) return pt; // T ln kappa -> -inf
  const double a = std::log1p(-kappa) - std::log1p(-zeta);
  pt.lambda = Phi_inverse(m, a, q_abs, zeta);
  const auto w = tau_curve(m, pt.lambda, q_abs);
  pt.value = std::log1p(-kappa) + m.horizon() * std::log(kappa) +
             weighted_cost_integral(m, w);
  return pt;
}

inline GammaPoint Gamma_es(const MarketModel& m, double kappa, double q_abs,
                           double zeta) {
  if (kappa < 0.0 || kappa > zeta)
    throw std::domain_error("Gamma_es: kappa must be in [0, zeta]");
  GammaPoint pt;
  pt.kappa = kappa;
  if (kappa == 0.0) return pt;
  const double a = std::log1p(-kappa) - std::log1p(-zeta);
  pt.lambda = Phi1_inverse(m, a, q_abs, zeta);
  const auto w = varsigma_curve(m, pt.lambda, q_abs);
  pt.value = std::log1p(-kappa) + m.horizon() * std::log(kappa) +
             weighted_cost_integral(m, w);
  return pt;
}

/// argmax of Gamma over (0, zeta]: 512-point scan (Gamma is not assumed
/// unimodal) followed by golden-section refinement of the best bracket.
template <typename GammaFn>
GammaPoint maximize_gamma_impl(GammaFn&& gamma, double zeta,
                               std::size_t scan_points = 512,
                               double kappa_tol = 1e-10) {
  const double eps = zeta * 1e-6;
  GammaPoint best;
  std::size_t best_i = 0;
  std::vector<double> ks(scan_points);
  for (std::size_t i = 0; i < scan_points; ++i) {
    ks[i] = eps + (zeta - eps) * static_cast<double>(i) /
                      static_cast<double>(scan_points - 1);
    const auto pt = gamma(ks[i]);
    if (pt.value > best.value) {
      best = pt;
      best_i = i;
    }
  }
  const double lo = ks[best_i == 0 ? 0 : best_i - 1];
  const double hi = ks[std::min(best_i + 1, scan_points - 1)];
  if (hi > lo) {
    const auto [k, val] =
        golden_max([&](double kk) { return gamma(kk).value; }, lo, hi,
                   kappa_tol);
    if (val > best.value) best = gamma(k);
  }
  return best;
}

inline GammaPoint maximize_gamma_var(const MarketModel& m, double q_abs,
                                     double zeta, std::size_t scan = 512,
                                     double tol = 1e-10) {
  return maximize_gamma_impl(
      [&](double k) { return Gamma_var(m, k, q_abs, zeta); }, zeta, scan, tol);
}

inline GammaPoint maximize_gamma_es(const MarketModel& m, double q_abs,
                                    double zeta, std::size_t scan = 512,
                                    double tol = 1e-10) {
  return maximize_gamma_impl(
      [&](double k) { return Gamma_es(m, k, q_abs, zeta); }, zeta, scan, tol);
}

} // namespace riskcap

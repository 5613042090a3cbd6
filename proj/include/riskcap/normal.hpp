#pragma once

#include <cmath>
#include <limits>

#include "riskcap/errors.hpp"

namespace riskcap {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2Pi = 2.5066282746310002;
inline constexpr double kSqrtPiOver2 = 1.2533141373155003;

/// Standard normal density.
inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / kSqrt2Pi;
}

/// Standard normal distribution function.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

/// Mills ratio of the standard normal: e^{y^2/2} * int_y^inf e^{-t^2/2} dt.
/// For small y the scaled product is exact enough; for large y the
/// e^{y^2/2} factor overflows and the classical Laplace continued fraction
/// 1/(y + 1/(y + 2/(y + 3/(...)))) is evaluated instead (modified Lentz).
inline double mills_ratio(double y) {
  if (!(y >= 0.0)) throw std::domain_error("mills_ratio: y must be >= 0");
  if (y < 8.0) {
    return kSqrtPiOver2 * std::erfc(y / kSqrt2) * std::exp(0.5 * y * y);
  }
  const double tiny = 1e-300;
  double f = y, c = y, d = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double ak = static_cast<double>(k);
    d = y + ak * d;
    if (d == 0.0) d = tiny;
    c = y + ak / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

/// Upper tail integral int_z^inf e^{-t^2/2} dt (not normalised). Stable
/// over the whole real line; underflows to 0 only when the value itself
/// is below the double range.
inline double normal_tail(double z) {
  if (z < 0.0) return kSqrt2Pi - normal_tail(-z);
  if (z < 8.0) return kSqrtPiOver2 * std::erfc(z / kSqrt2);
  return mills_ratio(z) * std::exp(-0.5 * z * z);
}

/// log of normal_tail(z) for z >= 0, stable for large z.
inline double log_normal_tail(double z) {
  if (!(z >= 0.0)) throw std::domain_error("log_normal_tail: z must be >= 0");
  return std::log(mills_ratio(z)) - 0.5 * z * z;
}

/// ln( normal_tail(z) / normal_tail(q) ) for z >= q >= 0, computed through
/// Mills ratios so the difference of the huge exponential factors never
/// materialises: ln(varpi(z)/varpi(q)) - (z-q)(z+q)/2.
inline double log_tail_ratio(double z, double q) {
  if (!(q >= 0.0 && z >= q))
    throw std::domain_error("log_tail_ratio: requires z >= q >= 0");
  return std::log(mills_ratio(z) / mills_ratio(q)) - 0.5 * (z - q) * (z + q);
}

namespace detail {

// Acklam's rational initial guess for the inverse normal CDF.
inline double inverse_normal_seed(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  return -inverse_normal_seed(1.0 - p);
}

} // namespace detail

/// Inverse of the standard normal CDF on (0, 1). Rational seed polished by
/// two Newton steps against the erfc-based CDF; relative error is at the
/// few-ulp level across the double range.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("inverse_normal_cdf: p must be in (0,1)");
  double x = detail::inverse_normal_seed(p);
  for (int i = 0; i < 2; ++i) {
    const double err = normal_cdf(x) - p;
    x -= err / normal_pdf(x);
  }
  return x;
}

/// alpha-quantile of the standard normal for alpha in (0, 1/2); negative.
inline double normal_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::domain_error("normal_quantile: alpha must be in (0, 1/2)");
  return inverse_normal_cdf(alpha);
}

} // namespace riskcap

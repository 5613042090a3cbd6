#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "riskcap/control.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/functionals.hpp"
#include "riskcap/market.hpp"
#include "riskcap/normal.hpp"

namespace riskcap {

enum class MeasureKind { VaR, ES };

inline std::string to_string(MeasureKind k) {
  return k == MeasureKind::VaR ? "var" : "es";
}

/// Risk constraint specification: confidence level alpha in (0, 1/2) with
/// its normal quantile, risk-aversion coefficient zeta in (0, 1), and the
/// measure the uniform cap applies to.
struct RiskSpec {
  double alpha = 0.01;
  double q_abs = 0.0; // |q_alpha|, derived
  double zeta = 0.1;
  MeasureKind kind = MeasureKind::VaR;

  RiskSpec(double alpha_, double zeta_, MeasureKind kind_)
      : alpha(alpha_), zeta(zeta_), kind(kind_) {
    if (!(alpha > 0.0 && alpha < 0.5))
      throw config_error("RiskSpec: alpha must be in (0, 1/2)");
    if (!(zeta > 0.0 && zeta < 1.0))
      throw config_error("RiskSpec: zeta must be in (0, 1)");
    q_abs = -normal_quantile(alpha);
  }

  /// ln(1 - zeta): the uniform bound on the log-constraint processes.
  double log_bound() const { return std::log1p(-zeta); }
};

/// F_alpha(z) = tail(z) / tail(|q_alpha|) for z >= |q_alpha|.
inline double F_alpha(double z, double alpha) {
  const double q_abs = -normal_quantile(alpha);
  if (!(z >= q_abs))
    throw std::domain_error("F_alpha: z must be >= |q_alpha|");
  return std::exp(log_tail_ratio(z, q_abs));
}

/// f_alpha(x) = ln F_alpha(|q_alpha| + x) for x >= 0, evaluated in log space.
inline double f_alpha_log(double x, double q_abs) {
  return log_tail_ratio(q_abs + x, q_abs);
}

/// iota_alpha(u) = 1 / varpi(u + |q_alpha|) - u; always >= |q_alpha|.
inline double iota_alpha(double u, double alpha) {
  if (!(u >= 0.0)) throw std::domain_error("iota_alpha: u must be >= 0");
  const double q_abs = -normal_quantile(alpha);
  return 1.0 / mills_ratio(u + q_abs) - u;
}

inline double iota_alpha_q(double u, double q_abs) {
  return 1.0 / mills_ratio(u + q_abs) - u;
}

/// alpha-quantile of the wealth law:
/// Q_t = x exp(R_t - V_t + (y,theta)_t - ||y||_t^2/2 - |q_alpha| ||y||_t).
inline double quantile_Q(double x, const DeterministicControl& c,
                         const MarketModel& m, double alpha, double t) {
  if (!(x > 0.0)) throw std::domain_error("quantile_Q: x must be > 0");
  const double q_abs = -normal_quantile(alpha);
  ControlIntegrals ci(c, m);
  const double nsq = ci.y_norm_sq(t);
  return x * std::exp(m.discount_R(t) - ci.V(t) + ci.y_dot_theta(t) -
                      0.5 * nsq - q_abs * std::sqrt(nsq));
}

/// VaR_t = x e^{R_t} - Q_t against the capital-reserve benchmark.
inline double var_t(double x, const DeterministicControl& c,
                    const MarketModel& m, double alpha, double t) {
  return x * std::exp(m.discount_R(t)) - quantile_Q(x, c, m, alpha, t);
}

/// Conditional tail mean m_t = x F_alpha(|q_alpha| + ||y||_t) *
/// e^{R_t - V_t + (y,theta)_t}.
inline double tail_mean_m(double x, const DeterministicControl& c,
                          const MarketModel& m, double alpha, double t) {
  if (!(x > 0.0)) throw std::domain_error("tail_mean_m: x must be > 0");
  const double q_abs = -normal_quantile(alpha);
  ControlIntegrals ci(c, m);
  const double norm = std::sqrt(ci.y_norm_sq(t));
  return x * std::exp(f_alpha_log(norm, q_abs) + m.discount_R(t) - ci.V(t) +
                      ci.y_dot_theta(t));
}

/// ES_t = x e^{R_t} - m_t.
inline double es_t(double x, const DeterministicControl& c,
                   const MarketModel& m, double alpha, double t) {
  return x * std::exp(m.discount_R(t)) - tail_mean_m(x, c, m, alpha, t);
}

/// VaR log-constraint process
/// L_t = (y,theta)_t - ||y||_t^2/2 - V_t - |q_alpha| ||y||_t;
/// the uniform VaR cap is equivalent to inf_t L_t >= ln(1 - zeta).
inline double log_constraint_var_L(const ControlIntegrals& ci, double q_abs,
                                   double t) {
  const double nsq = ci.y_norm_sq(t);
  return ci.y_dot_theta(t) - 0.5 * nsq - ci.V(t) - q_abs * std::sqrt(nsq);
}

inline double log_constraint_var_L(const DeterministicControl& c,
                                   const MarketModel& m, double alpha,
                                   double t) {
  ControlIntegrals ci(c, m);
  return log_constraint_var_L(ci, -normal_quantile(alpha), t);
}

/// ES log-constraint process
/// Lbar_t = (y,theta)_t - V_t + f_alpha(||y||_t);
/// the uniform ES cap is equivalent to inf_t Lbar_t >= ln(1 - zeta).
inline double log_constraint_es_L(const ControlIntegrals& ci, double q_abs,
                                  double t) {
  const double norm = std::sqrt(ci.y_norm_sq(t));
  return ci.y_dot_theta(t) - ci.V(t) + f_alpha_log(norm, q_abs);
}

inline double log_constraint_es_L(const DeterministicControl& c,
                                  const MarketModel& m, double alpha,
                                  double t) {
  ControlIntegrals ci(c, m);
  return log_constraint_es_L(ci, -normal_quantile(alpha), t);
}

struct FeasibilityReport {
  bool feasible = false;
  double min_margin = 0.0; // min_t L_t - ln(1 - zeta)
  double argmin_t = 0.0;
};

/// Uniform grid on [0, T] with `points` nodes merged with breakpoints.
inline std::vector<double> feasibility_grid(const MarketModel& m,
                                            std::size_t points = 4096) {
  auto g = DeterministicControl::make_grid(m, points - 1);
  return g;
}

/// Evaluates the measure's log-constraint process on the grid; feasible iff
/// the minimum clears ln(1 - zeta) - 1e-10.
inline FeasibilityReport feasibility_sup_check(const DeterministicControl& c,
                                               const MarketModel& m,
                                               const RiskSpec& spec,
                                               const std::vector<double>& grid) {
  ControlIntegrals ci(c, m);
  FeasibilityReport rep;
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (double t : grid) {
    const double L = spec.kind == MeasureKind::VaR
                         ? log_constraint_var_L(ci, spec.q_abs, t)
                         : log_constraint_es_L(ci, spec.q_abs, t);
    if (L < best) {
      best = L;
      best_t = t;
    }
  }
  rep.min_margin = best - spec.log_bound();
  rep.argmin_t = best_t;
  rep.feasible = rep.min_margin >= -1e-10;
  return rep;
}

} // namespace riskcap

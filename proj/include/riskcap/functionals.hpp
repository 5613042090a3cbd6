#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "riskcap/control.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/market.hpp"
#include "riskcap/normal.hpp"
#include "riskcap/quadrature.hpp"

namespace riskcap {

/// Grid-aligned running integrals of a control against a market:
/// V_t, (y,theta)_t and ||y||_t^2 at every grid node, with exact
/// partial-cell queries. Requires every coefficient breakpoint to be a
/// grid node so theta is constant on each cell.
class ControlIntegrals {
public:
  ControlIntegrals(const DeterministicControl& c, const MarketModel& m)
      : c_(&c), m_(&m) {
    if (std::abs(c.horizon() - m.horizon()) > 1e-12 * (1.0 + m.horizon()))
      throw config_error("control and market horizons differ");
    check_alignment(c, m);
    const std::size_t n = c.cell_count();
    const std::size_t d = c.dim();
    ydth_nodes_.assign(n + 1, 0.0);
    ysq_nodes_.assign(n + 1, 0.0);
    ydth_cell_.assign(n, 0.0);
    ysq_cell_.assign(n, 0.0);
    const auto& g = c.grid();
    double acc_yt = 0.0, acc_ys = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& th = m.theta_at(g[k]);
      const double* y = c.y_cell(k);
      double yt = 0.0, ys = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        yt += y[j] * th[j];
        ys += y[j] * y[j];
      }
      ydth_cell_[k] = yt;
      ysq_cell_[k] = ys;
      const double h = g[k + 1] - g[k];
      acc_yt += yt * h;
      acc_ys += ys * h;
      ydth_nodes_[k + 1] = acc_yt;
      ysq_nodes_[k + 1] = acc_ys;
    }
  }

  const DeterministicControl& control() const noexcept { return *c_; }
  const MarketModel& market() const noexcept { return *m_; }

  double V(double t) const { return c_->cumulative_consumption(t); }

  /// (y, theta)_t = int_0^t y' theta du
  double y_dot_theta(double t) const {
    const std::size_t k = c_->find_cell(t);
    return ydth_nodes_[k] + ydth_cell_[k] * (t - c_->grid()[k]);
  }

  /// ||y||_t^2 = int_0^t |y|^2 du
  double y_norm_sq(double t) const {
    const std::size_t k = c_->find_cell(t);
    return ysq_nodes_[k] + ysq_cell_[k] * (t - c_->grid()[k]);
  }

  double y_dot_theta_T() const { return ydth_nodes_.back(); }
  double y_norm_sq_T() const { return ysq_nodes_.back(); }

  double y_dot_theta_cell(std::size_t k) const { return ydth_cell_[k]; }
  double y_sq_cell(std::size_t k) const { return ysq_cell_[k]; }

private:
  static void check_alignment(const DeterministicControl& c,
                              const MarketModel& m) {
    const auto& g = c.grid();
    const double tol = 1e-9 * (1.0 + m.horizon());
    for (double b : m.breakpoints()) {
      const auto it = std::lower_bound(g.begin(), g.end(), b - tol);
      if (it == g.end() || std::abs(*it - b) > tol)
        throw config_error(
            "control grid must contain every market breakpoint");
    }
  }

  const DeterministicControl* c_;
  const MarketModel* m_;
  std::vector<double> ydth_nodes_, ysq_nodes_;
  std::vector<double> ydth_cell_, ysq_cell_;
};

/// V_t of a control.
inline double cumulative_consumption(const DeterministicControl& c, double t) {
  return c.cumulative_consumption(t);
}

/// Cost decomposition of Eq-style J(x, nu) = base + rate_term +
/// consumption_term with base = (T+1) ln x.
struct CostBreakdown {
  double J = 0.0;
  double base = 0.0;
  double rate_term = 0.0;
  double consumption_term = 0.0;
};

/// I(V) = int_0^T (ln v_t - V_t) dt for a grid control; exact cell sums
/// (V is piecewise linear between nodes).
inline double I_functional(const DeterministicControl& c) {
  c.require_positive_consumption();
  const auto& g = c.grid();
  const auto& Vn = c.consumption_nodes();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double h = g[k + 1] - g[k];
    acc += (std::log(c.v_cell(k)) - 0.5 * (Vn[k] + Vn[k + 1])) * h;
  }
  return acc;
}

/// I for a smooth consumption path given by its rate and cumulative value,
/// integrated by the adaptive Gauss rule (used by the closed-form optimal
/// paths, which a cell grid cannot carry to full accuracy).
inline double I_functional(const std::function<double(double)>& v_rate,
                           const std::function<double(double)>& V_cum,
                           double T, const QuadratureSpec& q = {}) {
  return integrate_smooth(
      [&](double t) { return std::log(v_rate(t)) - V_cum(t); }, 0.0, T, q);
}

/// H(y) = int_0^T omega(t) (y' theta - |y|^2 / 2) dt, exact cell sums.
inline double H_functional(const DeterministicControl& y,
                           const MarketModel& m) {
  ControlIntegrals ci(y, m);
  const auto& g = y.grid();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    acc += (ci.y_dot_theta_cell(k) - 0.5 * ci.y_sq_cell(k)) *
           omega_integral(m, g[k], g[k + 1]);
  }
  return acc;
}

/// J(x, nu) evaluated deterministically:
/// (T+1) ln x + int omega (r + y'theta - |y|^2/2) + int (ln v - V) - V_T.
inline CostBreakdown cost_J(double x, const DeterministicControl& c,
                            const MarketModel& m) {
  if (!(x > 0.0)) throw std::domain_error("cost_J: x must be > 0");
  c.require_positive_consumption();
  ControlIntegrals ci(c, m);
  const double T = m.horizon();
  CostBreakdown out;
  out.base = (T + 1.0) * std::log(x);
  const auto& g = c.grid();
  double rate = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double integrand =
        m.r_at(g[k]) + ci.y_dot_theta_cell(k) - 0.5 * ci.y_sq_cell(k);
    rate += integrand * omega_integral(m, g[k], g[k + 1]);
  }
  out.rate_term = rate;
  out.consumption_term = I_functional(c) - c.total_consumption();
  out.J = out.base + out.rate_term + out.consumption_term;
  return out;
}

/// K(y) = ||y||_T^2 / 2 + |q_alpha| ||y||_T - (y, theta)_T.
inline double K_var(const DeterministicControl& y, const MarketModel& m,
                    double alpha) {
  const double q_abs = -normal_quantile(alpha);
  ControlIntegrals ci(y, m);
  const double nsq = ci.y_norm_sq_T();
  return 0.5 * nsq + q_abs * std::sqrt(nsq) - ci.y_dot_theta_T();
}

/// K_1(y) = -(y, theta)_T - ln F_alpha(|q_alpha| + ||y||_T).
inline double K_es(const DeterministicControl& y, const MarketModel& m,
                   double alpha) {
  const double q_abs = -normal_quantile(alpha);
  ControlIntegrals ci(y, m);
  const double norm = std::sqrt(ci.y_norm_sq_T());
  return -ci.y_dot_theta_T() - log_tail_ratio(q_abs + norm, q_abs);
}

/// Optimal fixed-endpoint consumption path: the maximiser of I over
/// cumulative paths with V_0 = 0, V_T = b, and its value. kappa is the
/// 1 - e^{-b} parametrisation of the terminal constraint.
struct OptimalConsumption {
  double b = 0.0;
  double T = 0.0;
  double kappa = 0.0;   // 1 - e^{-b}
  double I_star = 0.0;  // -T ln T + T ln kappa
  double path(double t) const { return -std::log1p(-kappa * t / T); }
  double rate(double t) const { return kappa / (T - kappa * t); }
};

inline OptimalConsumption optimal_consumption(double b, double T) {
  if (!(b > 0.0)) throw std::domain_error("optimal_consumption: b must be > 0");
  if (!(T > 0.0)) throw std::domain_error("optimal_consumption: T must be > 0");
  OptimalConsumption oc;
  oc.b = b;
  oc.T = T;
  oc.kappa = -std::expm1(-b);
  oc.I_star = -T * std::log(T) + T * std::log(oc.kappa);
  return oc;
}

/// Consumption rate v^kappa_t = kappa / (T - t kappa); its cumulative value
/// is ln(T / (T - kappa t)).
inline double consumption_rate_kappa(double kappa, double T, double t) {
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::domain_error("consumption_rate_kappa: kappa must be in (0, 1]");
  const double den = T - t * kappa;
  if (!(den > 0.0))
    throw std::domain_error("consumption_rate_kappa: T - t kappa must be > 0");
  return kappa / den;
}

/// l_y(h) = ||y+h||_T - ||y||_T - (y/||y||_T, h)_T >= 0. Both controls must
/// share a grid; only the investment parts matter.
inline double norm_gap_l(const DeterministicControl& y,
                         const DeterministicControl& h) {
  if (y.grid() != h.grid() || y.dim() != h.dim())
    throw config_error("norm_gap_l: controls must share grid and dimension");
  const auto& g = y.grid();
  const std::size_t d = y.dim();
  double nyy = 0.0, nhh = 0.0, nyh = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    const double hlen = g[k + 1] - g[k];
    const double* yk = y.y_cell(k);
    const double* hk = h.y_cell(k);
    double syy = 0.0, shh = 0.0, syh = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      syy += yk[j] * yk[j];
      shh += hk[j] * hk[j];
      syh += yk[j] * hk[j];
    }
    nyy += syy * hlen;
    nhh += shh * hlen;
    nyh += syh * hlen;
  }
  const double ny = std::sqrt(nyy);
  if (!(ny > 0.0)) throw std::domain_error("norm_gap_l: ||y||_T must be > 0");
  const double nyph = std::sqrt(nyy + 2.0 * nyh + nhh);
  return nyph - ny - nyh / ny;
}

/// Law of ln X_t under a deterministic control:
/// Normal(ln x + R_t - V_t + (y,theta)_t - ||y||_t^2/2, ||y||_t^2).
struct LogWealthLaw {
  double mean = 0.0;
  double variance = 0.0;
};

inline LogWealthLaw wealth_log_mean_and_var(double x,
                                            const DeterministicControl& c,
                                            const MarketModel& m, double t) {
  if (!(x > 0.0))
    throw std::domain_error("wealth_log_mean_and_var: x must be > 0");
  ControlIntegrals ci(c, m);
  const double nsq = ci.y_norm_sq(t);
  LogWealthLaw law;
  law.mean = std::log(x) + m.discount_R(t) - ci.V(t) + ci.y_dot_theta(t) -
             0.5 * nsq;
  law.variance = nsq;
  return law;
}

} // namespace riskcap

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "riskcap/errors.hpp"
#include "riskcap/market.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/solution.hpp"
#include "riskcap/var_solver.hpp"
#include "riskcap/weights.hpp"

namespace riskcap {

/// Solves the log-utility consumption/investment problem under the uniform
/// Expected-Shortfall cap. Same regime structure as solve_var with the ES
/// thresholds; the riskless sufficient condition reuses the VaR-side bound
/// (the ES statement defers to it).
inline ConstrainedSolution solve_es(double x, const MarketModel& m,
                                    const RiskSpec& spec,
                                    const SolverOptions& opts = {}) {
  if (!(x > 0.0)) throw std::domain_error("solve_es: x must be > 0");
  if (spec.kind != MeasureKind::ES)
    throw config_error("solve_es: spec.kind must be ES");

  const double T = m.horizon();
  const double q = spec.q_abs;
  const double zeta = spec.zeta;
  const double nth2 = m.theta_norm_sq(T);
  const double nth = std::sqrt(nth2);
  const double kappa0 = T / (T + 1.0);

  ConstrainedSolution sol;
  sol.measure = MeasureKind::ES;
  sol.A = A_of_x(x, m);

  // F_alpha(|q|+||theta||) e^{||theta||^2} drives both ES thresholds.
  const double f_term =
      nth2 == 0.0 ? 1.0 : std::exp(f_alpha_log(nth, q) + nth2);
  const double cap = 1.0 - f_term;
  const double uncon_thr = 1.0 - f_term / (T + 1.0);
  const double mono_rhs = std::max(1.0, 2.0 * (T + 1.0) * nth);

  ConditionCheck c_cap{"interior_cap", zeta, cap, zeta < cap};
  ConditionCheck c_mono{"quantile_strength", q, mono_rhs, q >= mono_rhs};
  ConditionCheck c_qth{"quantile_dominates_theta", q, std::max(1.0, nth),
                       q > std::max(1.0, nth)};
  ConditionCheck c_k0{"zeta_below_kappa0", zeta, kappa0, zeta < kappa0};
  double riskless_rhs = std::numeric_limits<double>::infinity();
  if (zeta < kappa0) {
    const double sup = m.theta_sup();
    riskless_rhs = (1.0 + T) * nth *
                   (1.0 + zeta * (T + 1.0) * sup * sup /
                              ((1.0 - zeta) * T - zeta));
  }
  ConditionCheck c_riskless{"riskless_sufficient", q, riskless_rhs,
                            zeta < kappa0 && q >= riskless_rhs};
  ConditionCheck c_uncon{"unconstrained_sufficient", zeta, uncon_thr,
                         zeta > uncon_thr};
  sol.conditions = {c_cap, c_mono, c_qth, c_k0, c_riskless, c_uncon};

  const auto gamma_basic = [&](double g) {
    return std::log1p(-g) + T * std::log(g);
  };

  if (nth2 == 0.0) {
    sol.regime = Regime::ThetaZero;
    sol.gamma = std::min(kappa0, zeta);
    sol.lambda = 0.0;
    sol.rho = 0.0;
    WeightCurve zero{0.0, 0.0, 0.0, T + 1.0};
    sol.control = detail::weighted_control(m, zero, sol.gamma, opts.grid_cells);
    sol.weight = detail::weight_nodes(sol.control, zero);
    sol.J = sol.A + gamma_basic(sol.gamma);
    detail::verify_emitted_feasibility(sol, m, spec, opts);
    return sol;
  }

  if (c_uncon.holds && c_qth.holds) {
    sol.regime = Regime::Unconstrained;
    sol.gamma = kappa0;
    sol.lambda = 0.0;
    sol.rho = nth;
    WeightCurve one{0.0, 0.0, nth, T + 1.0};
    sol.control = detail::weighted_control(m, one, kappa0, opts.grid_cells);
    sol.weight = detail::weight_nodes(sol.control, one);
    sol.J = unconstrained_value(x, m);
    detail::verify_emitted_feasibility(sol, m, spec, opts);
    return sol;
  }

  if (c_cap.holds && c_mono.holds && c_k0.holds && c_riskless.holds) {
    sol.regime = Regime::Riskless;
    sol.gamma = zeta;
    sol.lambda = lambda_prime_max(m, q);
    sol.rho = 0.0;
    WeightCurve zero{sol.lambda, sol.lambda * iota_alpha_q(0.0, q), 0.0,
                     T + 1.0 + sol.lambda};
    sol.control = detail::weighted_control(m, zero, zeta, opts.grid_cells);
    sol.weight = detail::weight_nodes(sol.control, zero);
    sol.J = sol.A + gamma_basic(zeta);
    detail::verify_emitted_feasibility(sol, m, spec, opts);
    return sol;
  }

  if (!c_cap.holds)
    throw infeasible_error("interior_cap",
                           "solve_es: zeta exceeds the feasible cap and no "
                           "marginal regime applies");
  if (!c_mono.holds)
    throw infeasible_error(
        "quantile_strength",
        "solve_es: |q_alpha| < max(1, 2 (T+1) ||theta||_T) and no marginal "
        "regime applies");

  sol.regime = Regime::Interior;
  const auto best =
      maximize_gamma_es(m, q, zeta, opts.scan_points, opts.kappa_tol);
  sol.gamma = best.kappa;
  sol.lambda = best.lambda;
  const auto w = varsigma_curve(m, sol.lambda, q);
  sol.rho = w.rho;
  sol.control = detail::weighted_control(m, w, sol.gamma, opts.grid_cells);
  sol.weight = detail::weight_nodes(sol.control, w);
  sol.J = sol.A + best.value;
  detail::verify_emitted_feasibility(sol, m, spec, opts);
  return sol;
}

} // namespace riskcap

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "riskcap/control.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/market.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/solution.hpp"
#include "riskcap/weights.hpp"

namespace riskcap {

struct SolverOptions {
  std::size_t grid_cells = 1024;        // control grid resolution
  std::size_t feasibility_points = 4096; // uniform feasibility grid
  std::size_t scan_points = 512;        // Gamma scan
  double kappa_tol = 1e-10;             // golden-section width
};

namespace detail {

inline DeterministicControl weighted_control(const MarketModel& m,
                                             const WeightCurve& w,
                                             double kappa,
                                             std::size_t cells) {
  const double T = m.horizon();
  return DeterministicControl::from_functions(
      m,
      [&](double t, double* out) {
        const auto& th = m.theta_at(t);
        const double wt = w(t);
        for (std::size_t j = 0; j < m.dim(); ++j) out[j] = th[j] * wt;
      },
      [&](double t) { return kappa / (T - t * kappa); }, cells);
}

inline std::vector<double> weight_nodes(const DeterministicControl& c,
                                        const WeightCurve& w) {
  std::vector<double> out;
  out.reserve(c.grid().size());
  for (double t : c.grid()) out.push_back(w(t));
  return out;
}

inline void verify_emitted_feasibility(ConstrainedSolution& sol,
                                       const MarketModel& m,
                                       const RiskSpec& spec,
                                       const SolverOptions& opts) {
  sol.feasibility = feasibility_sup_check(
      sol.control, m, spec, feasibility_grid(m, opts.feasibility_points));
  // The cap binds in every regime except Unconstrained, where the stated
  // sufficient threshold can admit strategies whose margin at T is
  // negative; the attached report and the unconstrained_feasible condition
  // expose that case instead of aborting.
  if (!sol.feasibility.feasible && sol.regime != Regime::Unconstrained)
    throw numerical_error(
        "solver: emitted strategy fails the uniform feasibility check",
        sol.feasibility.min_margin, 0.0);
}

} // namespace detail

/// Solves the log-utility consumption/investment problem under the uniform
/// VaR cap. Regimes, checked in order: THETA_ZERO (no excess return),
/// UNCONSTRAINED (cap slack), RISKLESS (cap forces zero investment),
/// INTERIOR (binding cap, weighted strategy). The conditions behind the
/// decision are reported with their computed thresholds.
inline ConstrainedSolution solve_var(double x, const MarketModel& m,
                                     const RiskSpec& spec,
                                     const SolverOptions& opts = {}) {
  if (!(x > 0.0)) throw std::domain_error("solve_var: x must be > 0");
  if (spec.kind != MeasureKind::VaR)
    throw config_error("solve_var: spec.kind must be VaR");

  const double T = m.horizon();
  const double q = spec.q_abs;
  const double zeta = spec.zeta;
  const double nth2 = m.theta_norm_sq(T);
  const double nth = std::sqrt(nth2);
  const double kappa0 = T / (T + 1.0);

  ConstrainedSolution sol;
  sol.measure = MeasureKind::VaR;
  sol.A = A_of_x(x, m);

  // Condition ledger (thresholds computed even for paths not taken).
  const double cap = -std::expm1(-q * nth + 0.5 * nth2); // 1 - e^{-Phi(0)}
  const double uncon_thr = 1.0 - std::exp(-q * nth + 0.5 * nth2) / T;
  // The unconstrained strategy actually clears the cap iff
  // zeta >= 1 - e^{-Phi(0)}/(T+1): that is the L_T margin with
  // V_T = ln(T+1). The stated sufficient threshold divides by T instead;
  // both are reported so the regime decision stays auditable.
  const double uncon_attain =
      1.0 - std::exp(-q * nth + 0.5 * nth2) / (T + 1.0);
  ConditionCheck c_cap{"interior_cap", zeta, cap, zeta < cap};
  ConditionCheck c_mono{"quantile_strength", q, 2.0 * (T + 1.0) * nth,
                        q >= 2.0 * (T + 1.0) * nth};
  ConditionCheck c_qth{"quantile_dominates_theta", q, nth, q >= nth};
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
  ConditionCheck c_uncon_feas{"unconstrained_feasible", zeta, uncon_attain,
                              zeta >= uncon_attain};
  sol.conditions = {c_cap, c_mono, c_qth, c_k0, c_riskless, c_uncon,
                    c_uncon_feas};

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
    sol.lambda = lambda_max(m, q);
    sol.rho = 0.0;
    WeightCurve zero{sol.lambda, sol.lambda * q, 0.0, T + 1.0 + sol.lambda};
    sol.control = detail::weighted_control(m, zero, zeta, opts.grid_cells);
    sol.weight = detail::weight_nodes(sol.control, zero);
    sol.J = sol.A + gamma_basic(zeta);
    detail::verify_emitted_feasibility(sol, m, spec, opts);
    return sol;
  }

  if (!c_cap.holds)
    throw infeasible_error("interior_cap",
                           "solve_var: zeta exceeds the feasible cap and no "
                           "marginal regime applies");
  if (!c_mono.holds)
    throw infeasible_error(
        "quantile_strength",
        "solve_var: |q_alpha| < 2 (T+1) ||theta||_T and no marginal regime "
        "applies");

  sol.regime = Regime::Interior;
  const auto best =
      maximize_gamma_var(m, q, zeta, opts.scan_points, opts.kappa_tol);
  sol.gamma = best.kappa;
  sol.lambda = best.lambda;
  const auto w = tau_curve(m, sol.lambda, q);
  sol.rho = w.rho;
  sol.control = detail::weighted_control(m, w, sol.gamma, opts.grid_cells);
  sol.weight = detail::weight_nodes(sol.control, w);
  sol.J = sol.A + best.value;
  detail::verify_emitted_feasibility(sol, m, spec, opts);
  return sol;
}

} // namespace riskcap

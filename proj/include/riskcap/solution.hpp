#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "riskcap/control.hpp"
#include "riskcap/functionals.hpp"
#include "riskcap/market.hpp"
#include "riskcap/riskmeasures.hpp"

namespace riskcap {

/// Which sufficient-condition case produced the solution.
enum class Regime { Interior, Riskless, Unconstrained, ThetaZero };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Interior: return "INTERIOR";
    case Regime::Riskless: return "RISKLESS";
    case Regime::Unconstrained: return "UNCONSTRAINED";
    case Regime::ThetaZero: return "THETA_ZERO";
  }
  return "?";
}

/// One entry of the condition ledger: the computed comparison behind a
/// regime decision, kept for auditability.
struct ConditionCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Solver output: the optimal consumption parameter gamma, the multiplier
/// lambda and its root rho, the weight values on the control grid nodes,
/// the emitted strategy, and the optimal cost J = A(x) + Gamma(gamma).
struct ConstrainedSolution {
  MeasureKind measure = MeasureKind::VaR;
  Regime regime = Regime::Interior;
  double gamma = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  double J = 0.0;
  double A = 0.0;
  DeterministicControl control;
  std::vector<double> weight; // weight(t) at control grid nodes
  std::vector<ConditionCheck> conditions;
  FeasibilityReport feasibility;
};

/// A(x) = (T+1) ln x + int_0^T omega(t) r_t dt - T ln T, exact.
inline double A_of_x(double x, const MarketModel& m) {
  if (!(x > 0.0)) throw std::domain_error("A_of_x: x must be > 0");
  const double T = m.horizon();
  double r_int = 0.0;
  for (std::size_t i = 0; i < m.piece_count(); ++i) {
    const auto& p = m.piece(i);
    r_int += p.r * omega_integral(m, p.t_start, p.t_end);
  }
  return (T + 1.0) * std::log(x) + r_int - T * std::log(T);
}

struct UnconstrainedSolution {
  DeterministicControl control;
  double J = 0.0;
};

/// (T+1) ln(x/(T+1)) + int omega (r + |theta|^2/2) dt in closed form.
inline double unconstrained_value(double x, const MarketModel& m) {
  if (!(x > 0.0)) throw std::domain_error("unconstrained_value: x must be > 0");
  const double T = m.horizon();
  double value = (T + 1.0) * std::log(x / (T + 1.0));
  for (std::size_t i = 0; i < m.piece_count(); ++i) {
    const auto& p = m.piece(i);
    value += (p.r + 0.5 * m.theta_sq_at(p.t_start)) *
             omega_integral(m, p.t_start, p.t_end);
  }
  return value;
}

/// The unconstrained optimum y* = theta, v* = 1/omega and its value.
inline UnconstrainedSolution solve_unconstrained(double x,
                                                 const MarketModel& m,
                                                 std::size_t grid_cells = 1024) {
  auto value = unconstrained_value(x, m);
  auto control = DeterministicControl::from_functions(
      m,
      [&](double t, double* out) {
        const auto& th = m.theta_at(t);
        for (std::size_t j = 0; j < m.dim(); ++j) out[j] = th[j];
      },
      [&](double t) { return 1.0 / m.omega(t); }, grid_cells);
  return {std::move(control), value};
}

} // namespace riskcap

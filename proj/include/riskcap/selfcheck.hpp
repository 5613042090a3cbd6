#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "riskcap/market.hpp"
#include "riskcap/normal.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/weights.hpp"

namespace riskcap {

struct CheckItem {
  std::string name;
  std::string status; // pass | fail | skipped
  std::string detail;
};

struct CheckOptions {
  double alpha = 0.01;
  double zeta = 0.1;
  double rho_perturb = 0.0; // test hook: offsets rho in residual checks
};

namespace detail {

inline void push_check(std::vector<CheckItem>& out, const std::string& name,
                       bool ok, const std::string& detail) {
  out.push_back({name, ok ? "pass" : "fail", detail});
}

} // namespace detail

/// Machine-checkable invariant suite: special-function bounds, root
/// residuals, inverse round trips and monotonicity scans on the given
/// market. theta-dependent checks are reported as skipped when the market
/// has no excess return.
inline std::vector<CheckItem> run_self_checks(const MarketModel& m,
                                              const CheckOptions& opt = {}) {
  std::vector<CheckItem> out;
  const double q = -normal_quantile(opt.alpha);
  std::ostringstream det;

  { // Mills ratio bounds, strict on a log grid
    bool ok = true;
    double worst = 1.0;
    for (int i = 0; i <= 200; ++i) {
      const double y =
          std::exp(std::log(1e-2) +
                   (std::log(50.0) - std::log(1e-2)) * i / 200.0);
      const double v = mills_ratio(y);
      const double lo = 1.0 / y - 1.0 / (y * y * y);
      const double hi = 1.0 / y;
      if (!(v > lo && v < hi)) ok = false;
      worst = std::min(worst, std::min(v - lo, hi - v));
    }
    det.str("");
    det << "min bound gap " << worst;
    detail::push_check(out, "mills_ratio_bounds", ok, det.str());
  }

  { // iota_alpha >= |q_alpha|
    bool ok = true;
    for (double a : {0.01, 0.05, 0.1, 1e-6}) {
      const double qa = -normal_quantile(a);
      for (int i = 0; i <= 100; ++i) {
        const double u = 20.0 * i / 100.0;
        if (!(iota_alpha(u, a) >= qa - 1e-12)) ok = false;
      }
    }
    detail::push_check(out, "iota_alpha_lower_bound", ok, "u in [0, 20]");
  }

  {
    const double f = F_alpha(q, opt.alpha);
    detail::push_check(out, "F_alpha_at_quantile", f == 1.0,
                       "F_alpha(|q_alpha|) = 1 exactly");
  }

  {
    const double err = std::abs(normal_cdf(normal_quantile(opt.alpha)) -
                                opt.alpha);
    detail::push_check(out, "quantile_roundtrip", err <= 1e-12 * opt.alpha,
                       "|N(q_alpha) - alpha|");
  }

  { // quadrature vs exact piece sums
    const double by_quad =
        m.integrate([&](double t) { return m.theta_sq_at(t); }, 0.0,
                    m.horizon());
    const double exact = m.theta_norm_sq(m.horizon());
    const double err = std::abs(by_quad - exact);
    detail::push_check(out, "quadrature_piece_sum",
                       err <= 1e-12 * std::max(1.0, std::abs(exact)),
                       "integral of |theta|^2");
  }

  const double nth2 = m.theta_norm_sq(m.horizon());
  if (nth2 == 0.0) {
    for (const char* name :
         {"root_residuals_var", "rho_at_lambda_max_var", "phi_roundtrip_var",
          "phi_monotone_var", "weight_monotone_var", "root_residuals_es",
          "rho_at_lambda_max_es", "phi_roundtrip_es", "phi_monotone_es",
          "weight_monotone_es"}) {
      out.push_back({name, "skipped", "market has theta == 0"});
    }
    return out;
  }

  const bool var_ok = q > std::sqrt(nth2);
  if (!var_ok) {
    out.push_back({"root_residuals_var", "skipped",
                   "|q_alpha| <= ||theta||_T: multiplier range undefined"});
  } else {
    const double lm = lambda_max(m, q);
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      const double lam = lm * i / 15.0;
      const double rho = rho_var(m, lam, q) + opt.rho_perturb;
      if (rho == 0.0 && lam > 0.0 && opt.rho_perturb == 0.0) continue;
      const double resid = std::abs(G_var(m, rho, lam, q) - 1.0);
      worst = std::max(worst, resid);
      if (resid > 1e-9) ok = false;
    }
    det.str("");
    det << "max |G(rho,lambda)-1| = " << worst;
    detail::push_check(out, "root_residuals_var", ok, det.str());
    detail::push_check(out, "rho_at_lambda_max_var",
                       rho_var(m, lm, q) < 1e-8, "rho(lambda_max) ~ 0");

    const double cap = -std::expm1(-Phi_at_zero(m, q));
    const bool interior = opt.zeta < cap &&
                          q >= 2.0 * (m.horizon() + 1.0) * std::sqrt(nth2);
    if (!interior) {
      out.push_back({"phi_roundtrip_var", "skipped",
                     "interior conditions fail for this alpha/zeta"});
    } else {
      bool ok2 = true;
      double worst2 = 0.0;
      const double bound = -std::log1p(-opt.zeta);
      for (int i = 1; i <= 16; ++i) {
        const double a = bound * i / 16.0;
        const double err =
            std::abs(Phi(m, Phi_inverse(m, a, q, opt.zeta), q) - a);
        worst2 = std::max(worst2, err);
        if (err > 1e-9) ok2 = false;
      }
      det.str("");
      det << "max round-trip error " << worst2;
      detail::push_check(out, "phi_roundtrip_var", ok2, det.str());
    }

    bool mono = true;
    const double dl = 1e-6 * lm;
    for (int i = 1; i < 10; ++i) {
      const double lam = lm * i / 10.0;
      if (!(Phi(m, lam + dl, q) < Phi(m, lam - dl, q))) mono = false;
    }
    detail::push_check(out, "phi_monotone_var", mono,
                       "finite-difference slope < 0");

    bool wmono = true;
    for (int i = 1; i < 5; ++i) {
      const double lam = lm * i / 5.0;
      for (int j = 0; j <= 4; ++j) {
        const double t = m.horizon() * j / 4.0;
        if (!(tau(m, t, lam + dl, q) < tau(m, t, lam - dl, q))) wmono = false;
      }
    }
    detail::push_check(out, "weight_monotone_var", wmono,
                       "tau decreasing in lambda");
  }

  if (!var_ok) {
    out.push_back({"root_residuals_es", "skipped",
                   "|q_alpha| <= ||theta||_T: multiplier range undefined"});
    return out;
  }
  {
    const double lpm = lambda_prime_max(m, q);
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < 16; ++i) {
      const double lam = lpm * i / 15.0;
      const double rho = rho_es(m, lam, q) + opt.rho_perturb;
      if (rho == 0.0 && lam > 0.0 && opt.rho_perturb == 0.0) continue;
      const double resid = std::abs(G_es(m, rho, lam, q) - 1.0);
      worst = std::max(worst, resid);
      if (resid > 1e-9) ok = false;
    }
    det.str("");
    det << "max |G1(rho1,lambda)-1| = " << worst;
    detail::push_check(out, "root_residuals_es", ok, det.str());
    detail::push_check(out, "rho_at_lambda_max_es",
                       rho_es(m, lpm, q) < 1e-8, "rho1(lambda'_max) ~ 0");

    const double cap = 1.0 - std::exp(f_alpha_log(std::sqrt(nth2), q) + nth2);
    const bool interior =
        opt.zeta < cap &&
        q >= std::max(1.0, 2.0 * (m.horizon() + 1.0) * std::sqrt(nth2));
    if (!interior) {
      out.push_back({"phi_roundtrip_es", "skipped",
                     "interior conditions fail for this alpha/zeta"});
    } else {
      bool ok2 = true;
      double worst2 = 0.0;
      const double bound = -std::log1p(-opt.zeta);
      for (int i = 1; i <= 16; ++i) {
        const double a = bound * i / 16.0;
        const double err =
            std::abs(Phi1(m, Phi1_inverse(m, a, q, opt.zeta), q) - a);
        worst2 = std::max(worst2, err);
        if (err > 1e-9) ok2 = false;
      }
      det.str("");
      det << "max round-trip error " << worst2;
      detail::push_check(out, "phi_roundtrip_es", ok2, det.str());
    }

    bool mono = true;
    const double dl = 1e-6 * lpm;
    for (int i = 1; i < 10; ++i) {
      const double lam = lpm * i / 10.0;
      if (!(Phi1(m, lam + dl, q) < Phi1(m, lam - dl, q))) mono = false;
    }
    detail::push_check(out, "phi_monotone_es", mono,
                       "finite-difference slope < 0");

    bool wmono = true;
    for (int i = 1; i < 5; ++i) {
      const double lam = lpm * i / 5.0;
      for (int j = 0; j <= 4; ++j) {
        const double t = m.horizon() * j / 4.0;
        if (!(varsigma(m, t, lam + dl, q) < varsigma(m, t, lam - dl, q)))
          wmono = false;
      }
    }
    detail::push_check(out, "weight_monotone_es", wmono,
                       "varsigma decreasing in lambda");
  }
  return out;
}

} // namespace riskcap

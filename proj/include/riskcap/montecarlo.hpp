#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "riskcap/control.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/functionals.hpp"
#include "riskcap/market.hpp"
#include "riskcap/normal.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/solution.hpp"

namespace riskcap {
namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Counter-based stream: the draw for (seed, path, slot) is a pure hash,
/// so any work partition reproduces the same ensemble bit for bit.
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t path,
                                  std::uint64_t slot) {
  constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = mix64(seed ^ 0xD1B54A32D192ED03ULL);
  z = mix64(z + golden * (path + 1));
  z = mix64(z + golden * (slot + 1));
  return z;
}

inline double uniform_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53; // (0, 1)
}

inline double normal_draw(std::uint64_t seed, std::uint64_t path,
                          std::uint64_t slot) {
  return inverse_normal_cdf(uniform_open(counter_hash(seed, path, slot)));
}

template <typename Body>
void parallel_paths(std::size_t n_paths, unsigned threads, Body&& body) {
  if (threads <= 1 || n_paths < 2048) {
    body(0, n_paths);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_paths + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = std::min(n_paths, w * chunk);
    const std::size_t hi = std::min(n_paths, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

} // namespace detail

/// Worker count: explicit request, else RISKCAP_THREADS, else hardware.
inline unsigned effective_threads(unsigned requested = 0) {
  if (requested == 0) {
    if (const char* env = std::getenv("RISKCAP_THREADS")) {
      requested = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    }
  }
  if (requested == 0) requested = std::thread::hardware_concurrency();
  return std::max(1u, requested);
}

/// Exact-law samples of ln X at chosen times, with seed provenance.
struct WealthSampleEnsemble {
  std::vector<double> times;
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  double x = 1.0;
  std::vector<double> bench;       // x e^{R_t} per time
  std::vector<double> log_samples; // row-major: path * times.size() + k

  std::size_t time_index(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) <= 1e-12 * (1.0 + std::abs(t))) return k;
    throw std::domain_error("ensemble does not sample time t");
  }

  std::vector<double> column(std::size_t k) const {
    std::vector<double> col(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p)
      col[p] = log_samples[p * times.size() + k];
    return col;
  }
};

/// Samples ln X jointly across `times` from the exact lognormal law: the
/// martingale part has independent Gaussian increments with variance
/// ||y||^2_{t_{k+1}} - ||y||^2_{t_k}; no time-stepping error. Deterministic
/// in (master_seed, n_paths, times) for any worker count.
inline WealthSampleEnsemble sample_ensemble(
    double x, const DeterministicControl& c, const MarketModel& m,
    std::vector<double> times, std::size_t n_paths, std::uint64_t master_seed,
    unsigned threads = 0) {
  if (!(x > 0.0)) throw std::domain_error("sample_ensemble: x must be > 0");
  if (n_paths < 1)
    throw std::domain_error("sample_ensemble: n_paths must be >= 1");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0 && times[k] <= m.horizon()))
      throw std::domain_error("sample_ensemble: time outside [0, T]");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw std::domain_error("sample_ensemble: times must be increasing");
  }
  ControlIntegrals ci(c, m);
  const std::size_t K = times.size();
  std::vector<double> mean_inc(K), sd_inc(K);
  double prev_drift = 0.0, prev_var = 0.0;
  WealthSampleEnsemble e;
  e.bench.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = times[k];
    const double drift =
        m.discount_R(t) - ci.V(t) + ci.y_dot_theta(t) - 0.5 * ci.y_norm_sq(t);
    const double var = ci.y_norm_sq(t);
    mean_inc[k] = drift - prev_drift;
    sd_inc[k] = std::sqrt(std::max(0.0, var - prev_var));
    e.bench[k] = x * std::exp(m.discount_R(t));
    prev_drift = drift;
    prev_var = var;
  }
  e.times = std::move(times);
  e.n_paths = n_paths;
  e.master_seed = master_seed;
  e.x = x;
  e.log_samples.resize(n_paths * K);
  const double lx = std::log(x);
  detail::parallel_paths(
      n_paths, effective_threads(threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
          double acc = lx;
          double* row = &e.log_samples[p * K];
          for (std::size_t k = 0; k < K; ++k) {
            acc += mean_inc[k];
            if (sd_inc[k] > 0.0)
              acc += sd_inc[k] * detail::normal_draw(master_seed, p, k);
            row[k] = acc;
          }
        }
      });
  return e;
}

/// Lower empirical quantile of X_t at level alpha: the ceil(alpha n)-th
/// order statistic.
inline double empirical_quantile(const WealthSampleEnsemble& e, double alpha,
                                 double t) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("empirical_quantile: alpha must be in (0,1)");
  const std::size_t k = e.time_index(t);
  auto col = e.column(k);
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(alpha * static_cast<double>(e.n_paths)));
  const std::size_t idx = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(col.begin(), col.begin() + idx, col.end());
  return std::exp(col[idx]);
}

/// Empirical expected shortfall x e^{R_t} - mean(X_t | X_t <= Q_hat),
/// computed from the ceil(alpha n) smallest samples.
inline double empirical_es(const WealthSampleEnsemble& e, double alpha,
                           double t) {
  const std::size_t k = e.time_index(t);
  const double an = alpha * static_cast<double>(e.n_paths);
  if (an < 1.0)
    throw std::domain_error("empirical_es: n * alpha < 1, empty tail");
  auto col = e.column(k);
  const std::size_t rank = static_cast<std::size_t>(std::ceil(an));
  std::nth_element(col.begin(), col.begin() + (rank - 1), col.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < rank; ++i) acc += std::exp(col[i]);
  return e.bench[k] - acc / static_cast<double>(rank);
}

/// Sample standard deviation of the tail used by empirical_es (for
/// statistical slack in the verification report).
inline double empirical_es_se(const WealthSampleEnsemble& e, double alpha,
                              double t) {
  const std::size_t k = e.time_index(t);
  const double an = alpha * static_cast<double>(e.n_paths);
  if (an < 1.0) return 0.0;
  auto col = e.column(k);
  const std::size_t rank = static_cast<std::size_t>(std::ceil(an));
  std::nth_element(col.begin(), col.begin() + (rank - 1), col.end());
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < rank; ++i) {
    const double v = std::exp(col[i]);
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(rank);
  const double var = std::max(0.0, s2 / n - (s1 / n) * (s1 / n));
  return std::sqrt(var / n);
}

struct VerifyRow {
  double t = 0.0;
  double Q_cf = 0.0, Q_mc = 0.0;
  double var_cf = 0.0, var_mc = 0.0;
  double es_cf = 0.0, es_mc = 0.0;
  double risk_ratio_mc = 0.0; // empirical risk / zeta_t (0 when no cap)
  bool pass = false;
};

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  std::vector<VerifyCheck> checks;
  double J_mc = 0.0, J_se = 0.0, J_cf = 0.0;
  bool all_pass = false;
};

/// End-to-end Monte Carlo verification of a solved strategy: closed-form
/// quantile / VaR / ES against empirical estimates at 8 times spanning
/// (0, T], the uniform constraint ratio with statistical slack, and a
/// sample-mean estimate of J (trapezoid of ln(v X) over a fine grid plus
/// ln X_T) against the reported optimum within 5 standard errors.
inline VerifyReport verify_control(const DeterministicControl& c,
                                   double J_expected, double x,
                                   const MarketModel& m, double alpha,
                                   const RiskSpec* risk, std::size_t n_paths,
                                   std::uint64_t seed, unsigned threads = 0) {
  c.require_positive_consumption();
  if (alpha * static_cast<double>(n_paths) < 1.0)
    throw config_error("verify: n * alpha < 1, the tail is empty");
  VerifyReport rep;
  rep.J_cf = J_expected;
  const double T = m.horizon();
  const double q_abs = -normal_quantile(alpha);
  ControlIntegrals ci(c, m);

  std::vector<double> times;
  for (int i = 1; i <= 8; ++i) times.push_back(T * i / 8.0);
  const auto ens = sample_ensemble(x, c, m, times, n_paths, seed, threads);

  bool all = true;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    VerifyRow row;
    row.t = t;
    row.Q_cf = quantile_Q(x, c, m, alpha, t);
    row.var_cf = ens.bench[k] - row.Q_cf;
    row.es_cf = es_t(x, c, m, alpha, t);
    row.Q_mc = empirical_quantile(ens, alpha, t);
    row.var_mc = ens.bench[k] - row.Q_mc;
    row.es_mc = empirical_es(ens, alpha, t);

    const double sd_ln = std::sqrt(ci.y_norm_sq(t));
    const double se_q =
        sd_ln > 0.0 ? std::sqrt(alpha * (1.0 - alpha) /
                                static_cast<double>(n_paths)) *
                          sd_ln / normal_pdf(q_abs)
                    : 0.0;
    const double tol_q = std::max(6.0 * se_q * row.Q_cf, 1e-9 * ens.bench[k]);
    const double tol_es =
        std::max(8.0 * empirical_es_se(ens, alpha, t), 1e-9 * ens.bench[k]);
    const bool ok_q = std::abs(row.Q_mc - row.Q_cf) <= tol_q;
    const bool ok_es = std::abs(row.es_mc - row.es_cf) <= tol_es;

    if (risk != nullptr) {
      const double zeta_t = risk->zeta * ens.bench[k];
      const double risk_mc =
          risk->kind == MeasureKind::VaR ? row.var_mc : row.es_mc;
      const double slack =
          (risk->kind == MeasureKind::VaR ? 6.0 * se_q * row.Q_cf
                                          : 8.0 * empirical_es_se(ens, alpha, t)) /
              zeta_t +
          1e-9;
      row.risk_ratio_mc = risk_mc / zeta_t;
      if (row.risk_ratio_mc > 1.0 + slack) all = false;
    }
    row.pass = ok_q && ok_es;
    all = all && row.pass;
    rep.rows.push_back(row);
  }

  // Monte Carlo estimate of J on a fine grid: the deterministic ln v part
  // integrates exactly cell by cell; the random part uses the trapezoid of
  // ln X plus the terminal term.
  {
    const auto jg = DeterministicControl::make_grid(m, 256);
    const std::size_t K = jg.size();
    std::vector<double> mean_node(K), sd_inc(K, 0.0);
    double lnv_int = 0.0;
    {
      double prev_var = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double t = jg[k];
        mean_node[k] = std::log(x) + m.discount_R(t) - ci.V(t) +
                       ci.y_dot_theta(t) - 0.5 * ci.y_norm_sq(t);
        if (k > 0) {
          sd_inc[k] =
              std::sqrt(std::max(0.0, ci.y_norm_sq(t) - prev_var));
          prev_var = ci.y_norm_sq(t);
          const std::size_t cell = c.find_cell(0.5 * (jg[k - 1] + jg[k]));
          lnv_int += std::log(c.v_cell(cell)) * (jg[k] - jg[k - 1]);
        }
      }
    }
    const unsigned tc = effective_threads(threads);
    constexpr std::size_t kChunk = 8192;
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<double> chunk_sum(n_chunks, 0.0), chunk_sq(n_chunks, 0.0);
    detail::parallel_paths(
        n_chunks, tc, [&](std::size_t clo, std::size_t chi) {
          for (std::size_t ch = clo; ch < chi; ++ch) {
            const std::size_t plo = ch * kChunk;
            const std::size_t phi = std::min(n_paths, plo + kChunk);
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t p = plo; p < phi; ++p) {
              double mart = 0.0; // running martingale part of ln X
              double g = 0.0;
              double prev_lnX = mean_node[0];
              for (std::size_t k = 1; k < K; ++k) {
                if (sd_inc[k] > 0.0)
                  mart += sd_inc[k] * detail::normal_draw(seed ^ 0xA5A5A5A5ULL,
                                                          p, k - 1);
                const double lnX = mean_node[k] + mart;
                g += 0.5 * (prev_lnX + lnX) * (jg[k] - jg[k - 1]);
                prev_lnX = lnX;
              }
              g += prev_lnX; // + ln X_T
              s1 += g;
              s2 += g * g;
            }
            chunk_sum[ch] = s1;
            chunk_sq[ch] = s2;
          }
        });
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t ch = 0; ch < n_chunks; ++ch) {
      s1 += chunk_sum[ch];
      s2 += chunk_sq[ch];
    }
    const double n = static_cast<double>(n_paths);
    const double mean = s1 / n + lnv_int;
    const double var = std::max(0.0, s2 / n - (s1 / n) * (s1 / n));
    rep.J_mc = mean;
    rep.J_se = std::sqrt(var / n);
    VerifyCheck jc;
    jc.name = "J_monte_carlo_bracket";
    jc.value = rep.J_mc;
    jc.reference = J_expected;
    jc.tolerance = 5.0 * rep.J_se + 1e-9;
    jc.pass = std::abs(rep.J_mc - J_expected) <= jc.tolerance;
    all = all && jc.pass;
    rep.checks.push_back(jc);
  }

  rep.all_pass = all;
  return rep;
}

inline VerifyReport verify_solution(const ConstrainedSolution& sol, double x,
                                    const MarketModel& m, const RiskSpec& spec,
                                    std::size_t n_paths, std::uint64_t seed,
                                    unsigned threads = 0) {
  return verify_control(sol.control, sol.J, x, m, spec.alpha, &spec, n_paths,
                        seed, threads);
}

} // namespace riskcap

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "riskcap/es_solver.hpp"
#include "riskcap/montecarlo.hpp"
#include "riskcap/var_solver.hpp"

using namespace riskcap;
using Catch::Approx;

namespace {

DeterministicControl make_ctrl(const MarketModel& m, double yscale, double v,
                               std::size_t cells = 512) {
  return DeterministicControl::from_functions(
      m,
      [&](double t, double* out) {
        for (std::size_t j = 0; j < m.dim(); ++j)
          out[j] = yscale * m.theta_at(t)[j];
      },
      [&](double) { return v; }, cells);
}

} // namespace

TEST_CASE("deterministic control gives a deterministic ensemble") {
  const auto m1 = fixtures::make_m1();
  const auto c = make_ctrl(m1, 0.0, 0.3);
  const auto e = sample_ensemble(2.0, c, m1, {0.25, 0.5, 1.0}, 64, 7);
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    const double expected = std::log(2.0) + m1.discount_R(e.times[k]) -
                            c.cumulative_consumption(e.times[k]);
    for (std::size_t p = 0; p < e.n_paths; ++p)
      CHECK(e.log_samples[p * 3 + k] == Approx(expected).margin(1e-14));
  }
  CHECK(empirical_quantile(e, 0.05, 0.5) ==
        Approx(std::exp(std::log(2.0) + m1.discount_R(0.5) -
                        c.cumulative_consumption(0.5)))
            .epsilon(1e-13));
  CHECK(empirical_es(e, 0.05, 0.5) ==
        Approx(var_t(2.0, c, m1, 0.05, 0.5)).margin(1e-12));
}

TEST_CASE("ensemble is bit-identical across worker counts") {
  const auto m1 = fixtures::make_m1();
  const auto c = make_ctrl(m1, 1.0, 0.5);
  const auto e1 = sample_ensemble(1.0, c, m1, {0.5, 1.0}, 30000, 42, 1);
  const auto e8 = sample_ensemble(1.0, c, m1, {0.5, 1.0}, 30000, 42, 8);
  REQUIRE(e1.log_samples.size() == e8.log_samples.size());
  for (std::size_t i = 0; i < e1.log_samples.size(); ++i) {
    REQUIRE(e1.log_samples[i] == e8.log_samples[i]); // exact bits
  }
  // and different seeds give different draws
  const auto e2 = sample_ensemble(1.0, c, m1, {0.5, 1.0}, 64, 43, 1);
  CHECK(e2.log_samples[0] != e1.log_samples[0]);
}

TEST_CASE("column moments match the closed-form law") {
  const auto m1 = fixtures::make_m1();
  const auto c = make_ctrl(m1, 1.0, 0.0);
  const std::size_t n = 200000;
  const auto e = sample_ensemble(1.0, c, m1, {0.5, 1.0}, n, 99);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto law =
        wealth_log_mean_and_var(1.0, c, m1, e.times[k]);
    const auto col = e.column(k);
    double s1 = 0.0, s2 = 0.0;
    for (double v : col) {
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    const double se_mean = std::sqrt(law.variance / n);
    const double se_var = law.variance * std::sqrt(2.0 / n);
    CHECK(std::abs(mean - law.mean) < 5.0 * se_mean);
    CHECK(std::abs(var - law.variance) < 5.0 * se_var);
  }
}

TEST_CASE("Kolmogorov-Smirnov distance against the exact law") {
  const auto m1 = fixtures::make_m1();
  const auto c = make_ctrl(m1, 1.0, 0.3);
  const std::size_t n = 100000;
  const auto e = sample_ensemble(1.0, c, m1, {1.0}, n, 1234);
  const auto law = wealth_log_mean_and_var(1.0, c, m1, 1.0);
  auto col = e.column(0);
  std::sort(col.begin(), col.end());
  const double sd = std::sqrt(law.variance);
  double D = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = normal_cdf((col[i] - law.mean) / sd);
    const double hi = static_cast<double>(i + 1) / n;
    const double lo = static_cast<double>(i) / n;
    D = std::max(D, std::max(std::abs(F - hi), std::abs(F - lo)));
  }
  // 1% critical value of the KS statistic
  CHECK(D * std::sqrt(static_cast<double>(n)) < 1.63);
}

TEST_CASE("empirical quantile matches the closed form on M1") {
  const auto m1 = fixtures::make_m1();
  const auto c = DeterministicControl::from_functions(
      m1, [&](double t, double* out) { out[0] = m1.theta_at(t)[0]; },
      [&](double t) { return 1.0 / m1.omega(t); }, 1024);
  const std::size_t n = 200000;
  const auto e = sample_ensemble(1.0, c, m1, {0.5, 1.0}, n, 2024);
  for (double t : {0.5, 1.0}) {
    for (double alpha : {0.01, 0.05}) {
      const double cf = quantile_Q(1.0, c, m1, alpha, t);
      const double mc = empirical_quantile(e, alpha, t);
      CHECK(std::abs(mc - cf) / cf < 0.01);
    }
  }
  SECTION("median of the lognormal is the exponentiated log-mean") {
    const auto law = wealth_log_mean_and_var(1.0, c, m1, 1.0);
    CHECK(empirical_quantile(e, 0.5, 1.0) ==
          Approx(std::exp(law.mean)).epsilon(0.01));
  }
  SECTION("empirical ES dominates empirical VaR") {
    for (double t : {0.5, 1.0}) {
      for (double alpha : {0.01, 0.05, 0.2}) {
        const double var_mc =
            e.bench[e.time_index(t)] - empirical_quantile(e, alpha, t);
        CHECK(empirical_es(e, alpha, t) >= var_mc - 1e-12);
      }
    }
  }
}

TEST_CASE("empirical estimator domain errors") {
  const auto m1 = fixtures::make_m1();
  const auto c = make_ctrl(m1, 1.0, 0.2);
  const auto e = sample_ensemble(1.0, c, m1, {0.5}, 50, 5);
  CHECK_THROWS_AS(empirical_quantile(e, 0.05, 0.25), std::domain_error);
  CHECK_THROWS_AS(empirical_es(e, 0.01, 0.5), std::domain_error); // 50*0.01<1
}

TEST_CASE("quantile error halves when the sample doubles") {
  const auto m1 = fixtures::make_m1();
  const auto c = make_ctrl(m1, 1.0, 0.0, 128);
  const double alpha = 0.05;
  // pooled over 16 replicates and three columns: the sd ratio concentrates
  // near sqrt(2)
  double num = 0.0, den = 0.0;
  const std::vector<double> times{0.25, 0.5, 1.0};
  for (std::size_t col = 0; col < times.size(); ++col) {
    std::vector<double> qs_small, qs_big;
    for (int rep = 0; rep < 16; ++rep) {
      const auto es = sample_ensemble(1.0, c, m1, times, 4096,
                                      1000 + rep * 2, 2);
      const auto eb = sample_ensemble(1.0, c, m1, times, 8192,
                                      5000 + rep * 2, 2);
      qs_small.push_back(empirical_quantile(es, alpha, times[col]));
      qs_big.push_back(empirical_quantile(eb, alpha, times[col]));
    }
    auto sd = [](const std::vector<double>& v) {
      double s1 = 0.0, s2 = 0.0;
      for (double x : v) {
        s1 += x;
        s2 += x * x;
      }
      const double n = static_cast<double>(v.size());
      return std::sqrt(std::max(0.0, s2 / n - (s1 / n) * (s1 / n)));
    };
    num += sd(qs_small) * sd(qs_small);
    den += sd(qs_big) * sd(qs_big);
  }
  const double ratio = std::sqrt(num / den);
  CHECK(ratio > 1.2);
  CHECK(ratio < 1.7);
}

TEST_CASE("verify_solution on the riskless regime is deterministic") {
  const auto m1 = fixtures::make_m1();
  const RiskSpec spec(0.01, 0.1, MeasureKind::VaR);
  const auto sol = solve_var(1.0, m1, spec);
  const auto rep = verify_solution(sol, 1.0, m1, spec, 2000, 11);
  CHECK(rep.all_pass);
  for (const auto& row : rep.rows) {
    CHECK(row.Q_mc == Approx(row.Q_cf).epsilon(1e-12));
    CHECK(row.risk_ratio_mc <= 1.0 + 1e-9);
  }
  CHECK(rep.J_se == Approx(0.0).margin(1e-12));
  CHECK(rep.J_mc == Approx(sol.J).margin(1e-6));
}

TEST_CASE("verify against the unconstrained closed form on M1") {
  const auto m1 = fixtures::make_m1();
  const auto unc = solve_unconstrained(1.0, m1, 1024);
  const auto rep = verify_control(unc.control, unc.J, 1.0, m1, 0.01, nullptr,
                                  100000, 31);
  CHECK(rep.all_pass);
  CHECK(std::abs(rep.J_mc - (-1.2644193611198906)) <= 5.0 * rep.J_se + 1e-9);
  CHECK(rep.J_se < 2e-3);
}

TEST_CASE("verify an ES interior solution reproduces the binding cap") {
  const auto m2 = fixtures::make_m2();
  const RiskSpec spec(1e-10, 0.6, MeasureKind::ES);
  SolverOptions opts;
  opts.grid_cells = 2048;
  const auto sol = solve_es(1.0, m2, spec, opts);
  const std::size_t n = 400000; // n * alpha >= 1 needs large n at 1e-10...
  // alpha = 1e-10 makes the empirical tail unusable; verify with a coarser
  // alpha against the closed forms of the same control instead.
  const auto rep =
      verify_control(sol.control, sol.J, 1.0, m2, 0.01, nullptr, n / 4, 17);
  CHECK(rep.all_pass);
  // empirical attainment of the cap at T: m_T/(x e^{R_T}) ~ 1 - zeta via
  // the closed-form identity (statistical check happens in verify rows)
  const double Lbar = log_constraint_es_L(sol.control, m2, 1e-10, 1.0);
  CHECK(std::exp(Lbar) == Approx(0.4).margin(1e-8));
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "riskcap/errors.hpp"
#include "riskcap/quadrature.hpp"

namespace riskcap {

/// One piece of the deterministic coefficient schedule on [t_start, t_end):
/// riskless rate r, appreciation vector mu, volatility matrix sigma
/// (row-major d x d). Constant on the piece; the schedule is cadlag.
struct CoefficientPiece {
  double t_start = 0.0;
  double t_end = 0.0;
  double r = 0.0;
  std::vector<double> mu;
  std::vector<double> sigma; // row-major d*d
};

namespace detail {

// Solves A x = b by Gaussian elimination with partial pivoting.
// Throws config_error when a pivot falls below pivot_rel of the largest
// entry of A. A is row-major n x n and is destroyed.
inline std::vector<double> solve_dense(std::vector<double> A,
                                       std::vector<double> b,
                                       std::size_t n, double pivot_rel,
                                       const std::string& what) {
  double amax = 0.0;
  for (double v : A) amax = std::max(amax, std::abs(v));
  if (amax == 0.0) throw config_error(what + ": sigma not invertible");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(A[row * n + col]) > std::abs(A[piv * n + col])) piv = row;
    }
    if (std::abs(A[piv * n + col]) < pivot_rel * amax)
      throw config_error(what + ": sigma not invertible");
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k)
        std::swap(A[piv * n + k], A[col * n + k]);
      std::swap(b[piv], b[col]);
    }
    const double inv = 1.0 / A[col * n + col];
    for (std::size_t row = col + 1; row < n; ++row) {
      const double factor = A[row * n + col] * inv;
      if (factor == 0.0) continue;
      for (std::size_t k = col; k < n; ++k)
        A[row * n + k] -= factor * A[col * n + k];
      b[row] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= A[i * n + k] * x[k];
    x[i] = acc / A[i * n + i];
  }
  return x;
}

} // namespace detail

/// Black-Scholes market with piecewise-constant deterministic coefficients
/// on [0, T]. Derives the market price of risk theta = sigma^{-1}(mu - r 1)
/// per piece at construction and is immutable afterwards. omega(t) = T-t+1.
class MarketModel {
public:
  MarketModel(double T, std::size_t d, std::vector<CoefficientPiece> pieces)
      : T_(T), d_(d), pieces_(std::move(pieces)) {
    validate_schedule();
    derive();
  }

  double horizon() const noexcept { return T_; }
  std::size_t dim() const noexcept { return d_; }
  std::size_t piece_count() const noexcept { return pieces_.size(); }
  const CoefficientPiece& piece(std::size_t i) const { return pieces_[i]; }

  /// Index of the piece containing t; pieces are right-continuous
  /// ([t_start, t_end), last piece closed at T).
  std::size_t piece_index(double t) const {
    check_time(t);
    std::size_t lo = 0, hi = pieces_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi + 1) / 2;
      if (t >= pieces_[mid].t_start)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  double omega(double t) const {
    check_time(t);
    return T_ - t + 1.0;
  }

  double r_at(double t) const { return pieces_[piece_index(t)].r; }

  const std::vector<double>& theta_at(double t) const {
    return theta_[piece_index(t)];
  }

  /// |theta_t|^2 as a function of t (piecewise constant).
  double theta_sq_at(double t) const { return theta_sq_[piece_index(t)]; }

  /// R_t = int_0^t r_u du, exact on the piecewise-constant schedule.
  double discount_R(double t) const {
    const std::size_t i = piece_index(t);
    return r_cum_[i] + pieces_[i].r * (t - pieces_[i].t_start);
  }

  /// ||theta||_t^2 = int_0^t |theta_u|^2 du, exact.
  double theta_norm_sq(double t) const {
    const std::size_t i = piece_index(t);
    return theta_sq_cum_[i] + theta_sq_[i] * (t - pieces_[i].t_start);
  }

  double theta_norm_T() const { return std::sqrt(theta_norm_sq(T_)); }

  /// sup_t |theta_t| (attained: finitely many pieces).
  double theta_sup() const {
    double s = 0.0;
    for (double v : theta_sq_) s = std::max(s, v);
    return std::sqrt(s);
  }

  /// Piece boundaries 0 = b_0 < ... < b_k = T.
  const std::vector<double>& breakpoints() const noexcept { return breaks_; }

  /// Integral of a scalar function over [a, b], split at piece boundaries
  /// and evaluated by the adaptive composite Gauss rule on each part.
  template <typename F>
  double integrate(F&& f, double a, double b,
                   const QuadratureSpec& q = {}) const {
    if (!(a <= b)) throw std::domain_error("integrate: requires a <= b");
    check_time(a);
    check_time(b);
    double acc = 0.0;
    double lo = a;
    for (double br : breaks_) {
      if (br <= lo) continue;
      if (br >= b) break;
      acc += integrate_smooth(f, lo, br, q);
      lo = br;
    }
    acc += integrate_smooth(f, lo, b, q);
    return acc;
  }

private:
  void check_time(double t) const {
    if (!(t >= 0.0 && t <= T_))
      throw std::domain_error("time outside [0, T]");
  }

  void validate_schedule() {
    if (!(T_ > 0.0)) throw config_error("MarketModel: T must be > 0");
    if (d_ == 0) throw config_error("MarketModel: d must be >= 1");
    if (pieces_.empty()) throw config_error("MarketModel: no pieces");
    const double tol = 1e-12 * (1.0 + T_);
    if (std::abs(pieces_.front().t_start) > tol)
      throw config_error("MarketModel: schedule must start at t = 0");
    if (std::abs(pieces_.back().t_end - T_) > tol)
      throw config_error("MarketModel: schedule must end at t = T");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      auto& p = pieces_[i];
      if (!(p.t_start < p.t_end))
        throw config_error("MarketModel: piece with t_start >= t_end");
      if (i > 0 && std::abs(p.t_start - pieces_[i - 1].t_end) > tol)
        throw config_error("MarketModel: pieces must tile [0, T]");
      if (i > 0) p.t_start = pieces_[i - 1].t_end; // snap exact
      if (p.mu.size() != d_)
        throw config_error("MarketModel: mu has wrong dimension");
      if (p.sigma.size() != d_ * d_)
        throw config_error("MarketModel: sigma has wrong dimension");
      for (double v : p.mu)
        if (!std::isfinite(v)) throw config_error("MarketModel: mu not finite");
      for (double v : p.sigma)
        if (!std::isfinite(v))
          throw config_error("MarketModel: sigma not finite");
      if (!std::isfinite(p.r))
        throw config_error("MarketModel: r not finite");
    }
    pieces_.front().t_start = 0.0;
    pieces_.back().t_end = T_;
  }

  void derive() {
    theta_.reserve(pieces_.size());
    theta_sq_.reserve(pieces_.size());
    breaks_.reserve(pieces_.size() + 1);
    breaks_.push_back(0.0);
    double r_acc = 0.0, th_acc = 0.0;
    for (const auto& p : pieces_) {
      // Solvability probe: sigma x = 1 must hold to 1e-8 relative.
      std::vector<double> ones(d_, 1.0);
      auto x = detail::solve_dense(p.sigma, ones, d_, 1e-12, "MarketModel");
      double resid = 0.0;
      for (std::size_t i = 0; i < d_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d_; ++j) row += p.sigma[i * d_ + j] * x[j];
        resid += (row - 1.0) * (row - 1.0);
      }
      if (std::sqrt(resid / static_cast<double>(d_)) > 1e-8)
        throw config_error("MarketModel: sigma not invertible");

      std::vector<double> excess(d_);
      for (std::size_t i = 0; i < d_; ++i) excess[i] = p.mu[i] - p.r;
      auto th = detail::solve_dense(p.sigma, std::move(excess), d_, 1e-12,
                                    "MarketModel");
      double sq = 0.0;
      for (double v : th) sq += v * v;
      r_cum_.push_back(r_acc);
      theta_sq_cum_.push_back(th_acc);
      r_acc += p.r * (p.t_end - p.t_start);
      th_acc += sq * (p.t_end - p.t_start);
      theta_.push_back(std::move(th));
      theta_sq_.push_back(sq);
      breaks_.push_back(p.t_end);
    }
  }

  double T_;
  std::size_t d_;
  std::vector<CoefficientPiece> pieces_;
  std::vector<std::vector<double>> theta_;
  std::vector<double> theta_sq_;
  std::vector<double> r_cum_;        // R at piece starts
  std::vector<double> theta_sq_cum_; // ||theta||^2 at piece starts
  std::vector<double> breaks_;
};

/// int_a^b omega(t) dt, exact (omega is linear).
inline double omega_integral(const MarketModel& m, double a, double b) {
  return (b - a) * (m.horizon() + 1.0 - 0.5 * (a + b));
}

} // namespace riskcap

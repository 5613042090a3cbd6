#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "riskcap/errors.hpp"
#include "riskcap/market.hpp"

namespace riskcap {

namespace detail {

/// Shortest round-trip decimal formatting.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw config_error("invalid number in CSV: '" + std::string(s) + "'");
  return v;
}

// two-point Gauss average of f over [a, b]
template <typename F>
double cell_average2(F&& f, double a, double b) {
  constexpr double x = 0.5773502691896257; // 1/sqrt(3)
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  return 0.5 * (f(c - h * x) + f(c + h * x));
}

// four-point Gauss average
template <typename F>
double cell_average4(F&& f, double a, double b) {
  constexpr double x1 = 0.3399810435848563, w1 = 0.6521451548625461;
  constexpr double x2 = 0.8611363115940526, w2 = 0.34785484513745385;
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  return 0.5 * (w1 * (f(c - h * x1) + f(c + h * x1)) +
                w2 * (f(c - h * x2) + f(c + h * x2)));
}

} // namespace detail

/// Deterministic control nu = (y, v) stored as piecewise-constant cell
/// values on a strictly increasing grid 0 = g_0 < ... < g_N = T. All
/// functionals integrate such controls exactly cell by cell. Smooth
/// strategies are represented by their per-cell averages.
class DeterministicControl {
public:
  /// Empty placeholder; result structs fill it by move.
  DeterministicControl() = default;

  DeterministicControl(std::vector<double> grid, std::vector<double> y_cells,
                       std::vector<double> v_cells, std::size_t d)
      : grid_(std::move(grid)), y_(std::move(y_cells)), v_(std::move(v_cells)),
        d_(d) {
    if (grid_.size() < 2)
      throw config_error("DeterministicControl: grid needs >= 2 points");
    for (std::size_t i = 1; i < grid_.size(); ++i)
      if (!(grid_[i] > grid_[i - 1]))
        throw config_error("DeterministicControl: grid must be increasing");
    const std::size_t cells = grid_.size() - 1;
    if (v_.size() != cells || y_.size() != cells * d_)
      throw config_error("DeterministicControl: cell array size mismatch");
    for (double w : y_)
      if (!std::isfinite(w))
        throw config_error("DeterministicControl: y not finite");
    for (double w : v_) {
      if (!std::isfinite(w) || w < 0.0)
        throw config_error("DeterministicControl: v must be finite and >= 0");
    }
    build_v_prefix();
  }

  /// Control grid for a market: `cells` uniform cells on [0, T] merged with
  /// every coefficient breakpoint.
  static std::vector<double> make_grid(const MarketModel& m,
                                       std::size_t cells) {
    const double T = m.horizon();
    std::vector<double> g;
    g.reserve(cells + 1 + m.breakpoints().size());
    for (std::size_t i = 0; i <= cells; ++i)
      g.push_back(T * static_cast<double>(i) / static_cast<double>(cells));
    g.insert(g.end(), m.breakpoints().begin(), m.breakpoints().end());
    std::sort(g.begin(), g.end());
    const double tol = 1e-12 * (1.0 + T);
    std::vector<double> out;
    out.reserve(g.size());
    out.push_back(0.0);
    for (double t : g)
      if (t - out.back() > tol) out.push_back(t);
    out.back() = T;
    return out;
  }

  /// Builds a control by per-cell averaging of smooth strategy functions.
  /// y_fn(t, out) fills a d-vector; v_fn(t) is the consumption rate.
  template <typename YFn, typename VFn>
  static DeterministicControl from_functions(const MarketModel& m, YFn&& y_fn,
                                             VFn&& v_fn, std::size_t cells) {
    auto grid = make_grid(m, cells);
    const std::size_t n = grid.size() - 1;
    const std::size_t d = m.dim();
    std::vector<double> y(n * d), v(n);
    std::vector<double> buf(d);
    for (std::size_t k = 0; k < n; ++k) {
      const double a = grid[k], b = grid[k + 1];
      for (std::size_t j = 0; j < d; ++j) {
        y[k * d + j] = detail::cell_average4(
            [&](double t) {
              y_fn(t, buf.data());
              return buf[j];
            },
            a, b);
      }
      v[k] = detail::cell_average4(v_fn, a, b);
    }
    return DeterministicControl(std::move(grid), std::move(y), std::move(v),
                                d);
  }

  std::size_t dim() const noexcept { return d_; }
  std::size_t cell_count() const noexcept { return grid_.size() - 1; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  double horizon() const noexcept { return grid_.back(); }
  const double* y_cell(std::size_t k) const { return &y_[k * d_]; }
  double v_cell(std::size_t k) const { return v_[k]; }
  const std::vector<double>& y_raw() const noexcept { return y_; }
  const std::vector<double>& v_raw() const noexcept { return v_; }

  /// Cell index containing t; cells are [g_k, g_{k+1}), last cell closed.
  std::size_t find_cell(double t) const {
    if (!(t >= grid_.front() && t <= grid_.back()))
      throw std::domain_error("control time outside [0, T]");
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    const std::size_t idx = static_cast<std::size_t>(it - grid_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, grid_.size() - 2);
  }

  /// V_t = int_0^t v_u du; exact piecewise-linear accumulation.
  double cumulative_consumption(double t) const {
    const std::size_t k = find_cell(t);
    return v_prefix_nodes_[k] + v_[k] * (t - grid_[k]);
  }

  double total_consumption() const { return v_prefix_nodes_.back(); }

  /// V at every grid node (size N+1).
  const std::vector<double>& consumption_nodes() const noexcept {
    return v_prefix_nodes_;
  }

  /// Throws unless v > 0 on every cell (needed wherever ln v enters).
  void require_positive_consumption() const {
    for (double w : v_)
      if (!(w > 0.0))
        throw config_error(
            "control inadmissible: v must be > 0 on every cell");
  }

  /// CSV export: header t,y_1..y_d,v; one row per cell left endpoint plus a
  /// final row at T repeating the last cell values.
  void to_csv(std::ostream& os) const {
    os << "t";
    for (std::size_t j = 1; j <= d_; ++j) os << ",y_" << j;
    os << ",v\n";
    const std::size_t n = cell_count();
    for (std::size_t k = 0; k <= n; ++k) {
      const std::size_t cell = std::min(k, n - 1);
      os << detail::format_double(grid_[k]);
      for (std::size_t j = 0; j < d_; ++j)
        os << ',' << detail::format_double(y_[cell * d_ + j]);
      os << ',' << detail::format_double(v_[cell]) << '\n';
    }
  }

  static DeterministicControl from_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
      throw config_error("control CSV: missing header");
    std::size_t cols = 1;
    for (char c : line) cols += (c == ',');
    if (cols < 3) throw config_error("control CSV: expected t,y_1..y_d,v");
    const std::size_t d = cols - 2;
    std::vector<double> grid, y, v;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string_view> parts;
      std::string_view sv(line);
      std::size_t pos = 0;
      while (true) {
        const std::size_t nxt = sv.find(',', pos);
        parts.push_back(sv.substr(pos, nxt == std::string_view::npos
                                           ? std::string_view::npos
                                           : nxt - pos));
        if (nxt == std::string_view::npos) break;
        pos = nxt + 1;
      }
      if (parts.size() != cols)
        throw config_error("control CSV: ragged row");
      grid.push_back(detail::parse_double(parts[0]));
      for (std::size_t j = 0; j < d; ++j)
        y.push_back(detail::parse_double(parts[1 + j]));
      v.push_back(detail::parse_double(parts[cols - 1]));
    }
    if (grid.size() < 2) throw config_error("control CSV: too few rows");
    // Drop the duplicated final row's cell values.
    y.resize((grid.size() - 1) * d);
    v.resize(grid.size() - 1);
    return DeterministicControl(std::move(grid), std::move(y), std::move(v),
                                d);
  }

private:
  void build_v_prefix() {
    const std::size_t n = cell_count();
    v_prefix_nodes_.assign(n + 1, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += v_[k] * (grid_[k + 1] - grid_[k]);
      v_prefix_nodes_[k + 1] = acc;
    }
  }

  std::vector<double> grid_;
  std::vector<double> y_; // cell-major, cell*d + j
  std::vector<double> v_;
  std::size_t d_ = 0;
  std::vector<double> v_prefix_nodes_; // V at all grid nodes
};

} // namespace riskcap

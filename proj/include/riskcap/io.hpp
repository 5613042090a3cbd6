#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskcap/control.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/market.hpp"
#include "riskcap/montecarlo.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/solution.hpp"

namespace riskcap {

using json = nlohmann::json;

/// Market configuration:
/// { "T": .., "d": .., "pieces": [ { "t_start", "t_end", "r",
///   "mu": [..], "sigma": [[..],..] } ] }
inline MarketModel market_from_json(const json& j) {
  try {
    const double T = j.at("T").get<double>();
    const std::size_t d = j.at("d").get<std::size_t>();
    std::vector<CoefficientPiece> pieces;
    for (const auto& pj : j.at("pieces")) {
      CoefficientPiece p;
      p.t_start = pj.at("t_start").get<double>();
      p.t_end = pj.at("t_end").get<double>();
      p.r = pj.at("r").get<double>();
      p.mu = pj.at("mu").get<std::vector<double>>();
      const auto& sj = pj.at("sigma");
      if (!sj.is_array() || sj.size() != d)
        throw config_error("market config: sigma must be a d x d matrix");
      for (const auto& row : sj) {
        const auto r = row.get<std::vector<double>>();
        if (r.size() != d)
          throw config_error("market config: sigma must be a d x d matrix");
        p.sigma.insert(p.sigma.end(), r.begin(), r.end());
      }
      pieces.push_back(std::move(p));
    }
    return MarketModel(T, d, std::move(pieces));
  } catch (const json::exception& e) {
    throw config_error(std::string("market config: ") + e.what());
  }
}

inline json market_to_json(const MarketModel& m) {
  json j;
  j["T"] = m.horizon();
  j["d"] = m.dim();
  j["pieces"] = json::array();
  for (std::size_t i = 0; i < m.piece_count(); ++i) {
    const auto& p = m.piece(i);
    json pj;
    pj["t_start"] = p.t_start;
    pj["t_end"] = p.t_end;
    pj["r"] = p.r;
    pj["mu"] = p.mu;
    json sj = json::array();
    for (std::size_t r = 0; r < m.dim(); ++r) {
      sj.push_back(std::vector<double>(p.sigma.begin() + r * m.dim(),
                                       p.sigma.begin() + (r + 1) * m.dim()));
    }
    pj["sigma"] = sj;
    j["pieces"].push_back(pj);
  }
  return j;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

/// One run of the batch tool: market plus measure settings. The market may
/// be given inline (object) or as a path to a market JSON file.
struct RunConfig {
  std::optional<json> market_inline;
  std::string market_path;
  std::string measure = "none"; // var | es | none
  double alpha = 0.01;
  double zeta = 0.1;
  double x = 1.0;
  std::string out_dir = ".";
  std::size_t grid = 512;
  std::size_t paths = 100000;
  std::uint64_t seed = 1;

  MarketModel load_market() const {
    if (market_inline) return market_from_json(*market_inline);
    if (market_path.empty())
      throw config_error("run config: no market given");
    return market_from_json(load_json_file(market_path));
  }
};

inline RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  try {
    if (j.contains("market")) {
      if (j["market"].is_string())
        cfg.market_path = j["market"].get<std::string>();
      else
        cfg.market_inline = j["market"];
    }
    if (j.contains("measure")) cfg.measure = j["measure"].get<std::string>();
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("zeta")) cfg.zeta = j["zeta"].get<double>();
    if (j.contains("x")) cfg.x = j["x"].get<double>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("grid")) cfg.grid = j["grid"].get<std::size_t>();
    if (j.contains("paths")) cfg.paths = j["paths"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw config_error(std::string("run config: ") + e.what());
  }
  if (cfg.measure != "var" && cfg.measure != "es" && cfg.measure != "none")
    throw config_error("run config: measure must be var, es or none");
  return cfg;
}

inline json conditions_to_json(const std::vector<ConditionCheck>& cs) {
  json arr = json::array();
  for (const auto& c : cs) {
    json cj;
    cj["name"] = c.name;
    cj["lhs"] = c.lhs;
    cj["rhs"] = c.rhs;
    cj["holds"] = c.holds;
    arr.push_back(cj);
  }
  return arr;
}

inline json solution_summary_json(const ConstrainedSolution& sol, double x) {
  json j;
  j["measure"] = to_string(sol.measure);
  j["regime"] = to_string(sol.regime);
  j["gamma"] = sol.gamma;
  j["lambda"] = sol.lambda;
  j["rho"] = sol.rho;
  j["J"] = sol.J;
  j["A"] = sol.A;
  j["x"] = x;
  j["conditions"] = conditions_to_json(sol.conditions);
  j["feasibility"] = {{"feasible", sol.feasibility.feasible},
                      {"min_margin", sol.feasibility.min_margin},
                      {"argmin_t", sol.feasibility.argmin_t}};
  return j;
}

inline json feasibility_to_json(const FeasibilityReport& rep) {
  return json{{"feasible", rep.feasible},
              {"min_margin", rep.min_margin},
              {"argmin_t", rep.argmin_t}};
}

inline json verify_report_json(const VerifyReport& rep) {
  json j;
  j["all_pass"] = rep.all_pass;
  j["J_mc"] = rep.J_mc;
  j["J_se"] = rep.J_se;
  j["J_cf"] = rep.J_cf;
  j["rows"] = json::array();
  for (const auto& r : rep.rows) {
    j["rows"].push_back({{"t", r.t},
                         {"Q_cf", r.Q_cf},
                         {"Q_mc", r.Q_mc},
                         {"var_cf", r.var_cf},
                         {"var_mc", r.var_mc},
                         {"es_cf", r.es_cf},
                         {"es_mc", r.es_mc},
                         {"risk_ratio_mc", r.risk_ratio_mc},
                         {"pass", r.pass}});
  }
  j["checks"] = json::array();
  for (const auto& c : rep.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"value", c.value},
                           {"reference", c.reference},
                           {"tolerance", c.tolerance},
                           {"pass", c.pass}});
  }
  return j;
}

/// solution.csv: the control rows extended with the weight, the closed-form
/// quantile, the measure value and its ratio to the cap.
inline void write_solution_csv(std::ostream& os, const ConstrainedSolution& sol,
                               double x, const MarketModel& m,
                               const RiskSpec* spec, double alpha) {
  const auto& c = sol.control;
  ControlIntegrals ci(c, m);
  const double q_abs = -normal_quantile(alpha);
  os << "t";
  for (std::size_t j = 1; j <= c.dim(); ++j) os << ",y_" << j;
  os << ",v,weight,Q_t,risk_t,risk_ratio\n";
  const std::size_t n = c.cell_count();
  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t cell = std::min(k, n - 1);
    const double t = c.grid()[k];
    const double nsq = ci.y_norm_sq(t);
    const double bench = x * std::exp(m.discount_R(t));
    const double Q = x * std::exp(m.discount_R(t) - ci.V(t) +
                                  ci.y_dot_theta(t) - 0.5 * nsq -
                                  q_abs * std::sqrt(nsq));
    double risk = 0.0;
    if (spec != nullptr && spec->kind == MeasureKind::ES) {
      risk = bench - x * std::exp(f_alpha_log(std::sqrt(nsq), q_abs) +
                                  m.discount_R(t) - ci.V(t) +
                                  ci.y_dot_theta(t));
    } else {
      risk = bench - Q;
    }
    const double ratio = spec != nullptr
                             ? risk / (spec->zeta * bench)
                             : std::numeric_limits<double>::quiet_NaN();
    os << detail::format_double(t);
    for (std::size_t j = 0; j < c.dim(); ++j)
      os << ',' << detail::format_double(c.y_cell(cell)[j]);
    os << ',' << detail::format_double(c.v_cell(cell));
    os << ',' << detail::format_double(sol.weight[k]);
    os << ',' << detail::format_double(Q);
    os << ',' << detail::format_double(risk);
    os << ',' << detail::format_double(ratio);
    os << '\n';
  }
}

} // namespace riskcap

// Batch front door: solve the capped investment/consumption problem from a
// JSON config, verify a solution by Monte Carlo, or run the numerical
// self-check suite.
//
// Exit codes: 0 ok, 1 failed check, 2 config error, 3 infeasible,
// 4 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "riskcap/io.hpp"
#include "riskcap/riskcap.hpp"

namespace fs = std::filesystem;
using riskcap::json;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string measure;
  std::optional<double> alpha, zeta, x;
  std::string out_dir;
  std::optional<std::size_t> paths, grid;
  std::optional<std::uint64_t> seed;
};

riskcap::RunConfig resolve_config(const CliOverrides& o) {
  riskcap::RunConfig cfg;
  if (!o.config_path.empty())
    cfg = riskcap::run_config_from_json(riskcap::load_json_file(o.config_path));
  if (!o.measure.empty()) cfg.measure = o.measure;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.zeta) cfg.zeta = *o.zeta;
  if (o.x) cfg.x = *o.x;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.paths) cfg.paths = *o.paths;
  if (o.grid) cfg.grid = *o.grid;
  if (o.seed) cfg.seed = *o.seed;
  if (cfg.measure != "var" && cfg.measure != "es" && cfg.measure != "none")
    throw riskcap::config_error("measure must be var, es or none");
  return cfg;
}

riskcap::ConstrainedSolution solve_from_config(const riskcap::RunConfig& cfg,
                                               const riskcap::MarketModel& m) {
  riskcap::SolverOptions opts;
  opts.grid_cells = cfg.grid;
  if (cfg.measure == "var") {
    riskcap::RiskSpec spec(cfg.alpha, cfg.zeta, riskcap::MeasureKind::VaR);
    return riskcap::solve_var(cfg.x, m, spec, opts);
  }
  riskcap::RiskSpec spec(cfg.alpha, cfg.zeta, riskcap::MeasureKind::ES);
  return riskcap::solve_es(cfg.x, m, spec, opts);
}

int cmd_solve(const riskcap::RunConfig& cfg) {
  const auto m = cfg.load_market();
  fs::create_directories(cfg.out_dir);

  json summary;
  riskcap::ConstrainedSolution sol;
  std::optional<riskcap::RiskSpec> spec;
  if (cfg.measure == "none") {
    auto unc = riskcap::solve_unconstrained(cfg.x, m, cfg.grid);
    sol.measure = riskcap::MeasureKind::VaR;
    sol.regime = riskcap::Regime::Unconstrained;
    sol.gamma = m.horizon() / (m.horizon() + 1.0);
    sol.lambda = 0.0;
    sol.rho = m.theta_norm_T();
    sol.J = unc.J;
    sol.A = riskcap::A_of_x(cfg.x, m);
    sol.control = std::move(unc.control);
    sol.weight.assign(sol.control.grid().size(), 1.0);
    summary = riskcap::solution_summary_json(sol, cfg.x);
    summary["measure"] = "none";
    summary["regime"] = "unconstrained-base";
  } else {
    spec.emplace(cfg.alpha, cfg.zeta,
                 cfg.measure == "var" ? riskcap::MeasureKind::VaR
                                      : riskcap::MeasureKind::ES);
    sol = solve_from_config(cfg, m);
    summary = riskcap::solution_summary_json(sol, cfg.x);
  }

  {
    std::ofstream os(fs::path(cfg.out_dir) / "solution.csv");
    riskcap::write_solution_csv(os, sol, cfg.x, m,
                                spec ? &*spec : nullptr, cfg.alpha);
  }
  {
    std::ofstream os(fs::path(cfg.out_dir) / "summary.json");
    os << summary.dump(2) << '\n';
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_simulate(const riskcap::RunConfig& cfg) {
  const auto m = cfg.load_market();
  if (cfg.alpha * static_cast<double>(cfg.paths) < 1.0)
    throw riskcap::config_error(
        "simulate: paths * alpha < 1; the empirical tail would be empty");
  fs::create_directories(cfg.out_dir);

  // Reuse a prior solve when present; otherwise solve inline.
  const fs::path sum_path = fs::path(cfg.out_dir) / "summary.json";
  const fs::path csv_path = fs::path(cfg.out_dir) / "solution.csv";
  riskcap::VerifyReport rep;
  std::optional<riskcap::RiskSpec> spec;
  if (cfg.measure != "none")
    spec.emplace(cfg.alpha, cfg.zeta,
                 cfg.measure == "var" ? riskcap::MeasureKind::VaR
                                      : riskcap::MeasureKind::ES);
  if (fs::exists(sum_path) && fs::exists(csv_path)) {
    const auto summary = riskcap::load_json_file(sum_path.string());
    std::ifstream is(csv_path);
    // solution.csv carries extra columns; keep the t, y_*, v prefix.
    std::stringstream trimmed;
    std::string line;
    std::size_t keep = 0;
    if (std::getline(is, line)) {
      std::vector<std::string> cols;
      std::stringstream hs(line);
      std::string tok;
      while (std::getline(hs, tok, ',')) cols.push_back(tok);
      for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == "v") keep = i + 1;
      if (keep == 0) throw riskcap::config_error("solution.csv: no v column");
      auto cut_line = [keep](const std::string& s) {
        std::size_t commas = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (s[i] == ',' && ++commas == keep) return s.substr(0, i);
        }
        return s;
      };
      trimmed << cut_line(line) << '\n';
      while (std::getline(is, line)) {
        if (!line.empty()) trimmed << cut_line(line) << '\n';
      }
    }
    auto control = riskcap::DeterministicControl::from_csv(trimmed);
    const double J = summary.at("J").get<double>();
    rep = riskcap::verify_control(control, J, cfg.x, m, cfg.alpha,
                                  spec ? &*spec : nullptr, cfg.paths,
                                  cfg.seed);
  } else if (cfg.measure == "none") {
    auto unc = riskcap::solve_unconstrained(cfg.x, m, cfg.grid);
    rep = riskcap::verify_control(unc.control, unc.J, cfg.x, m, cfg.alpha,
                                  nullptr, cfg.paths, cfg.seed);
  } else {
    const auto sol = solve_from_config(cfg, m);
    rep = riskcap::verify_solution(sol, cfg.x, m, *spec, cfg.paths, cfg.seed);
  }

  const json vj = riskcap::verify_report_json(rep);
  {
    std::ofstream os(fs::path(cfg.out_dir) / "verify.json");
    os << vj.dump(2) << '\n';
  }
  std::cout << vj.dump(2) << '\n';
  return rep.all_pass ? 0 : 1;
}

int cmd_check(const riskcap::RunConfig& cfg, double rho_perturb) {
  const auto m = cfg.load_market();
  riskcap::CheckOptions opt;
  opt.alpha = cfg.alpha;
  opt.zeta = cfg.zeta;
  opt.rho_perturb = rho_perturb;
  const auto items = riskcap::run_self_checks(m, opt);
  json j = json::array();
  bool all = true;
  for (const auto& it : items) {
    j.push_back({{"name", it.name}, {"status", it.status},
                 {"detail", it.detail}});
    if (it.status == "fail") all = false;
  }
  std::cout << j.dump(2) << '\n';
  return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"VaR/ES-capped log-utility portfolio solver"};
  app.require_subcommand(1);

  CliOverrides o;
  double rho_perturb = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--measure", o.measure, "var | es | none");
    sub->add_option("--alpha", o.alpha, "confidence level in (0, 1/2)");
    sub->add_option("--zeta", o.zeta, "risk bound in (0, 1)");
    sub->add_option("--x", o.x, "initial wealth");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--paths", o.paths, "Monte Carlo paths");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--grid", o.grid, "output grid resolution");
  };

  auto* solve = app.add_subcommand("solve", "solve and write solution/summary");
  add_common(solve);
  auto* simulate =
      app.add_subcommand("simulate", "Monte Carlo verification report");
  add_common(simulate);
  auto* check = app.add_subcommand("check", "run numerical invariant checks");
  add_common(check);
  check
      ->add_option("--test-perturb-rho", rho_perturb,
                   "fault-injection offset added to rho in residual checks")
      ->group(""); // hidden

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve_config(o);
    if (solve->parsed()) return cmd_solve(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    return cmd_check(cfg, rho_perturb);
  } catch (const riskcap::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const riskcap::infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << " (condition: " << e.condition()
              << ")\n";
    return 3;
  } catch (const riskcap::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what()
              << " (last=" << e.last_estimate()
              << ", previous=" << e.previous_estimate() << ")\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

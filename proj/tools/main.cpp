#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "p2pchp/harness.hpp"
#include "p2pchp/oracle.hpp"

namespace fs = std::filesystem;
using namespace p2pchp;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNoConvergence = 3;

std::vector<int> parse_factors(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ValidationError("bad factor '" + item + "'");
    }
    if (out.back() < 1) throw ValidationError("factors must be >= 1");
  }
  if (out.empty()) throw ValidationError("no factors given");
  return out;
}

DemandSeries demand_for(const Scenario& sc, const std::string& demand_path) {
  if (!demand_path.empty()) return load_demand_csv(demand_path);
  if (sc.n() == 6) return canonical_six_house_day();
  return generate_synthetic_demand(sc.n(), 1, 0.35);
}

int cmd_fit(const std::string& scenario_path, const std::string& out_dir) {
  const Scenario sc = load_scenario(scenario_path);
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "fits.csv");
  out << "house,alpha_gas,beta_gas,max_abs_residual_gas,"
         "alpha_water,beta_water,max_abs_residual_water,fit_lo_kw,fit_hi_kw\n";
  out << std::setprecision(12);
  for (int i = 0; i < sc.n(); ++i) {
    const LinearFit& g = sc.gas_fits[i];
    const LinearFit& w = sc.water_fits[i];
    out << sc.dwellings[i].label << "," << g.alpha << "," << g.beta << ","
        << g.max_abs_residual << "," << w.alpha << "," << w.beta << ","
        << w.max_abs_residual << "," << g.fit_lo << "," << g.fit_hi << "\n";
  }
  std::cout << "wrote " << (fs::path(out_dir) / "fits.csv").string() << " for "
            << sc.n() << " dwellings\n";
  return 0;
}

int cmd_step(const std::string& scenario_path, const std::string& demand_path,
             int step, const std::string& out_dir, bool parallel, int threads) {
  const Scenario sc = load_scenario(scenario_path);
  const DemandSeries series = demand_for(sc, demand_path);
  if (step < 1 || step > series.steps())
    throw ValidationError("step must be in 1.." + std::to_string(series.steps()));
  if (series.houses() != sc.n())
    throw ValidationError("demand series and scenario disagree on house count");

  const auto& demands = series.demand[step - 1];
  const auto adj_it = sc.step_adjacency.find(step);
  const auto* adj =
      adj_it == sc.step_adjacency.end() ? nullptr : &adj_it->second;
  const MarketStep market = build_market_step(demands, sc.dwellings, sc.gamma,
                                              sc.thermal, sc.gas_fits, adj);

  fs::create_directories(out_dir);
  std::ofstream roles(fs::path(out_dir) / "roles.csv");
  roles << "house,role,demand_kw,p_tr_lo,p_tr_hi,b_eff\n";
  roles << std::setprecision(12);
  for (int i = 0; i < sc.n(); ++i) {
    const auto& d = market.dwellings[i];
    roles << sc.dwellings[i].label << "," << role_name(d.role) << ","
          << d.demand << "," << d.p_tr_lo << "," << d.p_tr_hi << ","
          << d.b_eff << "\n";
  }

  if (market.graph.edge_list.empty()) {
    std::cout << "step " << step << ": no buyer/seller pair, market idle\n";
    std::ofstream sol(fs::path(out_dir) / "solution.csv");
    sol << "step,i,j,p_ij_kw,lambda_jpy_per_kwh\n";
    return 0;
  }

  RunOptions ro;
  ro.parallel = parallel;
  ro.threads = threads;
  ro.record_trace = true;
  const StepSolution s = run_step(market, sc.admm, ro);

  std::ofstream sol(fs::path(out_dir) / "solution.csv");
  sol << "step,i,j,p_ij_kw,lambda_jpy_per_kwh\n";
  sol << std::setprecision(12);
  for (const auto& e : s.edges)
    sol << step << "," << (e.i + 1) << "," << (e.j + 1) << "," << e.p_ij << ","
        << e.lambda / sc.thermal.dt_hours << "\n";

  std::ofstream conv(fs::path(out_dir) / "convergence.csv");
  conv << "step,iter,primal_residual,dual_residual,price_mismatch,"
          "jacobi_sweeps\n";
  conv << std::setprecision(12);
  for (const auto& r : s.trace)
    conv << step << "," << r.iter << "," << r.primal_residual << ","
         << r.dual_residual << "," << r.price_mismatch << ","
         << r.jacobi_sweeps << "\n";

  std::cout << "step " << step << ": " << s.iterations << " iterations, "
            << (s.converged ? "converged" : "DID NOT CONVERGE")
            << ", primal " << s.primal_residual << ", dual "
            << s.dual_residual << "\n";
  for (int i = 0; i < sc.n(); ++i)
    std::cout << "  " << sc.dwellings[i].label << " p_tr = " << std::showpos
              << std::fixed << std::setprecision(4) << s.p_tr[i]
              << std::noshowpos << std::defaultfloat << " kW\n";
  return s.converged ? 0 : kExitNoConvergence;
}

int cmd_simulate(const std::string& scenario_path,
                 const std::string& demand_path, bool no_p2p,
                 const std::string& out_dir, bool parallel, int threads) {
  const Scenario sc = load_scenario(scenario_path);
  const DemandSeries series =
      demand_path.empty() ? demand_for(sc, "") : load_demand_csv(demand_path);
  SimOptions opt;
  opt.parallel = parallel;
  opt.threads = threads;
  const DayReport rep = simulate_day(series, sc, !no_p2p, opt);
  write_report(rep, out_dir);
  std::cout << summarize_report(out_dir);
  return rep.all_converged ? 0 : kExitNoConvergence;
}

int cmd_scale_bench(const std::string& scenario_path,
                    const std::string& demand_path,
                    const std::string& factors_csv,
                    const std::string& out_dir) {
  const Scenario sc = load_scenario(scenario_path);
  const DemandSeries series = demand_for(sc, demand_path);
  const auto factors = parse_factors(factors_csv);
  const auto rows = scale_benchmark(sc, series, factors);
  fs::create_directories(out_dir);
  write_bench_csv(rows, (fs::path(out_dir) / "scale_bench.csv").string());
  std::cout << "factor  n   iterations  sec_total  sec_per_agent\n";
  bool ok = true;
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(8) << r.factor << std::setw(4)
              << r.n_agents << std::setw(12) << r.iterations << std::setw(11)
              << std::fixed << std::setprecision(3) << r.seconds_total
              << std::setprecision(6) << r.seconds_per_agent << "\n";
    ok = ok && r.all_converged;
  }
  std::cout << "wrote " << (fs::path(out_dir) / "scale_bench.csv").string()
            << "\n";
  return ok ? 0 : kExitNoConvergence;
}

int cmd_report(const std::string& in_dir) {
  std::cout << summarize_report(in_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"P2P electricity trading among fuel-cell CHP dwellings"};
  app.require_subcommand(1);

  std::string scenario_path, demand_path, out_dir = "out", in_dir;
  std::string factors_csv = "1,2,4,8";
  int step = 1;
  bool no_p2p = false, parallel = false;
  int threads = 0;

  auto* fit = app.add_subcommand("fit", "Write per-dwelling linearization fits");
  fit->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  fit->add_option("--out", out_dir, "Output directory");

  auto* stp = app.add_subcommand("step", "Solve a single timestep");
  stp->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  stp->add_option("--demand", demand_path, "Demand CSV (default: built-in day)");
  stp->add_option("--step", step, "1-based step index")->required();
  stp->add_option("--out", out_dir, "Output directory");
  stp->add_flag("--parallel", parallel, "Threaded agent updates");
  stp->add_option("--threads", threads, "Worker threads (0 = hardware)");

  auto* sim = app.add_subcommand("simulate", "Run a full day");
  sim->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  sim->add_option("--demand", demand_path, "Demand CSV (default: built-in day)");
  sim->add_flag("--no-p2p", no_p2p, "Disable trading (grid fallback)");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_flag("--parallel", parallel, "Threaded agent updates");
  sim->add_option("--threads", threads, "Worker threads (0 = hardware)");

  auto* bench = app.add_subcommand("scale-bench", "Duplicate dwellings and time the solver");
  bench->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  bench->add_option("--demand", demand_path, "Demand CSV (default: built-in day)");
  bench->add_option("--factors", factors_csv, "Comma-separated duplication factors");
  bench->add_option("--out", out_dir, "Output directory");

  auto* rpt = app.add_subcommand("report", "Summarize a written report directory");
  rpt->add_option("--in", in_dir, "Report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(scenario_path, out_dir);
    if (stp->parsed())
      return cmd_step(scenario_path, demand_path, step, out_dir, parallel,
                      threads);
    if (sim->parsed())
      return cmd_simulate(scenario_path, demand_path, no_p2p, out_dir,
                          parallel, threads);
    if (bench->parsed())
      return cmd_scale_bench(scenario_path, demand_path, factors_csv, out_dir);
    if (rpt->parsed()) return cmd_report(in_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

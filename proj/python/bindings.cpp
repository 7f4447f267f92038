#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "p2pchp/admm.hpp"
#include "p2pchp/fc_chp.hpp"
#include "p2pchp/harness.hpp"
#include "p2pchp/market.hpp"
#include "p2pchp/oracle.hpp"
#include "p2pchp/projection.hpp"

namespace py = pybind11;
using namespace p2pchp;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed P2P electricity trading for fuel-cell CHP dwellings";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);

  // --- fuel cell and linearization ---------------------------------------
  py::class_<FuelCellCurve>(m, "FuelCellCurve")
      .def(py::init<>())
      .def_readwrite("k_e", &FuelCellCurve::k_e)
      .def_readwrite("eta_e_0", &FuelCellCurve::eta_e_0)
      .def_readwrite("eta_e_max", &FuelCellCurve::eta_e_max)
      .def_readwrite("k_hr", &FuelCellCurve::k_hr)
      .def_readwrite("eta_hr_0", &FuelCellCurve::eta_hr_0)
      .def_readwrite("eta_hr_max", &FuelCellCurve::eta_hr_max)
      .def_readwrite("p_fc_max", &FuelCellCurve::p_fc_max)
      .def_readwrite("p_fc_hw_min", &FuelCellCurve::p_fc_hw_min)
      .def_readwrite("eta_g2h", &FuelCellCurve::eta_g2h)
      .def("validate", &FuelCellCurve::validate);

  py::class_<ThermalParams>(m, "ThermalParams")
      .def(py::init<>())
      .def_readwrite("dt_hours", &ThermalParams::dt_hours)
      .def_readwrite("xi_e", &ThermalParams::xi_e)
      .def_readwrite("q_w", &ThermalParams::q_w)
      .def_readwrite("t_hot", &ThermalParams::t_hot)
      .def_readwrite("t_cold", &ThermalParams::t_cold)
      .def_readwrite("p_gas", &ThermalParams::p_gas)
      .def("zeta", &ThermalParams::zeta)
      .def("validate", &ThermalParams::validate);

  py::class_<LinearFit>(m, "LinearFit")
      .def(py::init<>())
      .def_readwrite("alpha", &LinearFit::alpha)
      .def_readwrite("beta", &LinearFit::beta)
      .def_readwrite("fit_lo", &LinearFit::fit_lo)
      .def_readwrite("fit_hi", &LinearFit::fit_hi)
      .def_readwrite("max_abs_residual", &LinearFit::max_abs_residual);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("lo_frac", &FitConfig::lo_frac)
      .def_readwrite("hi_frac", &FitConfig::hi_frac)
      .def_readwrite("samples", &FitConfig::samples);

  m.def("eta_electric", &eta_electric, py::arg("curve"), py::arg("p"));
  m.def("eta_heat", &eta_heat, py::arg("curve"), py::arg("p"));
  m.def("gas_energy_exact", &gas_energy_exact);
  m.def("gas_energy_linear", &gas_energy_linear);
  m.def("gas_cost_exact", &gas_cost_exact);
  m.def("gas_cost_linear", &gas_cost_linear);
  m.def("hot_water_exact", &hot_water_exact);
  m.def("hot_water_linear", &hot_water_linear);
  m.def("fit_linearization", &fit_linearization, py::arg("samples"));
  m.def("fit_gas_line", &fit_gas_line, py::arg("curve"),
        py::arg("config") = FitConfig{});
  m.def("fit_water_line", &fit_water_line, py::arg("curve"),
        py::arg("config") = FitConfig{});

  // --- market assembly -----------------------------------------------------
  py::enum_<Role>(m, "Role")
      .value("Buyer", Role::Buyer)
      .value("Seller", Role::Seller)
      .value("Inactive", Role::Inactive);

  py::class_<DwellingSpec>(m, "DwellingSpec")
      .def(py::init<>())
      .def_readwrite("label", &DwellingSpec::label)
      .def_readwrite("a", &DwellingSpec::a)
      .def_readwrite("b_tilde", &DwellingSpec::b_tilde)
      .def_readwrite("c", &DwellingSpec::c)
      .def_readwrite("curve", &DwellingSpec::curve);

  py::class_<TradingGraph>(m, "TradingGraph")
      .def(py::init<>())
      .def_readwrite("n", &TradingGraph::n)
      .def_readwrite("nbr", &TradingGraph::nbr)
      .def_readwrite("edge_list", &TradingGraph::edge_list)
      .def("degree", &TradingGraph::degree)
      .def("directed_size", &TradingGraph::directed_size)
      .def("has_edge", &TradingGraph::has_edge)
      .def_static("complete_bipartite", &TradingGraph::complete_bipartite)
      .def_static("from_adjacency", &TradingGraph::from_adjacency);

  py::class_<DwellingStep>(m, "DwellingStep")
      .def(py::init<>())
      .def_readwrite("role", &DwellingStep::role)
      .def_readwrite("demand", &DwellingStep::demand)
      .def_readwrite("a", &DwellingStep::a)
      .def_readwrite("b_hat", &DwellingStep::b_hat)
      .def_readwrite("b_eff", &DwellingStep::b_eff)
      .def_readwrite("p_tr_lo", &DwellingStep::p_tr_lo)
      .def_readwrite("p_tr_hi", &DwellingStep::p_tr_hi)
      .def_readwrite("p_fc_min", &DwellingStep::p_fc_min)
      .def_readwrite("g_slope", &DwellingStep::g_slope);

  py::class_<MarketStep>(m, "MarketStep")
      .def(py::init<>())
      .def_readwrite("dwellings", &MarketStep::dwellings)
      .def_readwrite("graph", &MarketStep::graph)
      .def_readwrite("edge_surcharge", &MarketStep::edge_surcharge)
      .def("n", &MarketStep::n);

  m.def("assign_role", &assign_role, py::arg("demand"), py::arg("p_fc_max"));
  m.def("trade_bounds", &trade_bounds);
  m.def("fc_min_bound", &fc_min_bound);
  m.def("gas_cost_slope", &gas_cost_slope);
  m.def("effective_coeff", &effective_coeff);
  m.def(
      "build_trading_graph",
      [](const std::vector<Role>& roles,
         const std::optional<std::vector<std::vector<int>>>& adj) {
        return build_trading_graph(roles, adj ? &*adj : nullptr);
      },
      py::arg("roles"), py::arg("adj") = py::none());
  m.def(
      "build_market_step",
      [](const std::vector<double>& demands,
         const std::vector<DwellingSpec>& specs, double gamma,
         const ThermalParams& th, const std::vector<LinearFit>& gas_fits) {
        return build_market_step(demands, specs, gamma, th, gas_fits);
      },
      py::arg("demands"), py::arg("specs"), py::arg("gamma"), py::arg("thermal"),
      py::arg("gas_fits"));
  m.def("grid_residual", &grid_residual);
  m.def("step_cost", &step_cost);

  // --- distributed solver ----------------------------------------------------
  py::class_<AdmmParams>(m, "AdmmParams")
      .def(py::init<>())
      .def_readwrite("rho", &AdmmParams::rho)
      .def_readwrite("kappa", &AdmmParams::kappa)
      .def_readwrite("mu1", &AdmmParams::mu1)
      .def_readwrite("mu2", &AdmmParams::mu2)
      .def_readwrite("phi", &AdmmParams::phi)
      .def_readwrite("psi", &AdmmParams::psi)
      .def_readwrite("eps_primal", &AdmmParams::eps_primal)
      .def_readwrite("eps_dual", &AdmmParams::eps_dual)
      .def_readwrite("max_iter", &AdmmParams::max_iter)
      .def_readwrite("jacobi_tol", &AdmmParams::jacobi_tol)
      .def_readwrite("jacobi_max_sweeps", &AdmmParams::jacobi_max_sweeps)
      .def_readwrite("dual_sign", &AdmmParams::dual_sign)
      .def_readwrite("componentwise_sign", &AdmmParams::componentwise_sign);

  m.def("validate_params", &validate_params);

  py::class_<IterationReport>(m, "IterationReport")
      .def_readonly("iter", &IterationReport::iter)
      .def_readonly("primal_residual", &IterationReport::primal_residual)
      .def_readonly("dual_residual", &IterationReport::dual_residual)
      .def_readonly("price_mismatch", &IterationReport::price_mismatch)
      .def_readonly("jacobi_sweeps", &IterationReport::jacobi_sweeps);

  py::class_<EdgeRecord>(m, "EdgeRecord")
      .def_readonly("i", &EdgeRecord::i)
      .def_readonly("j", &EdgeRecord::j)
      .def_readonly("p_ij", &EdgeRecord::p_ij)
      .def_readonly("lambda_", &EdgeRecord::lambda);

  py::class_<StepSolution>(m, "StepSolution")
      .def_readonly("p_tr", &StepSolution::p_tr)
      .def_readonly("edges", &StepSolution::edges)
      .def_readonly("iterations", &StepSolution::iterations)
      .def_readonly("converged", &StepSolution::converged)
      .def_readonly("primal_residual", &StepSolution::primal_residual)
      .def_readonly("dual_residual", &StepSolution::dual_residual)
      .def_readonly("price_mismatch", &StepSolution::price_mismatch)
      .def_readonly("jacobi_ok", &StepSolution::jacobi_ok)
      .def_readonly("jacobi_worst_residual", &StepSolution::jacobi_worst_residual)
      .def_readonly("trace", &StepSolution::trace)
      .def_readonly("p_fc", &StepSolution::p_fc)
      .def_readonly("p_grid", &StepSolution::p_grid)
      .def_readonly("cost_jpy", &StepSolution::cost_jpy);

  m.def(
      "run_step",
      [](const MarketStep& step, const AdmmParams& prm, bool parallel,
         int threads, bool record_trace) {
        RunOptions opt;
        opt.parallel = parallel;
        opt.threads = threads;
        opt.record_trace = record_trace;
        return run_step(step, prm, opt);
      },
      py::arg("step"), py::arg("params") = AdmmParams{},
      py::arg("parallel") = false, py::arg("threads") = 0,
      py::arg("record_trace") = false,
      py::call_guard<py::gil_scoped_release>());

  // --- centralized reference -------------------------------------------------
  py::class_<OracleSolution>(m, "OracleSolution")
      .def_readonly("y", &OracleSolution::y)
      .def_readonly("totals", &OracleSolution::totals)
      .def_readonly("lambda_", &OracleSolution::lambda)
      .def_readonly("component", &OracleSolution::component)
      .def_readonly("objective", &OracleSolution::objective)
      .def_readonly("kkt_residual", &OracleSolution::kkt_residual)
      .def_readonly("pgd_iters", &OracleSolution::pgd_iters);

  m.def(
      "solve_centralized",
      [](const MarketStep& step) {
        return solve_centralized(make_edge_qp(step));
      },
      py::arg("step"), py::call_guard<py::gil_scoped_release>());

  // --- scenarios, demand, day simulation --------------------------------------
  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("thermal", &Scenario::thermal)
      .def_readwrite("gamma", &Scenario::gamma)
      .def_readwrite("grid_tariff_jpy_per_kwh", &Scenario::grid_tariff_jpy_per_kwh)
      .def_readwrite("fit", &Scenario::fit)
      .def_readwrite("admm", &Scenario::admm)
      .def_readwrite("dwellings", &Scenario::dwellings)
      .def_readwrite("step_adjacency", &Scenario::step_adjacency)
      .def_readwrite("gas_fits", &Scenario::gas_fits)
      .def_readwrite("water_fits", &Scenario::water_fits)
      .def("n", &Scenario::n)
      .def("derive_fits", &Scenario::derive_fits)
      .def("validate", &Scenario::validate);

  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("scenario_to_json", &scenario_to_json);
  m.def("save_scenario", &save_scenario);
  m.def("canonical_scenario", &canonical_scenario);

  py::class_<DemandSeries>(m, "DemandSeries")
      .def(py::init<>())
      .def_readwrite("labels", &DemandSeries::labels)
      .def_readwrite("demand", &DemandSeries::demand)
      .def("steps", &DemandSeries::steps)
      .def("houses", &DemandSeries::houses);

  m.def("load_demand_csv", &load_demand_csv, py::arg("path"));
  m.def("save_demand_csv", &save_demand_csv);
  m.def("generate_synthetic_demand", &generate_synthetic_demand, py::arg("n"),
        py::arg("seed"), py::arg("peak_prob"));
  m.def("canonical_six_house_day", &canonical_six_house_day);

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("step", &StepRecord::step)
      .def_readonly("roles", &StepRecord::roles)
      .def_readonly("demand", &StepRecord::demand)
      .def_readonly("market_active", &StepRecord::market_active)
      .def_readonly("sol", &StepRecord::sol)
      .def_readonly("wall_seconds", &StepRecord::wall_seconds);

  py::class_<DwellingDayTotals>(m, "DwellingDayTotals")
      .def_readonly("fc_kwh", &DwellingDayTotals::fc_kwh)
      .def_readonly("bought_kwh", &DwellingDayTotals::bought_kwh)
      .def_readonly("sold_kwh", &DwellingDayTotals::sold_kwh)
      .def_readonly("grid_kwh", &DwellingDayTotals::grid_kwh)
      .def_readonly("gas_cost_jpy", &DwellingDayTotals::gas_cost_jpy)
      .def_readonly("trade_cost_jpy", &DwellingDayTotals::trade_cost_jpy)
      .def_readonly("grid_cost_jpy", &DwellingDayTotals::grid_cost_jpy)
      .def_readonly("total_cost_jpy", &DwellingDayTotals::total_cost_jpy);

  py::class_<DayReport>(m, "DayReport")
      .def_readonly("scenario_name", &DayReport::scenario_name)
      .def_readonly("p2p", &DayReport::p2p)
      .def_readonly("dt_hours", &DayReport::dt_hours)
      .def_readonly("steps", &DayReport::steps)
      .def_readonly("totals", &DayReport::totals)
      .def_readonly("labels", &DayReport::labels)
      .def_readonly("trading_steps", &DayReport::trading_steps)
      .def_readonly("total_iterations", &DayReport::total_iterations)
      .def_readonly("all_converged", &DayReport::all_converged)
      .def_readonly("admm_wall_seconds", &DayReport::admm_wall_seconds);

  m.def(
      "simulate_day",
      [](const DemandSeries& series, const Scenario& sc, bool p2p,
         bool parallel, int threads) {
        SimOptions opt;
        opt.parallel = parallel;
        opt.threads = threads;
        return simulate_day(series, sc, p2p, opt);
      },
      py::arg("series"), py::arg("scenario"), py::arg("p2p") = true,
      py::arg("parallel") = false, py::arg("threads") = 0,
      py::call_guard<py::gil_scoped_release>());

  py::class_<BenchRow>(m, "BenchRow")
      .def_readonly("factor", &BenchRow::factor)
      .def_readonly("n_agents", &BenchRow::n_agents)
      .def_readonly("iterations", &BenchRow::iterations)
      .def_readonly("seconds_total", &BenchRow::seconds_total)
      .def_readonly("seconds_per_agent", &BenchRow::seconds_per_agent)
      .def_readonly("trading_steps", &BenchRow::trading_steps)
      .def_readonly("all_converged", &BenchRow::all_converged);

  m.def("scale_benchmark", &scale_benchmark, py::arg("scenario"),
        py::arg("series"), py::arg("factors"),
        py::call_guard<py::gil_scoped_release>());
  m.def("scale_scenario", &scale_scenario);
  m.def("scale_series", &scale_series);

  m.def("write_report", &write_report, py::arg("report"), py::arg("dir"));
  m.def("summarize_report", &summarize_report, py::arg("dir"));
}

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "p2pchp/admm.hpp"
#include "p2pchp/fc_chp.hpp"
#include "p2pchp/market.hpp"

namespace p2pchp {

// Full experiment configuration, loadable from JSON (see README for the
// file format). Derived linearization fits are computed on load.
struct Scenario {
  std::string name = "scenario";
  ThermalParams thermal;
  double gamma = 0.0;  // grid-interaction offset added to every b_tilde
  double grid_tariff_jpy_per_kwh = 20.0;  // reporting only
  FitConfig fit;
  AdmmParams admm;
  std::vector<DwellingSpec> dwellings;
  // Optional explicit adjacency per 1-based step index.
  std::map<int, std::vector<std::vector<int>>> step_adjacency;

  // Derived per dwelling on load / derive_fits().
  std::vector<LinearFit> gas_fits;
  std::vector<LinearFit> water_fits;

  int n() const { return static_cast<int>(dwellings.size()); }
  void derive_fits();
  void validate() const;  // throws ValidationError
};

Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& sc);
void save_scenario(const Scenario& sc, const std::string& path);

// The committed 6-house example configuration.
Scenario canonical_scenario();

// Half-hourly demand for one day: demand[step][house] in kW.
struct DemandSeries {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> demand;

  int steps() const { return static_cast<int>(demand.size()); }
  int houses() const { return demand.empty() ? 0 : static_cast<int>(demand[0].size()); }
};

inline constexpr int kStepsPerDay = 48;

DemandSeries load_demand_csv(const std::string& path);
void save_demand_csv(const DemandSeries& s, const std::string& path);

// Reproducible synthetic day: per-house base load with morning/evening
// peaks; peak_prob controls how often a peak exceeds rated FC power.
DemandSeries generate_synthetic_demand(int n, std::uint64_t seed,
                                       double peak_prob);

// The committed 6-house day whose per-step buyer/seller pattern follows the
// reference role table, with an exactly pinned step 8 and a scarcity step 12.
DemandSeries canonical_six_house_day();

struct StepRecord {
  int step = 0;  // 1-based
  std::vector<Role> roles;
  std::vector<double> demand;
  bool market_active = false;
  StepSolution sol;  // empty edges when market skipped
  double wall_seconds = 0.0;
};

struct DwellingDayTotals {
  double fc_kwh = 0.0;
  double bought_kwh = 0.0;
  double sold_kwh = 0.0;
  double grid_kwh = 0.0;
  double gas_cost_jpy = 0.0;
  double trade_cost_jpy = 0.0;
  double grid_cost_jpy = 0.0;  // at the scenario grid tariff, reporting only
  double total_cost_jpy = 0.0;
};

struct DayReport {
  std::string scenario_name;
  bool p2p = true;
  double dt_hours = 0.5;  // copied from the scenario; converts kW to kWh
  std::vector<StepRecord> steps;
  std::vector<DwellingDayTotals> totals;
  std::vector<std::string> labels;
  int trading_steps = 0;
  long long total_iterations = 0;
  bool all_converged = true;
  double admm_wall_seconds = 0.0;
};

struct SimOptions {
  bool parallel = false;
  int threads = 0;
  bool record_trace = true;
};

// Run one day. p2p=false forces all trades to zero (FC still covers demand
// up to rated power; the grid takes the rest).
DayReport simulate_day(const DemandSeries& series, const Scenario& sc,
                       bool p2p, const SimOptions& opt = {});

struct BenchRow {
  int factor = 1;
  int n_agents = 0;
  long long iterations = 0;
  double seconds_total = 0.0;      // ADMM wall clock, whole day
  double seconds_per_agent = 0.0;  // seconds_total / n_agents
  int trading_steps = 0;
  bool all_converged = true;
};

// Duplicate dwellings (and demand columns) by each factor and time the runs.
std::vector<BenchRow> scale_benchmark(const Scenario& sc,
                                      const DemandSeries& series,
                                      const std::vector<int>& factors);

Scenario scale_scenario(const Scenario& sc, int factor);
DemandSeries scale_series(const DemandSeries& s, int factor);

// Emit trades.csv, prices.csv, supplies.csv, convergence.csv, summary.json.
void write_report(const DayReport& report, const std::string& dir);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::string& path);

// Reload of the trades.csv edge rows: step, i, j, p_ij, lambda.
struct TradeRow {
  int step = 0, i = 0, j = 0;
  double p_ij = 0.0;
  double lambda_kwh = 0.0;
};
std::vector<TradeRow> load_trades_csv(const std::string& path);

// Human-readable digest of a written report directory.
std::string summarize_report(const std::string& dir);

}  // namespace p2pchp

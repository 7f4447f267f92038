#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "p2pchp/fc_chp.hpp"

namespace p2pchp {

enum class Role { Buyer, Seller, Inactive };

const char* role_name(Role r);

// Static configuration of one dwelling: trading preferences and its FC unit.
struct DwellingSpec {
  std::string label;
  double a = 1.0;        // JPY/kW^2 quadratic preference weight, > 0
  double b_tilde = 0.0;  // JPY/kW base linear preference
  double c = 0.0;        // JPY constant, reporting only
  FuelCellCurve curve;
};

// Buyer-seller connectivity for one timestep.
struct TradingGraph {
  int n = 0;
  std::vector<std::vector<int>> nbr;          // sorted adjacency lists
  std::vector<std::pair<int, int>> edge_list; // undirected, i < j

  int degree(int i) const { return static_cast<int>(nbr[i].size()); }
  int directed_size() const;  // sum of degrees (one trade variable per direction)
  bool has_edge(int i, int j) const;

  // Every buyer connected to every seller.
  static TradingGraph complete_bipartite(const std::vector<Role>& roles);
  // Custom 0/1 adjacency; must be symmetric, hollow, and bipartite
  // between buyers and sellers (throws ValidationError otherwise).
  static TradingGraph from_adjacency(const std::vector<std::vector<int>>& adj,
                                     const std::vector<Role>& roles);
};

// Per-dwelling market data for one timestep.
struct DwellingStep {
  Role role = Role::Inactive;
  double demand = 0.0;    // kW
  double a = 1.0;         // quadratic coefficient
  double b_hat = 0.0;     // linear preference incl. grid offset gamma
  double b_eff = 0.0;     // effective linear coefficient in the trading QP
  double p_tr_lo = 0.0;   // trade total bounds, kW
  double p_tr_hi = 0.0;
  double p_fc_min = 0.0;  // lower bound on FC setpoint, kW
  double g_slope = 0.0;   // marginal gas cost of FC output, JPY/kW per step
};

// One timestep's trading problem: agents, graph, optional edge surcharges.
struct MarketStep {
  std::vector<DwellingStep> dwellings;
  TradingGraph graph;
  std::vector<double> edge_surcharge;  // aligned with graph.edge_list, default 0

  int n() const { return static_cast<int>(dwellings.size()); }
};

// Buyer iff demand exceeds rated FC power, Seller iff below, Inactive at equality.
Role assign_role(double demand, double p_fc_max);

// Interval for the dwelling's total traded power:
// buyers [0, deficit], sellers [-capacity, 0], inactive [0, 0].
std::pair<double, double> trade_bounds(double demand, double p_fc_max);

// Lower bound on the FC setpoint: demand capped at rated power,
// but never below the hardware floor.
double fc_min_bound(double demand, const FuelCellCurve& curve);

// Marginal gas cost per kW of FC electrical output over one step (JPY/kW).
double gas_cost_slope(const LinearFit& gas_fit, const ThermalParams& th,
                      double eta_g2h);

// Linear coefficient seen by the trading QP. Buyers keep b_hat; sellers are
// credited the gas they avoid burning: b_eff = b_hat - gas_cost_slope.
double effective_coeff(Role role, double b_hat, const LinearFit& gas_fit,
                       const ThermalParams& th, double eta_g2h);

// Default graph; pass adj to override connectivity.
TradingGraph build_trading_graph(
    const std::vector<Role>& roles,
    const std::vector<std::vector<int>>* adj = nullptr);

// Assemble the per-step QP from demands and dwelling configuration.
// b_hat_i = b_tilde_i + gamma; gas_fits are per dwelling.
MarketStep build_market_step(const std::vector<double>& demands,
                             const std::vector<DwellingSpec>& specs,
                             double gamma, const ThermalParams& th,
                             const std::vector<LinearFit>& gas_fits,
                             const std::vector<std::vector<int>>* adj = nullptr);

// Power drawn from the bulk grid after FC output and trades.
double grid_residual(double demand, double p_fc, double p_tr);

// Per-agent step cost: a*P_tr^2 + b_hat*P_tr + linearized gas cost + c.
std::vector<double> step_cost(const MarketStep& step,
                              const std::vector<double>& p_tr,
                              const std::vector<double>& p_fc,
                              const std::vector<DwellingSpec>& specs,
                              const std::vector<LinearFit>& gas_fits,
                              const ThermalParams& th);

}  // namespace p2pchp

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "p2pchp/market.hpp"

namespace p2pchp {

// Centralized reformulation of the trading QP with one variable per
// undirected edge: y_e > 0 means power flows from the higher-indexed
// endpoint to the lower (the lower endpoint receives y_e). Agent totals are
// T_i = sum_e sign(i, e) * y_e, so reciprocity holds by construction.
struct EdgeQp {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // i < j
  std::vector<double> a;                   // per agent, > 0
  std::vector<double> b;                   // effective linear coefficients
  std::vector<double> lo, hi;              // per-agent total bounds

  int m() const { return static_cast<int>(edges.size()); }
};

EdgeQp make_edge_qp(const MarketStep& step);

struct OracleSolution {
  std::vector<double> y;          // per edge
  std::vector<double> totals;     // per agent
  std::vector<double> lambda;     // per agent: its component's multiplier
  std::vector<int> component;     // per agent: connected component id
  double objective = 0.0;
  double kkt_residual = 0.0;
  int pgd_iters = 0;
};

// sum_i a_i*T_i^2 + b_i*T_i for the totals induced by y.
double edge_objective(const EdgeQp& qp, const std::vector<double>& y);

// Exact reference solver: projected gradient from zero (minimum-norm path)
// followed by a dual bisection per connected component that pins the optimal
// totals, realized on a spanning forest. kkt_residual certifies the result.
OracleSolution solve_centralized(const EdgeQp& qp, double tol = 1e-9);

// Exhaustive grid search over edge variables; requires m <= 3.
std::vector<double> brute_force(const EdgeQp& qp, double grid_step);

// KKT report for failure diagnostics.
std::string to_json(const OracleSolution& s);

}  // namespace p2pchp

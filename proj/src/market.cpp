#include "p2pchp/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace p2pchp {

const char* role_name(Role r) {
  switch (r) {
    case Role::Buyer: return "buyer";
    case Role::Seller: return "seller";
    case Role::Inactive: return "inactive";
  }
  return "?";
}

int TradingGraph::directed_size() const {
  int m = 0;
  for (const auto& v : nbr) m += static_cast<int>(v.size());
  return m;
}

bool TradingGraph::has_edge(int i, int j) const {
  if (i < 0 || i >= n) return false;
  return std::binary_search(nbr[i].begin(), nbr[i].end(), j);
}

namespace {

void finalize_edges(TradingGraph& g) {
  g.edge_list.clear();
  for (int i = 0; i < g.n; ++i) {
    std::sort(g.nbr[i].begin(), g.nbr[i].end());
    for (int j : g.nbr[i])
      if (i < j) g.edge_list.emplace_back(i, j);
  }
}

}  // namespace

TradingGraph TradingGraph::complete_bipartite(const std::vector<Role>& roles) {
  TradingGraph g;
  g.n = static_cast<int>(roles.size());
  g.nbr.resize(g.n);
  for (int i = 0; i < g.n; ++i) {
    if (roles[i] == Role::Inactive) continue;
    for (int j = i + 1; j < g.n; ++j) {
      if (roles[j] == Role::Inactive) continue;
      if (roles[i] != roles[j]) {
        g.nbr[i].push_back(j);
        g.nbr[j].push_back(i);
      }
    }
  }
  finalize_edges(g);
  return g;
}

TradingGraph TradingGraph::from_adjacency(
    const std::vector<std::vector<int>>& adj, const std::vector<Role>& roles) {
  const int n = static_cast<int>(roles.size());
  if (static_cast<int>(adj.size()) != n)
    throw ValidationError("adjacency: row count != number of dwellings");
  for (int i = 0; i < n; ++i)
    if (static_cast<int>(adj[i].size()) != n)
      throw ValidationError("adjacency: matrix is not square");
  TradingGraph g;
  g.n = n;
  g.nbr.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int e = adj[i][j];
      if (e != 0 && e != 1)
        throw ValidationError("adjacency: entries must be 0 or 1");
      if (i == j && e != 0)
        throw ValidationError("adjacency: diagonal must be zero");
      if (e != adj[j][i])
        throw ValidationError("adjacency: matrix must be symmetric");
      if (e == 1 && i < j) {
        const bool buyer_seller =
            (roles[i] == Role::Buyer && roles[j] == Role::Seller) ||
            (roles[i] == Role::Seller && roles[j] == Role::Buyer);
        if (!buyer_seller) {
          std::ostringstream msg;
          msg << "adjacency: edge (" << i << "," << j << ") joins "
              << role_name(roles[i]) << " and " << role_name(roles[j])
              << "; edges must join a buyer and a seller";
          throw ValidationError(msg.str());
        }
        g.nbr[i].push_back(j);
        g.nbr[j].push_back(i);
      }
    }
  }
  finalize_edges(g);
  return g;
}

Role assign_role(double demand, double p_fc_max) {
  if (demand > p_fc_max) return Role::Buyer;
  if (demand < p_fc_max) return Role::Seller;
  return Role::Inactive;
}

std::pair<double, double> trade_bounds(double demand, double p_fc_max) {
  const double diff = demand - p_fc_max;
  return {std::min(0.0, diff), std::max(0.0, diff)};
}

double fc_min_bound(double demand, const FuelCellCurve& curve) {
  const double want = std::min(demand, curve.p_fc_max);
  return std::clamp(want, curve.p_fc_hw_min, curve.p_fc_max);
}

double gas_cost_slope(const LinearFit& gas_fit, const ThermalParams& th,
                      double eta_g2h) {
  return th.p_gas * gas_fit.alpha * th.dt_hours * th.xi_e / eta_g2h;
}

double effective_coeff(Role role, double b_hat, const LinearFit& gas_fit,
                       const ThermalParams& th, double eta_g2h) {
  if (role == Role::Seller)
    return b_hat - gas_cost_slope(gas_fit, th, eta_g2h);
  return b_hat;
}

TradingGraph build_trading_graph(const std::vector<Role>& roles,
                                 const std::vector<std::vector<int>>* adj) {
  if (adj) return TradingGraph::from_adjacency(*adj, roles);
  return TradingGraph::complete_bipartite(roles);
}

MarketStep build_market_step(const std::vector<double>& demands,
                             const std::vector<DwellingSpec>& specs,
                             double gamma, const ThermalParams& th,
                             const std::vector<LinearFit>& gas_fits,
                             const std::vector<std::vector<int>>* adj) {
  const int n = static_cast<int>(specs.size());
  if (static_cast<int>(demands.size()) != n)
    throw ValidationError("market step: demand count != dwelling count");
  if (static_cast<int>(gas_fits.size()) != n)
    throw ValidationError("market step: gas fit count != dwelling count");
  MarketStep step;
  step.dwellings.resize(n);
  std::vector<Role> roles(n);
  for (int i = 0; i < n; ++i) {
    const DwellingSpec& s = specs[i];
    if (!(s.a > 0.0)) throw ValidationError("market step: require a > 0");
    if (!(demands[i] >= 0.0) || !std::isfinite(demands[i]))
      throw ValidationError("market step: demand must be finite and >= 0");
    DwellingStep& d = step.dwellings[i];
    d.demand = demands[i];
    d.role = assign_role(d.demand, s.curve.p_fc_max);
    roles[i] = d.role;
    d.a = s.a;
    d.b_hat = s.b_tilde + gamma;
    d.b_eff = effective_coeff(d.role, d.b_hat, gas_fits[i], th, s.curve.eta_g2h);
    std::tie(d.p_tr_lo, d.p_tr_hi) = trade_bounds(d.demand, s.curve.p_fc_max);
    d.p_fc_min = fc_min_bound(d.demand, s.curve);
    d.g_slope = gas_cost_slope(gas_fits[i], th, s.curve.eta_g2h);
  }
  step.graph = build_trading_graph(roles, adj);
  step.edge_surcharge.assign(step.graph.edge_list.size(), 0.0);
  return step;
}

double grid_residual(double demand, double p_fc, double p_tr) {
  return demand - p_fc - p_tr;
}

std::vector<double> step_cost(const MarketStep& step,
                              const std::vector<double>& p_tr,
                              const std::vector<double>& p_fc,
                              const std::vector<DwellingSpec>& specs,
                              const std::vector<LinearFit>& gas_fits,
                              const ThermalParams& th) {
  const int n = step.n();
  std::vector<double> cost(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const DwellingStep& d = step.dwellings[i];
    const double trade = d.a * p_tr[i] * p_tr[i] + d.b_hat * p_tr[i];
    // Affine gas model applies as-is, so p_fc = 0 still carries the beta
    // intercept of the fit.
    const double gas = gas_cost_linear(gas_fits[i], specs[i].curve, th, p_fc[i]);
    cost[i] = trade + gas + specs[i].c;
  }
  return cost;
}

}  // namespace p2pchp

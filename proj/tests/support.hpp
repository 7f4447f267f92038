#pragma once

// Shared helpers for the test binaries: a tiny deterministic RNG, a dense
// Gaussian-elimination solver used as an independent oracle for the Jacobi
// totals solver, and builders for random market instances.

#include "p2pchp/admm.hpp"
#include "p2pchp/market.hpp"
#include "p2pchp/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace testsup {

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double next01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next01(); }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

// Dense solve by Gaussian elimination with partial pivoting.  Row-major A.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A,
                                       std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-14)
      throw std::runtime_error("dense_solve: singular matrix");
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= A[r][c] * x[c];
    x[r] = acc / A[r][r];
  }
  return x;
}

// Random market instance with at least one buyer and one seller on the
// complete bipartite graph.  Coefficients are drawn directly (a in
// [0.1, 10], b_eff in [-30, 30]); bounds come from demands around the
// 0.7 kW rating, so the instance looks like a real step without relying on
// the scenario plumbing under test elsewhere.
inline p2pchp::MarketStep random_market(Rng& rng, int n) {
  using namespace p2pchp;
  MarketStep step;
  const double pmax = 0.7;
  for (;;) {
    step.dwellings.clear();
    int buyers = 0, sellers = 0;
    for (int i = 0; i < n; ++i) {
      DwellingStep d;
      d.demand = rng.uniform(0.2, 1.2);
      if (d.demand > 0.69 && d.demand < 0.71) d.demand = 0.65;  // avoid knife-edge
      d.role = assign_role(d.demand, pmax);
      auto [lo, hi] = trade_bounds(d.demand, pmax);
      d.p_tr_lo = lo;
      d.p_tr_hi = hi;
      d.a = rng.uniform(0.1, 10.0);
      d.b_hat = rng.uniform(-30.0, 30.0);
      d.b_eff = d.b_hat;  // gas credit folded in already
      d.p_fc_min = fc_min_bound(d.demand, FuelCellCurve{});
      d.g_slope = 0.0;
      if (d.role == Role::Buyer) ++buyers;
      if (d.role == Role::Seller) ++sellers;
      step.dwellings.push_back(d);
    }
    if (buyers > 0 && sellers > 0) break;
  }
  std::vector<Role> roles;
  for (const auto& d : step.dwellings) roles.push_back(d.role);
  step.graph = build_trading_graph(roles, nullptr);
  step.edge_surcharge.assign(step.graph.edge_list.size(), 0.0);
  return step;
}

// Random connected undirected graph on n nodes: random spanning tree plus
// extra edges.
inline p2pchp::TradingGraph random_connected_graph(Rng& rng, int n,
                                                   double extra_edge_prob) {
  p2pchp::TradingGraph g;
  g.n = n;
  g.nbr.assign(n, {});
  std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
  for (int v = 1; v < n; ++v) {
    int u = rng.uniform_int(0, v - 1);
    adj[u][v] = adj[v][u] = 1;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!adj[i][j] && rng.next01() < extra_edge_prob) adj[i][j] = adj[j][i] = 1;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adj[i][j]) {
        g.nbr[i].push_back(j);
        g.nbr[j].push_back(i);
        g.edge_list.push_back({i, j});
      }
  return g;
}

inline double max_abs_diff(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

}  // namespace testsup

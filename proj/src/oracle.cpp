#include "p2pchp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "p2pchp/projection.hpp"

namespace p2pchp {

EdgeQp make_edge_qp(const MarketStep& step) {
  EdgeQp qp;
  qp.n = step.n();
  qp.edges = step.graph.edge_list;
  qp.a.resize(qp.n);
  qp.b.resize(qp.n);
  qp.lo.resize(qp.n);
  qp.hi.resize(qp.n);
  for (int i = 0; i < qp.n; ++i) {
    const DwellingStep& d = step.dwellings[i];
    qp.a[i] = d.a;
    qp.b[i] = d.b_eff;
    qp.lo[i] = d.p_tr_lo;
    qp.hi[i] = d.p_tr_hi;
  }
  return qp;
}

namespace {

std::vector<double> totals_of(const EdgeQp& qp, const std::vector<double>& y) {
  std::vector<double> T(qp.n, 0.0);
  for (int e = 0; e < qp.m(); ++e) {
    T[qp.edges[e].first] += y[e];
    T[qp.edges[e].second] -= y[e];
  }
  return T;
}

void check_qp(const EdgeQp& qp) {
  if (static_cast<int>(qp.a.size()) != qp.n ||
      static_cast<int>(qp.b.size()) != qp.n ||
      static_cast<int>(qp.lo.size()) != qp.n ||
      static_cast<int>(qp.hi.size()) != qp.n)
    throw ValidationError("edge qp: size mismatch");
  for (int i = 0; i < qp.n; ++i) {
    if (!(qp.a[i] > 0.0)) throw ValidationError("edge qp: require a > 0");
    if (!(qp.lo[i] <= 0.0 && 0.0 <= qp.hi[i]))
      throw ValidationError("edge qp: bounds must contain 0");
  }
  for (const auto& [i, j] : qp.edges)
    if (i < 0 || j < 0 || i >= qp.n || j >= qp.n || i >= j)
      throw ValidationError("edge qp: bad edge endpoints");
}

// Connected components over the edge set; isolated agents form singletons.
std::vector<int> components_of(const EdgeQp& qp) {
  std::vector<int> comp(qp.n, -1);
  std::vector<std::vector<int>> adj(qp.n);
  for (const auto& [i, j] : qp.edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  int c = 0;
  std::vector<int> stack;
  for (int s = 0; s < qp.n; ++s) {
    if (comp[s] != -1) continue;
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (comp[w] == -1) {
          comp[w] = c;
          stack.push_back(w);
        }
    }
    ++c;
  }
  return comp;
}

// Per-agent projection of edge variables onto lo <= T_i(y) <= hi, one agent
// at a time (POCS); each pass reuses the shared sum-box projection with the
// agent's incident edges as free variables (sign of incidence folded in).
void project_feasible(const EdgeQp& qp, std::vector<double>& y, int passes) {
  std::vector<std::vector<std::pair<int, int>>> incid(qp.n);  // (edge, sign)
  for (int e = 0; e < qp.m(); ++e) {
    incid[qp.edges[e].first].push_back({e, +1});
    incid[qp.edges[e].second].push_back({e, -1});
  }
  for (int pass = 0; pass < passes; ++pass) {
    double worst = 0.0;
    for (int i = 0; i < qp.n; ++i) {
      if (incid[i].empty()) continue;
      double T = 0.0;
      for (auto [e, s] : incid[i]) T += s * y[e];
      worst = std::max(worst, std::max(qp.lo[i] - T, T - qp.hi[i]));
      if (T >= qp.lo[i] - 1e-15 && T <= qp.hi[i] + 1e-15) continue;
      std::vector<double> z(incid[i].size());
      for (std::size_t k = 0; k < incid[i].size(); ++k)
        z[k] = incid[i][k].second * y[incid[i][k].first];
      auto x = project_sum_box(z, qp.lo[i], qp.hi[i], SignConstraint::Free);
      for (std::size_t k = 0; k < incid[i].size(); ++k)
        y[incid[i][k].first] = incid[i][k].second * x[k];
    }
    if (worst <= 1e-13) break;
  }
}

}  // namespace

double edge_objective(const EdgeQp& qp, const std::vector<double>& y) {
  const auto T = totals_of(qp, y);
  double obj = 0.0;
  for (int i = 0; i < qp.n; ++i) obj += qp.a[i] * T[i] * T[i] + qp.b[i] * T[i];
  return obj;
}

OracleSolution solve_centralized(const EdgeQp& qp, double tol) {
  check_qp(qp);
  OracleSolution sol;
  sol.component = components_of(qp);
  const int m = qp.m();
  sol.y.assign(m, 0.0);
  sol.totals.assign(qp.n, 0.0);
  sol.lambda.assign(qp.n, 0.0);
  if (qp.n == 0) return sol;

  // Stage 1: projected gradient from zero picks the minimum-norm optimum of
  // the edge variables; only the totals it induces matter for stage 2.
  if (m > 0) {
    double max_a = 0.0;
    int max_deg = 0;
    std::vector<int> deg(qp.n, 0);
    for (const auto& [i, j] : qp.edges) {
      ++deg[i];
      ++deg[j];
    }
    for (int i = 0; i < qp.n; ++i) {
      max_a = std::max(max_a, qp.a[i]);
      max_deg = std::max(max_deg, deg[i]);
    }
    const double lipschitz = 4.0 * max_a * std::max(1, max_deg);
    const int iters = 600;
    for (int k = 0; k < iters; ++k) {
      const auto T = totals_of(qp, sol.y);
      const double s = (1.0 / lipschitz) * 120.0 / (120.0 + k);
      for (int e = 0; e < m; ++e) {
        const auto [i, j] = qp.edges[e];
        const double g = (2.0 * qp.a[i] * T[i] + qp.b[i]) -
                         (2.0 * qp.a[j] * T[j] + qp.b[j]);
        sol.y[e] -= s * g;
      }
      project_feasible(qp, sol.y, 60);
      ++sol.pgd_iters;
    }
  }

  // Stage 2: within each component the optimal totals solve
  //   T_i(lam) = clamp((lam - b_i)/(2 a_i), lo_i, hi_i),  sum_i T_i(lam) = 0,
  // with sum T_i(lam) non-decreasing in lam; bisection pins lam exactly.
  const int ncomp = 1 + *std::max_element(sol.component.begin(),
                                          sol.component.end());
  std::vector<double> comp_lam(ncomp, 0.0);
  for (int c = 0; c < ncomp; ++c) {
    double llo = 0.0, lhi = 0.0;
    bool first = true;
    for (int i = 0; i < qp.n; ++i) {
      if (sol.component[i] != c) continue;
      const double gl = 2.0 * qp.a[i] * qp.lo[i] + qp.b[i];
      const double gh = 2.0 * qp.a[i] * qp.hi[i] + qp.b[i];
      if (first) {
        llo = gl;
        lhi = gh;
        first = false;
      } else {
        llo = std::min(llo, gl);
        lhi = std::max(lhi, gh);
      }
    }
    auto total_at = [&](double lam) {
      double s = 0.0;
      for (int i = 0; i < qp.n; ++i) {
        if (sol.component[i] != c) continue;
        s += std::clamp((lam - qp.b[i]) / (2.0 * qp.a[i]), qp.lo[i], qp.hi[i]);
      }
      return s;
    };
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (llo + lhi);
      if (total_at(mid) < 0.0)
        llo = mid;
      else
        lhi = mid;
    }
    comp_lam[c] = 0.5 * (llo + lhi);
  }
  std::vector<double> target(qp.n);
  for (int i = 0; i < qp.n; ++i) {
    sol.lambda[i] = comp_lam[sol.component[i]];
    target[i] = std::clamp((sol.lambda[i] - qp.b[i]) / (2.0 * qp.a[i]),
                           qp.lo[i], qp.hi[i]);
  }

  // Stage 3: realize the exact totals by shifting flow along a spanning
  // forest, pushing each vertex's surplus toward its parent (leaves first).
  if (m > 0) {
    auto T = totals_of(qp, sol.y);
    std::vector<double> delta(qp.n);
    for (int i = 0; i < qp.n; ++i) delta[i] = target[i] - T[i];
    // BFS forest with explicit parent edges.
    std::vector<std::vector<std::pair<int, int>>> adj(qp.n);  // (nbr, edge)
    for (int e = 0; e < m; ++e) {
      adj[qp.edges[e].first].push_back({qp.edges[e].second, e});
      adj[qp.edges[e].second].push_back({qp.edges[e].first, e});
    }
    std::vector<int> parent(qp.n, -1), parent_edge(qp.n, -1), order;
    std::vector<char> seen(qp.n, 0);
    for (int s = 0; s < qp.n; ++s) {
      if (seen[s]) continue;
      seen[s] = 1;
      std::vector<int> queue{s};
      for (std::size_t h = 0; h < queue.size(); ++h) {
        const int v = queue[h];
        order.push_back(v);
        for (auto [w, e] : adj[v])
          if (!seen[w]) {
            seen[w] = 1;
            parent[w] = v;
            parent_edge[w] = e;
            queue.push_back(w);
          }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int v = *it;
      if (parent[v] < 0) continue;  // component root keeps the (zero) slack
      const int e = parent_edge[v];
      const double sign = (qp.edges[e].first == v) ? +1.0 : -1.0;
      sol.y[e] += sign * delta[v];
      delta[parent[v]] += delta[v];
      delta[v] = 0.0;
    }
  }

  sol.totals = totals_of(qp, sol.y);
  sol.objective = edge_objective(qp, sol.y);

  // KKT certificate on the realized point.
  double worst = 0.0;
  const double scale = 1e-7;
  for (int i = 0; i < qp.n; ++i) {
    const double T = sol.totals[i];
    const double grad = 2.0 * qp.a[i] * T + qp.b[i];
    const double lam = sol.lambda[i];
    worst = std::max(worst, qp.lo[i] - T);        // feasibility
    worst = std::max(worst, T - qp.hi[i]);
    const bool at_lo = T - qp.lo[i] <= scale * (1.0 + std::abs(qp.lo[i]));
    const bool at_hi = qp.hi[i] - T <= scale * (1.0 + std::abs(qp.hi[i]));
    if (at_lo && !at_hi) {
      worst = std::max(worst, lam - grad);  // multiplier must not undercut
    } else if (at_hi && !at_lo) {
      worst = std::max(worst, grad - lam);
    } else if (!at_lo && !at_hi) {
      worst = std::max(worst, std::abs(grad - lam));
    }
  }
  sol.kkt_residual = std::max(worst, 0.0);
  (void)tol;
  return sol;
}

std::vector<double> brute_force(const EdgeQp& qp, double grid_step) {
  check_qp(qp);
  const int m = qp.m();
  if (m > 3) throw ValidationError("brute_force: at most 3 edges");
  if (!(grid_step > 0.0)) throw ValidationError("brute_force: grid_step > 0");
  if (m == 0) return {};

  double radius = 0.0;
  for (int i = 0; i < qp.n; ++i)
    radius = std::max({radius, std::abs(qp.lo[i]), std::abs(qp.hi[i])});
  radius *= m;  // a single edge can carry at most m box-radii of overlap
  const int half = static_cast<int>(std::ceil(radius / grid_step));

  std::vector<double> best(m, 0.0), y(m, 0.0);
  double best_obj = std::numeric_limits<double>::infinity();
  const double feas_slack = 1e-9;
  std::vector<int> idx(m, -half);
  for (;;) {
    for (int e = 0; e < m; ++e) y[e] = idx[e] * grid_step;
    const auto T = totals_of(qp, y);
    bool ok = true;
    for (int i = 0; i < qp.n && ok; ++i)
      ok = T[i] >= qp.lo[i] - feas_slack && T[i] <= qp.hi[i] + feas_slack;
    if (ok) {
      const double obj = edge_objective(qp, y);
      if (obj < best_obj) {
        best_obj = obj;
        best = y;
      }
    }
    int e = 0;
    while (e < m && ++idx[e] > half) idx[e++] = -half;
    if (e == m) break;
  }
  return best;
}

std::string to_json(const OracleSolution& s) {
  std::ostringstream os;
  os.precision(17);
  auto arr = [&os](const auto& v) {
    os << "[";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << "]";
  };
  os << "{\"objective\":" << s.objective
     << ",\"kkt_residual\":" << s.kkt_residual
     << ",\"pgd_iters\":" << s.pgd_iters << ",\"y\":";
  arr(s.y);
  os << ",\"totals\":";
  arr(s.totals);
  os << ",\"lambda\":";
  arr(s.lambda);
  os << ",\"component\":";
  arr(s.component);
  os << "}";
  return os.str();
}

}  // namespace p2pchp

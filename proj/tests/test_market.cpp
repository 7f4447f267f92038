#include "doctest.h"

#include "p2pchp/market.hpp"
#include "support.hpp"

#include <cmath>
#include <set>
#include <vector>

using namespace p2pchp;

namespace {

std::vector<Role> roles_of(const std::vector<double>& demands, double pmax) {
  std::vector<Role> r;
  for (double d : demands) r.push_back(assign_role(d, pmax));
  return r;
}

const std::vector<double> kSlot8 = {0.208, 0.686, 0.954, 0.768, 0.532, 0.730};

}  // namespace

TEST_CASE("roles follow the demand versus rating comparison") {
  CHECK(assign_role(0.208, 0.7) == Role::Seller);
  CHECK(assign_role(0.954, 0.7) == Role::Buyer);
  CHECK(assign_role(0.7, 0.7) == Role::Inactive);
  CHECK(role_name(Role::Buyer) == std::string("buyer"));
  CHECK(role_name(Role::Seller) == std::string("seller"));
  CHECK(role_name(Role::Inactive) == std::string("inactive"));
}

TEST_CASE("trade bounds are the surplus or deficit interval") {
  auto [slo, shi] = trade_bounds(0.208, 0.7);
  CHECK(slo == doctest::Approx(-0.492).epsilon(1e-12));
  CHECK(shi == 0.0);

  auto [blo, bhi] = trade_bounds(0.954, 0.7);
  CHECK(blo == 0.0);
  CHECK(bhi == doctest::Approx(0.254).epsilon(1e-12));

  auto [ilo, ihi] = trade_bounds(0.7, 0.7);
  CHECK(ilo == 0.0);
  CHECK(ihi == 0.0);
}

TEST_CASE("FC lower bound respects rating cap and hardware floor") {
  FuelCellCurve c;  // pmax 0.7, floor 0.05
  CHECK(fc_min_bound(0.208, c) == doctest::Approx(0.208).epsilon(1e-12));
  CHECK(fc_min_bound(0.954, c) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fc_min_bound(0.02, c) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(fc_min_bound(0.7, c) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("gas credit shifts only the seller coefficient") {
  ThermalParams th;
  LinearFit fit;
  fit.alpha = 2.042;
  fit.beta = 0.06323;
  const double g = gas_cost_slope(fit, th, 0.95);
  CHECK(g == doctest::Approx(1.2237 * 2.042 * 0.5 * 3.6 / 0.95).epsilon(1e-12));
  CHECK(g == doctest::Approx(4.7346).epsilon(1e-4));

  CHECK(effective_coeff(Role::Buyer, -20.0, fit, th, 0.95) == -20.0);
  CHECK(effective_coeff(Role::Seller, 0.0, fit, th, 0.95) ==
        doctest::Approx(-g).epsilon(1e-12));
  CHECK(effective_coeff(Role::Seller, 14.0, fit, th, 0.95) ==
        doctest::Approx(14.0 - g).epsilon(1e-12));

  LinearFit flat;  // alpha = 0: no marginal gas, roles coincide
  flat.alpha = 0.0;
  CHECK(effective_coeff(Role::Seller, 5.0, flat, th, 0.95) ==
        effective_coeff(Role::Buyer, 5.0, flat, th, 0.95));
}

TEST_CASE("default graph is complete bipartite over active agents") {
  const auto roles = roles_of(kSlot8, 0.7);
  const TradingGraph g = build_trading_graph(roles);
  CHECK(g.n == 6);
  CHECK(g.edge_list.size() == 9);
  CHECK(g.directed_size() == 18);
  const std::set<int> sellers = {0, 1, 4};
  const std::set<int> buyers = {2, 3, 5};
  for (auto [i, j] : g.edge_list) {
    const bool ij = sellers.count(i) && buyers.count(j);
    const bool ji = buyers.count(i) && sellers.count(j);
    CHECK((ij || ji));
  }
  for (int s : sellers) CHECK(g.degree(s) == 3);
  for (int b : buyers) CHECK(g.degree(b) == 3);
  CHECK(g.has_edge(0, 2));
  CHECK(!g.has_edge(0, 1));
  CHECK(!g.has_edge(2, 3));
}

TEST_CASE("degenerate role mixes yield empty or single-edge graphs") {
  const TradingGraph none =
      build_trading_graph({Role::Seller, Role::Seller, Role::Inactive});
  CHECK(none.edge_list.empty());

  const TradingGraph one = build_trading_graph({Role::Buyer, Role::Seller});
  REQUIRE(one.edge_list.size() == 1);
  CHECK(one.edge_list[0] == std::pair<int, int>(0, 1));
}

TEST_CASE("explicit adjacency is validated") {
  const std::vector<Role> roles = {Role::Buyer, Role::Seller, Role::Seller};
  std::vector<std::vector<int>> adj = {{0, 1, 0}, {1, 0, 0}, {0, 0, 0}};
  const TradingGraph g = TradingGraph::from_adjacency(adj, roles);
  CHECK(g.edge_list.size() == 1);
  CHECK(g.has_edge(0, 1));

  auto bad = adj;
  bad[0][1] = 0;  // asymmetric
  CHECK_THROWS_AS(TradingGraph::from_adjacency(bad, roles), ValidationError);

  bad = adj;
  bad[1][1] = 1;  // self loop
  CHECK_THROWS_AS(TradingGraph::from_adjacency(bad, roles), ValidationError);

  bad = adj;
  bad[1][2] = bad[2][1] = 1;  // seller-seller edge
  CHECK_THROWS_AS(TradingGraph::from_adjacency(bad, roles), ValidationError);

  bad = adj;
  bad[0][1] = bad[1][0] = 2;  // not 0/1
  CHECK_THROWS_AS(TradingGraph::from_adjacency(bad, roles), ValidationError);

  CHECK_THROWS_AS(
      TradingGraph::from_adjacency({{0, 1}, {1, 0}, {0, 0}}, roles),
      ValidationError);  // not square
}

TEST_CASE("market step assembly wires preferences, credits and bounds") {
  ThermalParams th;
  std::vector<DwellingSpec> specs(6);
  std::vector<LinearFit> fits(6);
  for (int i = 0; i < 6; ++i) {
    specs[i].label = "h" + std::to_string(i + 1);
    specs[i].a = 1.0;
    specs[i].b_tilde = 13.7;
    fits[i] = fit_gas_line(specs[i].curve);
  }
  const MarketStep step = build_market_step(kSlot8, specs, 0.5, th, fits);
  REQUIRE(step.n() == 6);
  CHECK(step.edge_surcharge.size() == step.graph.edge_list.size());

  const double g = gas_cost_slope(fits[0], th, specs[0].curve.eta_g2h);
  for (int i = 0; i < 6; ++i) {
    const DwellingStep& d = step.dwellings[i];
    CHECK(d.demand == kSlot8[i]);
    CHECK(d.role == assign_role(kSlot8[i], 0.7));
    CHECK(d.b_hat == doctest::Approx(14.2).epsilon(1e-12));
    auto [lo, hi] = trade_bounds(kSlot8[i], 0.7);
    CHECK(d.p_tr_lo == doctest::Approx(lo).epsilon(1e-12));
    CHECK(d.p_tr_hi == doctest::Approx(hi).epsilon(1e-12));
    CHECK(d.p_fc_min ==
          doctest::Approx(fc_min_bound(kSlot8[i], specs[i].curve)).epsilon(1e-12));
    if (d.role == Role::Seller) {
      CHECK(d.b_eff == doctest::Approx(14.2 - g).epsilon(1e-12));
      CHECK(d.g_slope == doctest::Approx(g).epsilon(1e-12));
    } else {
      CHECK(d.b_eff == doctest::Approx(14.2).epsilon(1e-12));
    }
  }
}

TEST_CASE("market step assembly rejects malformed input") {
  ThermalParams th;
  std::vector<DwellingSpec> specs(2);
  std::vector<LinearFit> fits(2, fit_gas_line(specs[0].curve));

  CHECK_THROWS_AS(build_market_step({0.5}, specs, 0.0, th, fits),
                  ValidationError);  // demand count mismatch

  CHECK_THROWS_AS(build_market_step({0.5, -0.1}, specs, 0.0, th, fits),
                  ValidationError);  // negative demand

  auto bad = specs;
  bad[0].a = 0.0;
  CHECK_THROWS_AS(build_market_step({0.5, 0.8}, bad, 0.0, th, fits),
                  ValidationError);  // a must be positive

  std::vector<LinearFit> short_fits(1);
  CHECK_THROWS_AS(build_market_step({0.5, 0.8}, specs, 0.0, th, short_fits),
                  ValidationError);
}

TEST_CASE("grid residual closes the power balance") {
  CHECK(grid_residual(0.954, 0.7, 0.254) == doctest::Approx(0.0));
  CHECK(grid_residual(0.5, 0.5, 0.0) == doctest::Approx(0.0));
  CHECK(grid_residual(0.954, 0.7, 0.1) == doctest::Approx(0.154).epsilon(1e-12));
  CHECK(grid_residual(0.3, 0.3, -0.0) == doctest::Approx(0.0));
}

TEST_CASE("step cost keeps the affine gas intercept at zero output") {
  ThermalParams th;
  std::vector<DwellingSpec> specs(2);
  std::vector<LinearFit> fits = {fit_gas_line(specs[0].curve),
                                 fit_gas_line(specs[1].curve)};
  specs[1].c = 3.0;
  const MarketStep step = build_market_step({0.9, 0.3}, specs, 0.5, th, fits);

  const auto cost = step_cost(step, {0.0, 0.0}, {0.0, 0.0}, specs, fits, th);
  const double beta_cost = gas_cost_linear(fits[0], specs[0].curve, th, 0.0);
  CHECK(beta_cost > 0.0);
  CHECK(cost[0] == doctest::Approx(beta_cost).epsilon(1e-12));
  CHECK(cost[1] == doctest::Approx(beta_cost + 3.0).epsilon(1e-12));

  // Quadratic trade term plus gas at the running point.
  const auto cost2 = step_cost(step, {0.2, -0.2}, {0.7, 0.5}, specs, fits, th);
  const DwellingStep& d0 = step.dwellings[0];
  CHECK(cost2[0] ==
        doctest::Approx(d0.a * 0.04 + d0.b_hat * 0.2 +
                        gas_cost_linear(fits[0], specs[0].curve, th, 0.7))
            .epsilon(1e-12));
}

TEST_CASE("random instances keep role, sign and graph invariants") {
  testsup::Rng rng(9001);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.uniform_int(2, 10);
    const MarketStep step = testsup::random_market(rng, n);
    int buyers = 0, sellers = 0;
    for (const auto& d : step.dwellings) {
      if (d.role == Role::Buyer) {
        ++buyers;
        CHECK(d.p_tr_lo == 0.0);
        CHECK(d.p_tr_hi >= 0.0);
      } else if (d.role == Role::Seller) {
        ++sellers;
        CHECK(d.p_tr_lo <= 0.0);
        CHECK(d.p_tr_hi == 0.0);
      } else {
        CHECK(d.p_tr_lo == 0.0);
        CHECK(d.p_tr_hi == 0.0);
      }
    }
    CHECK(buyers >= 1);
    CHECK(sellers >= 1);
    CHECK(static_cast<int>(step.graph.edge_list.size()) == buyers * sellers);
    for (auto [i, j] : step.graph.edge_list) {
      CHECK(i < j);
      CHECK(step.dwellings[i].role != step.dwellings[j].role);
      CHECK(step.graph.has_edge(i, j));
      CHECK(step.graph.has_edge(j, i));
    }
  }
}

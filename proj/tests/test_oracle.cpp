#include "doctest.h"

#include "p2pchp/harness.hpp"
#include "p2pchp/oracle.hpp"
#include "support.hpp"

#include <cmath>
#include <set>
#include <vector>

using namespace p2pchp;

namespace {

EdgeQp two_agent_qp(double b_low, double b_high) {
  EdgeQp qp;
  qp.n = 2;
  qp.edges = {{0, 1}};
  qp.a = {1.0, 1.0};
  qp.b = {b_low, b_high};
  qp.lo = {-5.0, -5.0};
  qp.hi = {5.0, 5.0};
  return qp;
}

}  // namespace

TEST_CASE("two-agent trade splits the coefficient gap") {
  // min T1^2 + b1*T1 + T2^2 + b2*T2 s.t. T1 + T2 = 0 has
  // T2 = (b1 - b2) / (4a) and a shadow price of (b1 + b2) / 2.
  const EdgeQp qp = two_agent_qp(-4.0, 2.0);
  const OracleSolution s = solve_centralized(qp);
  REQUIRE(s.totals.size() == 2);
  CHECK(s.totals[0] == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(s.totals[1] == doctest::Approx(-1.5).epsilon(1e-8));
  CHECK(s.lambda[0] == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(s.lambda[1] == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(s.kkt_residual <= 1e-8);
  CHECK(s.component[0] == s.component[1]);
  CHECK(s.objective ==
        doctest::Approx(1.5 * 1.5 - 4.0 * 1.5 + 1.5 * 1.5 - 2.0 * 1.5)
            .epsilon(1e-8));
}

TEST_CASE("identical coefficients produce no net trade") {
  EdgeQp qp;
  qp.n = 4;
  qp.edges = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
  qp.a = {1.0, 1.0, 1.0, 1.0};
  qp.b = {3.0, 3.0, 3.0, 3.0};
  qp.lo = {-1.0, -1.0, -1.0, -1.0};
  qp.hi = {1.0, 1.0, 1.0, 1.0};
  const OracleSolution s = solve_centralized(qp);
  for (double t : s.totals) CHECK(std::abs(t) < 1e-8);
  CHECK(std::abs(s.objective) < 1e-7);
  CHECK(s.kkt_residual <= 1e-8);
}

TEST_CASE("single-edge optimum matches the closed form, interior and clamped") {
  testsup::Rng rng(551);
  for (int trial = 0; trial < 30; ++trial) {
    EdgeQp qp;
    qp.n = 2;
    qp.edges = {{0, 1}};
    qp.a = {rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0)};
    qp.b = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    const double cap = rng.uniform(0.2, 2.0);
    qp.lo = {-cap, -cap};
    qp.hi = {cap, cap};
    const double unconstrained = (qp.b[1] - qp.b[0]) / (2.0 * (qp.a[0] + qp.a[1]));
    const double expect = std::min(cap, std::max(-cap, unconstrained));

    const OracleSolution s = solve_centralized(qp);
    CHECK(s.totals[0] == doctest::Approx(expect).epsilon(1e-7));
    CHECK(s.totals[1] == doctest::Approx(-expect).epsilon(1e-7));
    CHECK(s.kkt_residual <= 1e-8);

    // Brute force lands within half a grid cell of the same point.
    const double h = 0.005;
    const auto y = brute_force(qp, h);
    REQUIRE(y.size() == 1);
    CHECK(std::abs(y[0] - expect) <= h + 1e-9);
  }
}

TEST_CASE("solver never loses to exhaustive grid search") {
  testsup::Rng rng(808);
  for (int trial = 0; trial < 12; ++trial) {
    // Three agents on a path: two edges, small enough to enumerate.
    EdgeQp qp;
    qp.n = 3;
    qp.edges = {{0, 1}, {1, 2}};
    for (int i = 0; i < 3; ++i) {
      qp.a.push_back(rng.uniform(0.5, 4.0));
      qp.b.push_back(rng.uniform(-8.0, 8.0));
      const double span = rng.uniform(0.3, 1.0);
      qp.lo.push_back(-span);
      qp.hi.push_back(span);
    }
    const OracleSolution s = solve_centralized(qp);
    CHECK(s.kkt_residual <= 1e-8);
    const auto y = brute_force(qp, 0.02);
    CHECK(edge_objective(qp, s.y) <= edge_objective(qp, y) + 1e-6);
  }
}

TEST_CASE("random market instances satisfy the optimality certificate") {
  testsup::Rng rng(2026);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniform_int(2, 10);
    const MarketStep step = testsup::random_market(rng, n);
    const EdgeQp qp = make_edge_qp(step);
    const OracleSolution s = solve_centralized(qp);
    CHECK(s.kkt_residual <= 1e-8);

    double net = 0.0;
    for (double t : s.totals) net += t;
    CHECK(std::abs(net) < 1e-10);

    for (int i = 0; i < qp.n; ++i) {
      CHECK(s.totals[i] >= qp.lo[i] - 1e-9);
      CHECK(s.totals[i] <= qp.hi[i] + 1e-9);
    }
  }
}

TEST_CASE("edge formulation mirrors the market step") {
  testsup::Rng rng(31337);
  const MarketStep step = testsup::random_market(rng, 6);
  const EdgeQp qp = make_edge_qp(step);
  CHECK(qp.n == step.n());
  CHECK(qp.edges == step.graph.edge_list);
  for (int i = 0; i < qp.n; ++i) {
    CHECK(qp.a[i] == step.dwellings[i].a);
    CHECK(qp.b[i] == step.dwellings[i].b_eff);
    CHECK(qp.lo[i] == step.dwellings[i].p_tr_lo);
    CHECK(qp.hi[i] == step.dwellings[i].p_tr_hi);
  }
}

TEST_CASE("degenerate problems are handled") {
  EdgeQp empty;
  const OracleSolution s0 = solve_centralized(empty);
  CHECK(s0.totals.empty());
  CHECK(s0.objective == 0.0);

  // Agents but no edges: everyone is pinned at zero trade.
  EdgeQp lonely;
  lonely.n = 2;
  lonely.a = {1.0, 2.0};
  lonely.b = {-3.0, 4.0};
  lonely.lo = {0.0, -1.0};
  lonely.hi = {1.0, 0.0};
  const OracleSolution s1 = solve_centralized(lonely);
  CHECK(s1.totals[0] == 0.0);
  CHECK(s1.totals[1] == 0.0);
  CHECK(s1.component[0] != s1.component[1]);
  CHECK(s1.kkt_residual <= 1e-8);
}

TEST_CASE("malformed problems are rejected") {
  EdgeQp qp = two_agent_qp(-4.0, 2.0);
  qp.a[0] = 0.0;
  CHECK_THROWS_AS(solve_centralized(qp), ValidationError);

  qp = two_agent_qp(-4.0, 2.0);
  qp.lo[0] = 0.5;  // box excludes zero
  CHECK_THROWS_AS(solve_centralized(qp), ValidationError);

  qp = two_agent_qp(-4.0, 2.0);
  qp.edges = {{1, 0}};  // not i < j
  CHECK_THROWS_AS(solve_centralized(qp), ValidationError);

  EdgeQp wide;
  wide.n = 5;
  wide.a.assign(5, 1.0);
  wide.b.assign(5, 0.0);
  wide.lo.assign(5, -1.0);
  wide.hi.assign(5, 1.0);
  wide.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  CHECK_THROWS_AS(brute_force(wide, 0.1), ValidationError);
}

TEST_CASE("morning scarcity slot clears against the hand-derived optimum") {
  Scenario sc = canonical_scenario();
  sc.derive_fits();
  const DemandSeries day = canonical_six_house_day();
  const std::vector<double>& demands = day.demand[7];  // step 8

  const MarketStep step = build_market_step(demands, sc.dwellings, sc.gamma,
                                            sc.thermal, sc.gas_fits);
  // Sellers are houses 1, 2, 5; buyers 3, 4, 6 (1-based).
  CHECK(step.dwellings[0].role == Role::Seller);
  CHECK(step.dwellings[1].role == Role::Seller);
  CHECK(step.dwellings[4].role == Role::Seller);
  CHECK(step.dwellings[2].role == Role::Buyer);
  CHECK(step.dwellings[3].role == Role::Buyer);
  CHECK(step.dwellings[5].role == Role::Buyer);

  // All three buyers saturate their deficits; house 2's tiny 0.014 kW
  // surplus is cheap enough to bind while houses 1 and 5 split the rest at
  // equal marginal cost. That pins the clearing price and every total.
  const double b1 = step.dwellings[0].b_eff;
  const double b5 = step.dwellings[4].b_eff;
  const double residual_supply = (0.254 + 0.068 + 0.030) - 0.014;
  const double lambda = (b1 + b5) / 2.0 - residual_supply;
  const double q1 = (b1 - lambda) / 2.0;
  const double q5 = (b5 - lambda) / 2.0;

  const EdgeQp qp = make_edge_qp(step);
  const OracleSolution s = solve_centralized(qp);
  CHECK(s.kkt_residual <= 1e-8);
  CHECK(s.totals[0] == doctest::Approx(-q1).epsilon(1e-6));
  CHECK(s.totals[1] == doctest::Approx(-0.014).epsilon(1e-6));
  CHECK(s.totals[4] == doctest::Approx(-q5).epsilon(1e-6));
  CHECK(s.totals[2] == doctest::Approx(0.254).epsilon(1e-6));
  CHECK(s.totals[3] == doctest::Approx(0.068).epsilon(1e-6));
  CHECK(s.totals[5] == doctest::Approx(0.030).epsilon(1e-6));
  for (int i = 0; i < 6; ++i)
    CHECK(s.lambda[i] == doctest::Approx(lambda).epsilon(1e-6));

  // Binding-margin sanity: house 2's marginal cost at its cap stays clear
  // of the price, so the bound genuinely binds.
  CHECK(step.dwellings[1].b_eff - 2.0 * 0.014 - lambda > 0.5);

  // Reported per-kWh price sits inside the corridor between the best
  // seller's marginal cost and the buyers' willingness to pay.
  const double per_kwh = lambda / sc.thermal.dt_hours;
  CHECK(per_kwh > 10.0);
  CHECK(per_kwh < 25.0);
}

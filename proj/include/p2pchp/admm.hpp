#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "p2pchp/market.hpp"
#include "p2pchp/projection.hpp"

namespace p2pchp {

// Parameters of the parallel proximal ADMM. Convergence requires
//   phi > rho*(1/mu1 - 1),  psi > rho*(1/mu2 - 1),  mu1 + mu2 < 2 - kappa,
// all strict, with rho, kappa, mu1, mu2 > 0.
struct AdmmParams {
  double rho = 1.0;    // penalty
  double kappa = 0.5;  // dual step factor
  double mu1 = 0.7;
  double mu2 = 0.7;
  double phi = 1.5;  // proximal weight on the trade block
  double psi = 1.5;  // proximal weight on the auxiliary block
  double eps_primal = 1e-6;
  double eps_dual = 1e-6;
  int max_iter = 50000;
  double jacobi_tol = 1e-10;
  int jacobi_max_sweeps = 20000;
  int dual_sign = +1;  // +1 or -1; see dual_step
  // Step the dual off the stale residual P^k - X^k instead of the freshly
  // committed P^{k+1} - X^{k+1}. The fresh default is the variant covered by
  // the convergence conditions; the stale variant can stall on strongly
  // degenerate instances (many identical agents at their bounds).
  bool dual_stale = false;
  // Apply the role sign constraint to each trade component (true) or only
  // to the total via the bounds (false).
  bool componentwise_sign = true;
};

// Empty when parameters are admissible; otherwise one line per violation.
std::vector<std::string> validate_params(const AdmmParams& p);

enum class MsgPhase { V, Jacobi };

// One simulated network message between neighboring agents.
struct Message {
  int round = 0;
  MsgPhase phase = MsgPhase::V;
  int from = 0;
  int to = 0;
  double value = 0.0;
};

struct IterationReport {
  int iter = 0;
  double primal_residual = 0.0;  // max |P - X|
  double dual_residual = 0.0;    // max |X^k - X^{k-1}|
  double price_mismatch = 0.0;   // max |lambda_ij - lambda_ji|
  int jacobi_sweeps = 0;
};

struct EdgeRecord {
  int i = 0, j = 0;       // i < j
  double p_ij = 0.0;      // power received by i from j (kW), from i's view
  double lambda = 0.0;    // agreed price on the edge (JPY/kW per step)
};

struct StepSolution {
  std::vector<double> p_tr;       // per-agent total traded power (kW)
  std::vector<EdgeRecord> edges;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double price_mismatch = 0.0;
  bool jacobi_ok = true;              // every inner solve hit jacobi_tol
  double jacobi_worst_residual = 0.0;
  std::vector<IterationReport> trace;

  // Filled in by the simulator after the market clears.
  std::vector<double> p_fc;     // kW
  std::vector<double> p_grid;   // kW
  std::vector<double> cost_jpy;
};

// Oriented per-edge view of one iterate, for invariant checks.
struct IterationSnapshot {
  int iter = 0;
  std::vector<double> p_tr;                      // per agent
  std::vector<std::array<double, 2>> edge_p;     // per edge_list entry: {P_ij, P_ji}
  std::vector<std::array<double, 2>> edge_x;     // local copies {X_ij, X_ji}
  std::vector<std::array<double, 2>> edge_lambda;
  std::vector<std::array<double, 2>> edge_u;     // scaled duals {u_ij, u_ji}
};

struct RunOptions {
  bool parallel = false;
  int threads = 0;  // 0 = hardware concurrency
  bool record_trace = false;
  // Sequential scheduling permutation of agent indices (testing determinism).
  const std::vector<int>* schedule_order = nullptr;
  std::function<void(const IterationSnapshot&)> probe;  // per outer iteration
  std::function<void(const Message&)> message_log;
};

// ---- Single-agent update rules (unit-test surface; run_step uses the same
// ---- arithmetic internally). Vectors are indexed by the agent's neighbor list.

// X block: proximal average of (P + u) and the previous X, projected onto the
// role's sign orthant intersected with the trade-total box.
std::vector<double> x_update(const std::vector<double>& P,
                             const std::vector<double>& X,
                             const std::vector<double>& u, double rho,
                             double psi, SignConstraint sc, double lo,
                             double hi);

// Per-edge linear terms v_ij = b_eff + d_ij + rho*(-X_ij + u_ij) - phi*P_ij,
// all taken from the agent's own current iterate.
std::vector<double> compute_v(const std::vector<double>& P,
                              const std::vector<double>& X,
                              const std::vector<double>& u,
                              const std::vector<double>& d, double b_eff,
                              double rho, double phi);

struct TotalsResult {
  std::vector<double> p_tr;  // per-agent totals
  std::vector<double> t;     // scaled totals t_i = 2*a_i*p_tr_i
  int sweeps = 0;
  double residual = 0.0;
  bool converged = false;
};

// Solve (L + Gamma) t = rhs by synchronous Jacobi sweeps, where L is the
// graph Laplacian and Gamma = (rho+phi)*diag(1/a_i). Strict diagonal
// dominance (a_i > 0) guarantees convergence. warm, if given, seeds t.
TotalsResult solve_totals(const TradingGraph& g, const std::vector<double>& a,
                          double rho, double phi,
                          const std::vector<double>& rhs, double tol,
                          int max_sweeps,
                          const std::vector<double>* warm = nullptr);

// Trade block closed form. Grouping is fixed so the pair (i,j) and (j,i)
// produce exactly opposite values: P_ij = ((v_ji + t_j) - (v_ij + t_i)) / (2(rho+phi)).
double edge_p_update(double v_ij, double t_i, double v_ji, double t_j,
                     double rho, double phi);

// Price on the edge: lambda_ij = ((v_ji + t_j) + (v_ij + t_i)) / 2, exactly
// symmetric in the two endpoints.
double edge_price(double v_ij, double t_i, double v_ji, double t_j);

// Scaled dual ascent: u + sign*kappa*rho*(p - x).
double dual_step(double u, double kappa, double rho, double p_minus_x,
                 int sign);

// Run the distributed solve for one timestep. Throws ValidationError when
// validate_params(p) reports violations; non-convergence is returned as a
// flagged best iterate, not an exception.
StepSolution run_step(const MarketStep& step, const AdmmParams& p,
                      const RunOptions& opt = {});

}  // namespace p2pchp

#include "p2pchp/admm.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <thread>

namespace p2pchp {

std::vector<std::string> validate_params(const AdmmParams& p) {
  std::vector<std::string> bad;
  if (!(p.rho > 0.0)) bad.push_back("rho must be > 0");
  if (!(p.kappa > 0.0)) bad.push_back("kappa must be > 0");
  if (!(p.mu1 > 0.0)) bad.push_back("mu1 must be > 0");
  if (!(p.mu2 > 0.0)) bad.push_back("mu2 must be > 0");
  if (p.kappa >= 2.0) {
    bad.push_back("kappa >= 2 leaves no positive mu1, mu2 with mu1 + mu2 < 2 - kappa");
  } else if (p.mu1 > 0.0 && p.mu2 > 0.0 && !(p.mu1 + p.mu2 < 2.0 - p.kappa)) {
    std::ostringstream m;
    m << "mu1 + mu2 = " << p.mu1 + p.mu2 << " must be < 2 - kappa = "
      << 2.0 - p.kappa << " (strict)";
    bad.push_back(m.str());
  }
  if (p.mu1 > 0.0 && p.rho > 0.0 && !(p.phi > p.rho * (1.0 / p.mu1 - 1.0))) {
    std::ostringstream m;
    m << "phi = " << p.phi << " must be > rho*(1/mu1 - 1) = "
      << p.rho * (1.0 / p.mu1 - 1.0) << " (strict)";
    bad.push_back(m.str());
  }
  if (p.mu2 > 0.0 && p.rho > 0.0 && !(p.psi > p.rho * (1.0 / p.mu2 - 1.0))) {
    std::ostringstream m;
    m << "psi = " << p.psi << " must be > rho*(1/mu2 - 1) = "
      << p.rho * (1.0 / p.mu2 - 1.0) << " (strict)";
    bad.push_back(m.str());
  }
  if (!(p.eps_primal > 0.0)) bad.push_back("eps_primal must be > 0");
  if (!(p.eps_dual > 0.0)) bad.push_back("eps_dual must be > 0");
  if (!(p.max_iter > 0)) bad.push_back("max_iter must be > 0");
  if (!(p.jacobi_tol > 0.0)) bad.push_back("jacobi_tol must be > 0");
  if (!(p.jacobi_max_sweeps > 0)) bad.push_back("jacobi_max_sweeps must be > 0");
  if (p.dual_sign != 1 && p.dual_sign != -1)
    bad.push_back("dual_sign must be +1 or -1");
  return bad;
}

std::vector<double> x_update(const std::vector<double>& P,
                             const std::vector<double>& X,
                             const std::vector<double>& u, double rho,
                             double psi, SignConstraint sc, double lo,
                             double hi) {
  std::vector<double> z(P.size());
  for (std::size_t j = 0; j < P.size(); ++j)
    z[j] = (rho * (P[j] + u[j]) + psi * X[j]) / (rho + psi);
  return project_sum_box(z, lo, hi, sc);
}

std::vector<double> compute_v(const std::vector<double>& P,
                              const std::vector<double>& X,
                              const std::vector<double>& u,
                              const std::vector<double>& d, double b_eff,
                              double rho, double phi) {
  std::vector<double> v(P.size());
  for (std::size_t j = 0; j < P.size(); ++j)
    v[j] = b_eff + d[j] + rho * (-X[j] + u[j]) - phi * P[j];
  return v;
}

TotalsResult solve_totals(const TradingGraph& g, const std::vector<double>& a,
                          double rho, double phi,
                          const std::vector<double>& rhs, double tol,
                          int max_sweeps, const std::vector<double>* warm) {
  const int n = g.n;
  if (static_cast<int>(a.size()) != n || static_cast<int>(rhs.size()) != n)
    throw std::invalid_argument("solve_totals: size mismatch");
  for (double ai : a)
    if (!(ai > 0.0)) throw std::invalid_argument("solve_totals: require a > 0");
  const double gamma = rho + phi;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = g.degree(i) + gamma / a[i];

  TotalsResult res;
  res.t = warm ? *warm : std::vector<double>(n, 0.0);
  std::vector<double> next(n);
  for (;;) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j : g.nbr[i]) s += res.t[j];
      next[i] = (s + rhs[i]) / diag[i];
      worst = std::max(worst, std::abs(diag[i] * res.t[i] - s - rhs[i]));
    }
    res.residual = worst;
    if (worst < tol) {
      res.converged = true;
      break;
    }
    if (res.sweeps >= max_sweeps) break;
    res.t.swap(next);
    ++res.sweeps;
  }
  res.p_tr.resize(n);
  for (int i = 0; i < n; ++i) res.p_tr[i] = res.t[i] / (2.0 * a[i]);
  return res;
}

double edge_p_update(double v_ij, double t_i, double v_ji, double t_j,
                     double rho, double phi) {
  const double own = v_ij + t_i;
  const double other = v_ji + t_j;
  return (other - own) / (2.0 * (rho + phi));
}

double edge_price(double v_ij, double t_i, double v_ji, double t_j) {
  const double own = v_ij + t_i;
  const double other = v_ji + t_j;
  return 0.5 * (other + own);
}

double dual_step(double u, double kappa, double rho, double p_minus_x,
                 int sign) {
  return u + sign * kappa * rho * p_minus_x;
}

namespace {

// Fixed pool of worker threads executing fn(i) for i in [0, n) with a static
// partition; run() blocks until every worker finished the phase. Agents only
// write their own state, so phases are data-race free by construction.
class Gang {
 public:
  explicit Gang(int threads)
      : nthreads_(threads < 1 ? 1 : threads),
        start_(nthreads_ + 1),
        done_(nthreads_ + 1) {
    workers_.reserve(nthreads_);
    for (int w = 0; w < nthreads_; ++w)
      workers_.emplace_back([this, w] { loop(w); });
  }

  Gang(const Gang&) = delete;
  Gang& operator=(const Gang&) = delete;

  ~Gang() {
    stop_.store(true, std::memory_order_relaxed);
    start_.arrive_and_wait();
    for (auto& t : workers_) t.join();
  }

  void run(int n, const std::function<void(int)>& fn) {
    job_ = &fn;
    n_ = n;
    start_.arrive_and_wait();
    done_.arrive_and_wait();
  }

 private:
  void loop(int w) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_.load(std::memory_order_relaxed)) return;
      const int n = n_;
      const int lo = static_cast<int>(static_cast<long long>(n) * w / nthreads_);
      const int hi =
          static_cast<int>(static_cast<long long>(n) * (w + 1) / nthreads_);
      for (int i = lo; i < hi; ++i) (*job_)(i);
      done_.arrive_and_wait();
    }
  }

  int nthreads_;
  std::barrier<> start_, done_;
  std::atomic<bool> stop_{false};
  const std::function<void(int)>* job_ = nullptr;
  int n_ = 0;
  std::vector<std::thread> workers_;
};

struct Agent {
  SignConstraint sc = SignConstraint::Free;
  double lo = 0.0, hi = 0.0;
  double a = 1.0, b_eff = 0.0;
  std::vector<int> nbr;
  std::vector<int> rev;  // index of this agent in each neighbor's list
  std::vector<double> d;
  // Iterate (k) and staging (k+1) state.
  std::vector<double> P, X, u;
  std::vector<double> X_new, u_new, P_new, lambda;
  std::vector<double> v_out, v_in;
  // Jacobi working values.
  double t = 0.0, t_pub = 0.0, t_in_sum = 0.0, rhs = 0.0, diag = 0.0;
  double local_primal = 0.0, local_dual = 0.0, jac_res = 0.0;
  std::vector<Message> outbox;  // buffered log entries, flushed in agent order

  int deg() const { return static_cast<int>(nbr.size()); }
};

class Engine {
 public:
  Engine(const MarketStep& step, const AdmmParams& prm, const RunOptions& opt)
      : step_(step), prm_(prm), opt_(opt), n_(step.n()) {
    build_agents();
    if (opt_.parallel) {
      int threads = opt_.threads > 0
                        ? opt_.threads
                        : static_cast<int>(std::thread::hardware_concurrency());
      if (threads < 1) threads = 1;
      gang_ = std::make_unique<Gang>(threads);
    }
  }

  StepSolution solve() {
    StepSolution out;
    out.p_tr.assign(n_, 0.0);
    if (edge_index_.empty()) {  // nothing to trade
      out.converged = true;
      finalize(out);
      return out;
    }
    for (int iter = 1; iter <= prm_.max_iter; ++iter) {
      run_phase([this](int i) { local_updates(i); });
      run_phase([this](int i) { exchange_v(i); });
      flush_outboxes();
      ++round_;
      const int sweeps = jacobi();
      run_phase([this](int i) { edge_updates(i); });
      run_phase([this](int i) { commit(i); });

      IterationReport rep;
      rep.iter = iter;
      rep.jacobi_sweeps = sweeps;
      for (const Agent& ag : agents_) {
        rep.primal_residual = std::max(rep.primal_residual, ag.local_primal);
        rep.dual_residual = std::max(rep.dual_residual, ag.local_dual);
      }
      rep.price_mismatch = price_mismatch();
      if (opt_.record_trace) out.trace.push_back(rep);
      if (opt_.probe) opt_.probe(snapshot(iter));

      out.iterations = iter;
      out.primal_residual = rep.primal_residual;
      out.dual_residual = rep.dual_residual;
      out.price_mismatch = rep.price_mismatch;
      if (rep.primal_residual < prm_.eps_primal &&
          rep.dual_residual < prm_.eps_dual) {
        out.converged = true;
        break;
      }
    }
    out.jacobi_ok = jacobi_ok_;
    out.jacobi_worst_residual = jacobi_worst_;
    finalize(out);
    return out;
  }

 private:
  void build_agents() {
    agents_.resize(n_);
    const TradingGraph& g = step_.graph;
    for (int i = 0; i < n_; ++i) {
      Agent& ag = agents_[i];
      const DwellingStep& dw = step_.dwellings[i];
      ag.a = dw.a;
      ag.b_eff = dw.b_eff;
      ag.lo = dw.p_tr_lo;
      ag.hi = dw.p_tr_hi;
      if (!prm_.componentwise_sign) {
        ag.sc = SignConstraint::Free;
      } else if (dw.role == Role::Buyer) {
        ag.sc = SignConstraint::NonNegative;
      } else if (dw.role == Role::Seller) {
        ag.sc = SignConstraint::NonPositive;
      } else {
        ag.sc = SignConstraint::NonNegative;  // bounds are [0,0] anyway
      }
      ag.nbr = g.nbr[i];
      const int deg = ag.deg();
      ag.rev.resize(deg);
      ag.d.assign(deg, 0.0);
      for (auto* vec : {&ag.P, &ag.X, &ag.u, &ag.X_new, &ag.u_new, &ag.P_new,
                        &ag.lambda, &ag.v_out, &ag.v_in})
        vec->assign(deg, 0.0);
      ag.diag = deg + (prm_.rho + prm_.phi) / ag.a;
    }
    // Reverse indices and the undirected edge index.
    for (int i = 0; i < n_; ++i) {
      Agent& ag = agents_[i];
      for (int k = 0; k < ag.deg(); ++k) {
        const int j = ag.nbr[k];
        const auto& jn = agents_[j].nbr;
        ag.rev[k] =
            static_cast<int>(std::lower_bound(jn.begin(), jn.end(), i) -
                             jn.begin());
      }
    }
    edge_index_.clear();
    for (std::size_t e = 0; e < g.edge_list.size(); ++e) {
      const auto [i, j] = g.edge_list[e];
      const auto& in = agents_[i].nbr;
      const int ki =
          static_cast<int>(std::lower_bound(in.begin(), in.end(), j) - in.begin());
      edge_index_.push_back({i, j, ki, agents_[i].rev[ki]});
      const double d = step_.edge_surcharge.empty() ? 0.0 : step_.edge_surcharge[e];
      agents_[i].d[ki] = d;
      agents_[j].d[agents_[i].rev[ki]] = d;
    }
  }

  void run_phase(const std::function<void(int)>& fn) {
    if (gang_) {
      gang_->run(n_, fn);
    } else if (opt_.schedule_order) {
      for (int i : *opt_.schedule_order) fn(i);
    } else {
      for (int i = 0; i < n_; ++i) fn(i);
    }
  }

  // Phase 1: X and v staged from the iteration-k state only. The stale dual
  // variant also steps u here, off the same k-state residual.
  void local_updates(int i) {
    Agent& ag = agents_[i];
    ag.X_new = x_update(ag.P, ag.X, ag.u, prm_.rho, prm_.psi, ag.sc, ag.lo, ag.hi);
    ag.v_out = compute_v(ag.P, ag.X, ag.u, ag.d, ag.b_eff, prm_.rho, prm_.phi);
    if (prm_.dual_stale)
      for (int k = 0; k < ag.deg(); ++k)
        ag.u_new[k] = dual_step(ag.u[k], prm_.kappa, prm_.rho,
                                ag.P[k] - ag.X[k], prm_.dual_sign);
  }

  // Phase 2: pull neighbors' v, then form the totals right-hand side.
  void exchange_v(int i) {
    Agent& ag = agents_[i];
    double sum_in = 0.0, sum_out = 0.0;
    for (int k = 0; k < ag.deg(); ++k) {
      const int j = ag.nbr[k];
      ag.v_in[k] = agents_[j].v_out[ag.rev[k]];
      sum_in += ag.v_in[k];
      sum_out += ag.v_out[k];
      if (opt_.message_log)
        ag.outbox.push_back({round_, MsgPhase::V, j, i, ag.v_in[k]});
    }
    ag.rhs = sum_in - sum_out;
  }

  // Synchronous Jacobi sweeps on (L + Gamma) t = rhs, warm-started across
  // outer iterations. Returns the number of sweeps used.
  int jacobi() {
    int sweeps = 0;
    for (;;) {
      run_phase([this](int i) { agents_[i].t_pub = agents_[i].t; });
      run_phase([this](int i) { jacobi_pull(i); });
      flush_outboxes();
      ++round_;
      double worst = 0.0;
      for (const Agent& ag : agents_) worst = std::max(worst, ag.jac_res);
      if (worst < prm_.jacobi_tol) {
        jacobi_worst_ = std::max(jacobi_worst_, worst);
        return sweeps;
      }
      if (sweeps >= prm_.jacobi_max_sweeps) {
        jacobi_ok_ = false;
        jacobi_worst_ = std::max(jacobi_worst_, worst);
        return sweeps;
      }
      run_phase([this](int i) {
        Agent& ag = agents_[i];
        ag.t = (ag.t_in_sum + ag.rhs) / ag.diag;
      });
      ++sweeps;
    }
  }

  void jacobi_pull(int i) {
    Agent& ag = agents_[i];
    double s = 0.0;
    for (int k = 0; k < ag.deg(); ++k) {
      const int j = ag.nbr[k];
      const double tj = agents_[j].t_pub;
      s += tj;
      if (opt_.message_log)
        ag.outbox.push_back({round_, MsgPhase::Jacobi, j, i, tj});
    }
    ag.t_in_sum = s;
    ag.jac_res = std::abs(ag.diag * ag.t - s - ag.rhs);
  }

  // Phase 4: closed-form trade and price updates on each oriented edge.
  void edge_updates(int i) {
    Agent& ag = agents_[i];
    for (int k = 0; k < ag.deg(); ++k) {
      const int j = ag.nbr[k];
      const double vo = ag.v_out[k], vi = ag.v_in[k];
      const double ti = ag.t_pub, tj = agents_[j].t_pub;
      ag.P_new[k] = edge_p_update(vo, ti, vi, tj, prm_.rho, prm_.phi);
      ag.lambda[k] = edge_price(vo, ti, vi, tj);
    }
  }

  // Phase 5: adopt the staged iterate and measure residuals. The default
  // dual step consumes the freshly staged residual P^{k+1} - X^{k+1} (both
  // agent-local), which the convergence conditions cover; see dual_stale.
  void commit(int i) {
    Agent& ag = agents_[i];
    double pr = 0.0, du = 0.0;
    for (int k = 0; k < ag.deg(); ++k) {
      pr = std::max(pr, std::abs(ag.P_new[k] - ag.X_new[k]));
      du = std::max(du, std::abs(ag.X_new[k] - ag.X[k]));
      if (!prm_.dual_stale)
        ag.u_new[k] = dual_step(ag.u[k], prm_.kappa, prm_.rho,
                                ag.P_new[k] - ag.X_new[k], prm_.dual_sign);
    }
    ag.local_primal = pr;
    ag.local_dual = du;
    ag.P.swap(ag.P_new);
    ag.X.swap(ag.X_new);
    ag.u.swap(ag.u_new);
  }

  double price_mismatch() const {
    double worst = 0.0;
    for (const auto& e : edge_index_)
      worst = std::max(worst, std::abs(agents_[e.i].lambda[e.ki] -
                                       agents_[e.j].lambda[e.kj]));
    return worst;
  }

  IterationSnapshot snapshot(int iter) const {
    IterationSnapshot s;
    s.iter = iter;
    s.p_tr.resize(n_);
    for (int i = 0; i < n_; ++i) {
      double tot = 0.0;
      for (double p : agents_[i].P) tot += p;
      s.p_tr[i] = tot;
    }
    s.edge_p.reserve(edge_index_.size());
    s.edge_x.reserve(edge_index_.size());
    s.edge_lambda.reserve(edge_index_.size());
    s.edge_u.reserve(edge_index_.size());
    for (const auto& e : edge_index_) {
      s.edge_p.push_back({agents_[e.i].P[e.ki], agents_[e.j].P[e.kj]});
      s.edge_x.push_back({agents_[e.i].X[e.ki], agents_[e.j].X[e.kj]});
      s.edge_lambda.push_back(
          {agents_[e.i].lambda[e.ki], agents_[e.j].lambda[e.kj]});
      s.edge_u.push_back({agents_[e.i].u[e.ki], agents_[e.j].u[e.kj]});
    }
    return s;
  }

  void flush_outboxes() {
    if (!opt_.message_log) return;
    for (Agent& ag : agents_) {
      for (const Message& m : ag.outbox) opt_.message_log(m);
      ag.outbox.clear();
    }
  }

  void finalize(StepSolution& out) const {
    out.p_tr.assign(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double tot = 0.0;
      for (double p : agents_[i].P) tot += p;
      out.p_tr[i] = tot;
    }
    out.edges.clear();
    out.edges.reserve(edge_index_.size());
    for (const auto& e : edge_index_) {
      EdgeRecord r;
      r.i = e.i;
      r.j = e.j;
      r.p_ij = agents_[e.i].P[e.ki];
      r.lambda = agents_[e.i].lambda[e.ki];
      out.edges.push_back(r);
    }
  }

  struct EdgeIndex {
    int i, j, ki, kj;
  };

  const MarketStep& step_;
  const AdmmParams& prm_;
  const RunOptions& opt_;
  int n_;
  std::vector<Agent> agents_;
  std::vector<EdgeIndex> edge_index_;
  std::unique_ptr<Gang> gang_;
  int round_ = 0;
  bool jacobi_ok_ = true;
  double jacobi_worst_ = 0.0;
};

}  // namespace

StepSolution run_step(const MarketStep& step, const AdmmParams& p,
                      const RunOptions& opt) {
  auto bad = validate_params(p);
  if (!bad.empty()) {
    std::string msg = "admm params:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw ValidationError(msg);
  }
  for (const auto& d : step.dwellings) {
    if (!(d.a > 0.0)) throw ValidationError("admm: require a > 0");
    if (!(d.p_tr_lo <= d.p_tr_hi))
      throw ValidationError("admm: infeasible trade bounds");
  }
  if (opt.schedule_order &&
      static_cast<int>(opt.schedule_order->size()) != step.n())
    throw ValidationError("admm: schedule_order must permute all agents");
  Engine engine(step, p, opt);
  return engine.solve();
}

}  // namespace p2pchp

#include "matchlab/nsw.hpp"

#include "matchlab/lp.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace matchlab {

NotOptimal::NotOptimal(Index agent, Index item, double violation)
    : Error(ErrorKind::NotOptimal, "pair (" + std::to_string(agent) + "," + std::to_string(item) +
                                       ") violates the price conditions by " + std::to_string(violation)),
      agent_(agent),
      item_(item),
      violation_(violation) {}

NoConvergence::NoConvergence(Index iterations, double best_residual)
    : Error(ErrorKind::NoConvergence, "stopped after " + std::to_string(iterations) +
                                          " iterations with KKT residual " + std::to_string(best_residual)),
      iterations_(iterations),
      best_residual_(best_residual) {}

SizedMarket<double> unit_market(const Instance& inst, const FractionalAssignment& assignment,
                                const DisagreementPoint& offsets) {
  SizedMarket<double> market;
  market.values = inst.values;
  market.probs = assignment.probs;
  market.agent_size = VectorXd::Ones(inst.n_agents());
  market.row_budget = assignment.row_budget.size() == 0 ? VectorXd::Ones(inst.n_agents()) : assignment.row_budget;
  market.supplies = inst.supplies.size() == 0 ? VectorXd::Ones(inst.n_items()) : inst.supplies;
  market.offsets = offsets.size() == 0 ? VectorXd::Zero(inst.n_agents()) : offsets;
  return market;
}

KktReport<double> kkt_report(const Instance& inst, const FractionalAssignment& assignment, const Duals& duals,
                             const DisagreementPoint& offsets, const std::vector<Index>& agents) {
  return kkt_report(unit_market(inst, assignment, offsets), duals, agents, assignment.tolerance);
}

double kkt_check(const Instance& inst, const FractionalAssignment& assignment, const Duals& duals,
                 const DisagreementPoint& offsets, const std::vector<Index>& agents) {
  return kkt_report(inst, assignment, duals, offsets, agents).residual;
}

double kkt_check(const Instance& inst, const FractionalAssignment& assignment, const Duals& duals,
                 const DisagreementPoint& offsets) {
  return kkt_check(inst, assignment, duals, offsets, all_agents(inst));
}

MatrixXd renormalize(const Instance& inst, const FractionalAssignment& assignment, const DisagreementPoint& offsets,
                     const std::vector<Index>& agents) {
  const VectorXd o = offsets.size() == 0 ? VectorXd::Zero(inst.n_agents()) : offsets;
  return renormalize(inst.values, assignment.probs, o, agents);
}

Duals recover_duals(const Instance& inst, const FractionalAssignment& assignment, const DisagreementPoint& offsets,
                    const std::vector<Index>& agents, double tol) {
  const auto market = unit_market(inst, assignment, offsets);
  const MatrixXd vhat = renormalize(market.values, market.probs, market.offsets, agents);
  const Index m = inst.n_items();
  const Index k = static_cast<Index>(agents.size());
  // variables: t (m), q (k), delta; minimize delta
  const Index nv = m + k + 1;
  const Index delta = m + k;
  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  auto add = [&](VectorXd row, double b) {
    rows.push_back(std::move(row));
    rhs.push_back(b);
  };
  for (Index a = 0; a < k; ++a) {
    const Index i = agents[static_cast<std::size_t>(a)];
    for (Index j = 0; j < m; ++j) {
      VectorXd row = VectorXd::Zero(nv);
      row(j) = -1.0;
      row(m + a) = -1.0;
      row(delta) = -1.0;
      add(row, -vhat(i, j));  // vhat - t - q <= delta
      if (market.probs(i, j) > assignment.tolerance) {
        row(j) = 1.0;
        row(m + a) = 1.0;
        add(row, vhat(i, j));  // t + q - vhat <= delta
      }
    }
    const double slack = market.row_budget(i) - market.probs.row(i).sum();
    if (slack > 0.0) {
      VectorXd row = VectorXd::Zero(nv);
      row(m + a) = slack;
      row(delta) = -1.0;
      add(row, 0.0);
    }
  }
  const VectorXd col_use = market.probs.colwise().sum().transpose();
  for (Index j = 0; j < m; ++j) {
    const double slack = market.supplies(j) - col_use(j);
    if (slack > 0.0) {
      VectorXd row = VectorXd::Zero(nv);
      row(j) = slack;
      row(delta) = -1.0;
      add(row, 0.0);
    }
  }

  lp::Problem prob;
  prob.A.resize(static_cast<Index>(rows.size()), nv);
  prob.b.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    prob.A.row(static_cast<Index>(r)) = rows[r].transpose();
    prob.b(static_cast<Index>(r)) = rhs[r];
  }
  prob.sense.assign(rows.size(), lp::Sense::LessEqual);
  prob.c = VectorXd::Zero(nv);
  prob.c(delta) = -1.0;
  const auto res = lp::maximize(prob);
  if (res.status != lp::Status::Optimal)
    throw Error(ErrorKind::NoConvergence, "dual recovery linear program did not solve");

  Duals duals;
  duals.item_prices = res.x.head(m);
  duals.agent_prices = VectorXd::Zero(inst.n_agents());
  for (Index a = 0; a < k; ++a) duals.agent_prices(agents[static_cast<std::size_t>(a)]) = res.x(m + a);
  const auto rep = kkt_report(market, duals, agents, assignment.tolerance);
  if (rep.residual > tol) throw NotOptimal(rep.worst_agent, rep.worst_item, rep.residual);
  return duals;
}

namespace {

constexpr double kSupplyZero = 1e-12;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// The program restricted to agents that take part in the log objective (first
// n_pos rows) plus jointly degenerate agents held at zero surplus, over the
// items with positive supply. Rows are scaled so that each row maximum is one.
struct Reduced {
  MatrixXd V;
  VectorXd o;
  VectorXd b;
  VectorXd c;
  Index n_pos = 0;
  std::vector<Index> rows;
  std::vector<Index> cols;
};

struct Candidate {
  MatrixXd p;
  VectorXd q;
  VectorXd t;
  double residual = std::numeric_limits<double>::infinity();
};

double reduced_residual(const Reduced& red, const Candidate& cand, double support_tol) {
  SizedMarket<double> market;
  market.values = red.V.topRows(red.n_pos);
  market.probs = cand.p.topRows(red.n_pos);
  market.agent_size = VectorXd::Ones(red.n_pos);
  market.row_budget = red.b.head(red.n_pos);
  // pinned rows use part of the supply
  market.supplies = red.c - cand.p.bottomRows(red.V.rows() - red.n_pos).colwise().sum().transpose();
  market.offsets = red.o.head(red.n_pos);
  BasicDuals<double> duals{cand.t, cand.q.head(red.n_pos)};
  std::vector<Index> checked(static_cast<std::size_t>(red.n_pos));
  std::iota(checked.begin(), checked.end(), Index{0});
  try {
    return kkt_report(market, duals, checked, support_tol).residual;
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Log-barrier method on
//   minimize -sum_{i<n_pos} log s_i
//   s.t. row_i(p) + r_i = b_i, col_j(p) + w_j = c_j,
//        V_i p_i - s_i = o_i (i < n_pos), V_k p_k = o_k (pinned k), p, r, w, s >= 0
// with x = [p (row-major), r, w, s]. Keeping the surpluses as variables makes
// the Hessian diagonal, so the Schur complement A H^-1 A' is a sum of
// positive terms and stays accurate at large barrier weights.
class Barrier {
 public:
  explicit Barrier(const Reduced& red)
      : red_(red), R_(red.V.rows()), J_(red.V.cols()), P_(red.n_pos), N_(R_ * J_ + R_ + J_ + P_),
        E_(R_ + J_ + R_) {}

  Index dim() const { return N_; }
  Index n_equalities() const { return E_; }
  Index barrier_terms() const { return N_; }
  Index r_offset() const { return R_ * J_; }
  Index w_offset() const { return R_ * J_ + R_; }
  Index s_offset() const { return R_ * J_ + R_ + J_; }

  double surplus(const VectorXd& x, Index i) const {
    return red_.V.row(i).dot(x.segment(i * J_, J_).transpose()) - red_.o(i);
  }

  double objective(const VectorXd& x) const {
    double f = 0.0;
    for (Index i = 0; i < P_; ++i) f += std::log(surplus(x, i));
    return f;
  }

  VectorXd primal_residual(const VectorXd& x) const {
    VectorXd res(E_);
    const Eigen::Map<const RowMatrix> p(x.data(), R_, J_);
    res.head(R_) = p.rowwise().sum() + x.segment(r_offset(), R_) - red_.b;
    res.segment(R_, J_) = p.colwise().sum().transpose() + x.segment(w_offset(), J_) - red_.c;
    for (Index i = 0; i < R_; ++i) {
      res(R_ + J_ + i) = surplus(x, i);
      if (i < P_) res(R_ + J_ + i) -= x(s_offset() + i);
    }
    return res;
  }

  VectorXd apply_At(const VectorXd& nu) const {
    VectorXd out(N_);
    for (Index i = 0; i < R_; ++i)
      for (Index j = 0; j < J_; ++j) out(i * J_ + j) = nu(i) + nu(R_ + j) + red_.V(i, j) * nu(R_ + J_ + i);
    out.segment(r_offset(), R_) = nu.head(R_);
    out.segment(w_offset(), J_) = nu.segment(R_, J_);
    out.segment(s_offset(), P_) = -nu.segment(R_ + J_, P_);
    return out;
  }

  VectorXd apply_A(const VectorXd& y) const {
    VectorXd out = VectorXd::Zero(E_);
    for (Index i = 0; i < R_; ++i)
      for (Index j = 0; j < J_; ++j) {
        const double v = y(i * J_ + j);
        out(i) += v;
        out(R_ + j) += v;
        out(R_ + J_ + i) += red_.V(i, j) * v;
      }
    out.head(R_) += y.segment(r_offset(), R_);
    out.segment(R_, J_) += y.segment(w_offset(), J_);
    out.segment(R_ + J_, P_) -= y.segment(s_offset(), P_);
    return out;
  }

  // Inverse Hessian diagonal at (x, t).
  void prepare(const VectorXd& x, double t) {
    d_ = x.cwiseProduct(x);
    d_.segment(s_offset(), P_) /= t;
    t_ = t;
  }

  VectorXd gradient(const VectorXd& x) const {
    VectorXd g = -x.cwiseInverse();
    g.segment(s_offset(), P_) *= t_;
    return g;
  }

  MatrixXd schur() const {
    MatrixXd M = MatrixXd::Zero(E_, E_);
    for (Index i = 0; i < R_; ++i) {
      const Index k = R_ + J_ + i;
      for (Index j = 0; j < J_; ++j) {
        const double d = d_(i * J_ + j);
        const double v = red_.V(i, j);
        M(i, i) += d;
        M(R_ + j, R_ + j) += d;
        M(R_ + j, i) += d;
        M(k, k) += v * v * d;
        M(k, i) += v * d;
        M(k, R_ + j) += v * d;
      }
      M(i, i) += d_(r_offset() + i);
      if (i < P_) M(k, k) += d_(s_offset() + i);
    }
    for (Index j = 0; j < J_; ++j) M(R_ + j, R_ + j) += d_(w_offset() + j);
    return M.selfadjointView<Eigen::Lower>();
  }

  // Newton step for the residual (rd, rp).
  std::pair<VectorXd, VectorXd> step(const VectorXd& rd, const VectorXd& rp) const {
    const MatrixXd M = schur();
    const VectorXd rhs = rp - apply_A(d_.cwiseProduct(rd));
    const auto ldlt = M.ldlt();
    VectorXd dnu = ldlt.solve(rhs);
    dnu += ldlt.solve(rhs - M * dnu);
    const VectorXd dx = -d_.cwiseProduct(rd + apply_At(dnu));
    return {dx, dnu};
  }

  double barrier_value(const VectorXd& x) const {
    return -(t_ - 1.0) * x.segment(s_offset(), P_).array().log().sum() - x.array().log().sum();
  }

  double hessian_norm2(const VectorXd& y) const { return y.cwiseProduct(y).cwiseQuotient(d_).sum(); }

  // Largest step keeping every variable strictly positive.
  double max_step(const VectorXd& x, const VectorXd& dx) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < N_; ++k)
      if (dx(k) < 0.0) alpha = std::min(alpha, -x(k) / dx(k));
    return alpha;
  }

  double feasibility_scale() const { return 1.0 + std::max(red_.b.maxCoeff(), red_.c.maxCoeff()); }

 private:
  const Reduced& red_;
  Index R_, J_, P_, N_, E_;
  VectorXd d_;
  double t_ = 1.0;
};

// Active-set guess: which entries are positive and which rows and columns are full.
struct ActiveSet {
  std::vector<std::vector<bool>> support;
  std::vector<bool> full_row;
  std::vector<bool> full_col;
};

// Solve the stationarity system on a fixed active set by Gauss-Newton.
// Returns the candidate together with the offending entries when some
// primal or dual value came out negative.
struct PolishStep {
  Candidate cand;
  bool valid = false;
  std::vector<std::pair<Index, Index>> negative_entries;
  std::vector<Index> negative_rows;
  std::vector<Index> negative_cols;
};

PolishStep polish_on(const Reduced& red, const ActiveSet& act, const MatrixXd& p0, const VectorXd& q0,
                     const VectorXd& t0) {
  const Index R = red.V.rows();
  const Index J = red.V.cols();
  std::vector<std::pair<Index, Index>> support;
  std::vector<std::vector<Index>> row_support(static_cast<std::size_t>(R));
  for (Index i = 0; i < R; ++i)
    for (Index j = 0; j < J; ++j)
      if (act.support[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
        row_support[static_cast<std::size_t>(i)].push_back(static_cast<Index>(support.size()));
        support.emplace_back(i, j);
      }
  const Index S = static_cast<Index>(support.size());
  std::vector<Index> row_slot(static_cast<std::size_t>(R), -1), col_slot(static_cast<std::size_t>(J), -1);
  Index K = S;
  for (Index i = 0; i < R; ++i)
    if (act.full_row[static_cast<std::size_t>(i)]) row_slot[static_cast<std::size_t>(i)] = K++;
  for (Index j = 0; j < J; ++j)
    if (act.full_col[static_cast<std::size_t>(j)]) col_slot[static_cast<std::size_t>(j)] = K++;

  VectorXd y(K);
  for (Index k = 0; k < S; ++k)
    y(k) = p0(support[static_cast<std::size_t>(k)].first, support[static_cast<std::size_t>(k)].second);
  for (Index i = 0; i < R; ++i)
    if (row_slot[static_cast<std::size_t>(i)] >= 0) y(row_slot[static_cast<std::size_t>(i)]) = q0(i);
  for (Index j = 0; j < J; ++j)
    if (col_slot[static_cast<std::size_t>(j)] >= 0) y(col_slot[static_cast<std::size_t>(j)]) = t0(j);

  auto surpluses = [&](const VectorXd& yy) {
    VectorXd s = -red.o;
    for (Index k = 0; k < S; ++k) {
      const auto [i, j] = support[static_cast<std::size_t>(k)];
      s(i) += red.V(i, j) * yy(k);
    }
    return s;
  };
  auto residual = [&](const VectorXd& yy, const VectorXd& s) {
    VectorXd F = VectorXd::Zero(K);
    for (Index k = 0; k < S; ++k) {
      const auto [i, j] = support[static_cast<std::size_t>(k)];
      const Index rs = row_slot[static_cast<std::size_t>(i)];
      const Index cs = col_slot[static_cast<std::size_t>(j)];
      double f = red.V(i, j) / s(i);
      if (rs >= 0) {
        f -= yy(rs);
        F(rs) += yy(k);
      }
      if (cs >= 0) {
        f -= yy(cs);
        F(cs) += yy(k);
      }
      F(k) = f;
    }
    for (Index i = 0; i < R; ++i)
      if (row_slot[static_cast<std::size_t>(i)] >= 0) F(row_slot[static_cast<std::size_t>(i)]) -= red.b(i);
    for (Index j = 0; j < J; ++j)
      if (col_slot[static_cast<std::size_t>(j)] >= 0) F(col_slot[static_cast<std::size_t>(j)]) -= red.c(j);
    return F;
  };

  PolishStep out;
  VectorXd s = surpluses(y);
  if ((s.array() <= 0.0).any()) return out;
  VectorXd F = residual(y, s);
  for (int it = 0; it < 50 && F.lpNorm<Eigen::Infinity>() > 1e-15; ++it) {
    MatrixXd Jac = MatrixXd::Zero(K, K);
    for (Index k = 0; k < S; ++k) {
      const auto [i, j] = support[static_cast<std::size_t>(k)];
      for (Index l : row_support[static_cast<std::size_t>(i)]) {
        const Index jl = support[static_cast<std::size_t>(l)].second;
        Jac(k, l) = -red.V(i, j) * red.V(i, jl) / (s(i) * s(i));
      }
      if (const Index rs = row_slot[static_cast<std::size_t>(i)]; rs >= 0) {
        Jac(k, rs) = -1.0;
        Jac(rs, k) = 1.0;
      }
      if (const Index cs = col_slot[static_cast<std::size_t>(j)]; cs >= 0) {
        Jac(k, cs) = -1.0;
        Jac(cs, k) = 1.0;
      }
    }
    const VectorXd delta = -Jac.completeOrthogonalDecomposition().solve(F);
    double alpha = 1.0;
    VectorXd ny, ns, nF;
    for (; alpha > 1e-8; alpha *= 0.5) {
      ny = y + alpha * delta;
      ns = surpluses(ny);
      if ((ns.array() <= 0.0).any()) continue;
      nF = residual(ny, ns);
      if (nF.lpNorm<Eigen::Infinity>() < F.lpNorm<Eigen::Infinity>()) break;
    }
    if (alpha <= 1e-8) break;
    y = ny;
    s = ns;
    F = nF;
  }

  constexpr double kNegative = -1e-13;
  out.cand.p = MatrixXd::Zero(R, J);
  out.cand.q = VectorXd::Zero(R);
  out.cand.t = VectorXd::Zero(J);
  for (Index k = 0; k < S; ++k) {
    const auto [i, j] = support[static_cast<std::size_t>(k)];
    if (y(k) < kNegative) out.negative_entries.emplace_back(i, j);
    out.cand.p(i, j) = std::max(0.0, y(k));
  }
  for (Index i = 0; i < R; ++i)
    if (const Index rs = row_slot[static_cast<std::size_t>(i)]; rs >= 0) {
      if (y(rs) < kNegative) out.negative_rows.push_back(i);
      out.cand.q(i) = std::max(0.0, y(rs));
    }
  for (Index j = 0; j < J; ++j)
    if (const Index cs = col_slot[static_cast<std::size_t>(j)]; cs >= 0) {
      if (y(cs) < kNegative) out.negative_cols.push_back(j);
      out.cand.t(j) = std::max(0.0, y(cs));
    }
  out.valid = true;
  return out;
}

// Guess the active set from an interior-point iterate (an entry counts as
// positive once it exceeds its barrier dual) and refine it by dropping
// whatever comes out negative.
std::optional<Candidate> polish(const Reduced& red, const MatrixXd& p0, const VectorXd& r0, const VectorXd& w0,
                                double t, double support_tol) {
  const Index R = red.V.rows();
  const Index J = red.V.cols();
  if (R != red.n_pos) return std::nullopt;
  const double thr = 1.0 / std::sqrt(t);
  ActiveSet act;
  act.support.assign(static_cast<std::size_t>(R), std::vector<bool>(static_cast<std::size_t>(J), false));
  act.full_row.assign(static_cast<std::size_t>(R), false);
  act.full_col.assign(static_cast<std::size_t>(J), false);
  for (Index i = 0; i < R; ++i)
    for (Index j = 0; j < J; ++j) act.support[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = p0(i, j) > thr;
  for (Index i = 0; i < R; ++i) act.full_row[static_cast<std::size_t>(i)] = r0(i) < thr;
  for (Index j = 0; j < J; ++j) act.full_col[static_cast<std::size_t>(j)] = w0(j) < thr;
  const VectorXd q0 = r0.cwiseInverse() / t;
  const VectorXd t0 = w0.cwiseInverse() / t;

  for (Index round = 0; round <= R * J + R + J; ++round) {
    PolishStep step = polish_on(red, act, p0, q0, t0);
    if (!step.valid) return std::nullopt;
    if (step.negative_entries.empty() && step.negative_rows.empty() && step.negative_cols.empty()) {
      step.cand.residual = reduced_residual(red, step.cand, support_tol);
      return step.cand;
    }
    for (const auto& [i, j] : step.negative_entries)
      act.support[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = false;
    for (Index i : step.negative_rows) act.full_row[static_cast<std::size_t>(i)] = false;
    for (Index j : step.negative_cols) act.full_col[static_cast<std::size_t>(j)] = false;
  }
  return std::nullopt;
}

struct BarrierOutcome {
  Candidate best;
  Index iterations = 0;
};

BarrierOutcome run_barrier(const Reduced& red, const MatrixXd& start, const SolveOptions& opts) {
  Barrier bar(red);
  const Index R = red.V.rows();
  const Index J = red.V.cols();
  const Index N = bar.dim();

  VectorXd x(N);
  {
    Eigen::Map<RowMatrix> p(x.data(), R, J);
    p = start;
    x.segment(bar.r_offset(), R) = (red.b - start.rowwise().sum()).cwiseMax(1e-12);
    x.segment(bar.w_offset(), J) = (red.c - start.colwise().sum().transpose()).cwiseMax(1e-12);
    for (Index i = 0; i < red.n_pos; ++i) x(bar.s_offset() + i) = std::max(bar.surplus(x, i), 1e-12);
  }
  VectorXd nu = VectorXd::Zero(bar.n_equalities());

  BarrierOutcome out;
  const double mu = 20.0;
  const double feas_tol = 1e-9 * bar.feasibility_scale();
  const double m_terms = static_cast<double>(bar.barrier_terms());
  double t = 1.0;
  const double target = opts.tol * 0.1;

  auto ipm_candidate = [&](double tt) {
    Candidate cand;
    const Eigen::Map<const RowMatrix> p(x.data(), R, J);
    cand.p = p;
    cand.q = x.segment(bar.r_offset(), R).cwiseInverse() / tt;
    cand.t = x.segment(bar.w_offset(), J).cwiseInverse() / tt;
    for (Index i = red.n_pos; i < R; ++i) cand.q(i) = 0.0;
    cand.residual = reduced_residual(red, cand, opts.tol);
    return cand;
  };

  for (int outer = 0; outer < 60; ++outer) {
    for (int inner = 0; inner < 50; ++inner) {
      if (out.iterations >= opts.max_iterations) break;
      ++out.iterations;
      bar.prepare(x, t);
      const VectorXd rd = bar.gradient(x) + bar.apply_At(nu);
      const VectorXd rp = bar.primal_residual(x);
      const auto [dx, dnu] = bar.step(rd, rp);
      const bool feasible = rp.lpNorm<Eigen::Infinity>() <= feas_tol;
      const double lambda2 = bar.hessian_norm2(dx);
      if (!std::isfinite(lambda2)) break;
      if (feasible && lambda2 <= 1e-9) break;
      const double amax = bar.max_step(x, dx);
      double alpha = std::min(1.0, 0.99 * amax);
      if (feasible && lambda2 > 0.1) {
        const double phi0 = bar.barrier_value(x);
        for (; alpha > 1e-12; alpha *= 0.5)
          if (bar.barrier_value(x + alpha * dx) <= phi0 - 0.01 * alpha * lambda2) break;
      } else if (!feasible) {
        // residual-norm backtracking for the infeasible start
        const double r0 = std::sqrt(rd.squaredNorm() + rp.squaredNorm());
        for (; alpha > 1e-12; alpha *= 0.5) {
          const VectorXd nx = x + alpha * dx;
          bar.prepare(nx, t);
          const double r1 = std::sqrt((bar.gradient(nx) + bar.apply_At(nu + alpha * dnu)).squaredNorm() +
                                      bar.primal_residual(nx).squaredNorm());
          if (r1 <= (1.0 - 0.01 * alpha) * r0) break;
        }
      }
      x += alpha * dx;
      nu += alpha * dnu;
      if (alpha < 1e-12) break;
    }
    const double gap = m_terms / t;
    if (opts.trace) opts.trace->push_back({out.iterations, bar.objective(x), gap});

    Candidate cand = ipm_candidate(t);
    if (cand.residual < out.best.residual) out.best = cand;
    if (gap <= 1e-4) {
      const Eigen::Map<const RowMatrix> p(x.data(), R, J);
      if (auto pol = polish(red, p, x.segment(bar.r_offset(), R), x.segment(bar.w_offset(), J), t, opts.tol)) {
        if (pol->residual <= target) {
          out.best = *pol;
          break;
        }
        if (pol->residual < out.best.residual) out.best = *pol;
      }
    }
    if (out.best.residual <= target && gap <= 1e-9) break;
    if (gap <= 1e-13 || out.iterations >= opts.max_iterations) break;
    t *= mu;
    nu *= mu;
  }
  return out;
}

// Sum of surpluses each agent can be guaranteed simultaneously; see solve().
lp::Problem surplus_lp(const Reduced& red, const std::vector<Index>& objective_rows, bool common_floor) {
  const Index R = red.V.rows();
  const Index J = red.V.cols();
  const Index K = static_cast<Index>(objective_rows.size());
  const Index nv = R * J + (common_floor ? 1 : K);
  std::vector<Index> slot(static_cast<std::size_t>(R), -1);
  for (Index k = 0; k < K; ++k) slot[static_cast<std::size_t>(objective_rows[static_cast<std::size_t>(k)])] = k;

  lp::Problem prob;
  const Index rows = R + J + R + (common_floor ? 1 : K);
  prob.A = MatrixXd::Zero(rows, nv);
  prob.b = VectorXd::Zero(rows);
  prob.sense.assign(static_cast<std::size_t>(rows), lp::Sense::LessEqual);
  prob.c = VectorXd::Zero(nv);
  Index r = 0;
  for (Index i = 0; i < R; ++i, ++r) {
    prob.A.block(r, i * J, 1, J).setOnes();
    prob.b(r) = red.b(i);
  }
  for (Index j = 0; j < J; ++j, ++r) {
    for (Index i = 0; i < R; ++i) prob.A(r, i * J + j) = 1.0;
    prob.b(r) = red.c(j);
  }
  // floor_i - s_i <= 0, i.e. V_i p - floor_i >= o_i
  for (Index i = 0; i < R; ++i, ++r) {
    prob.A.block(r, i * J, 1, J) = red.V.row(i);
    const Index k = slot[static_cast<std::size_t>(i)];
    if (k >= 0) prob.A(r, R * J + (common_floor ? 0 : k)) = -1.0;
    prob.b(r) = red.o(i);
    prob.sense[static_cast<std::size_t>(r)] = lp::Sense::GreaterEqual;
  }
  for (Index k = 0; k < (common_floor ? 1 : K); ++k, ++r) {
    prob.A(r, R * J + k) = 1.0;
    prob.b(r) = 1.0;
    prob.c(R * J + k) = 1.0;
  }
  return prob;
}

MatrixXd lp_point(const lp::Result& res, Index R, Index J) {
  MatrixXd p(R, J);
  for (Index i = 0; i < R; ++i)
    for (Index j = 0; j < J; ++j) p(i, j) = res.x(i * J + j);
  return p;
}

// Give each listed row the pro-rata share b_i * residual_j / max(total residual, total demand).
void pro_rata_fill(MatrixXd& probs, const VectorXd& supplies, const std::vector<Index>& rows_to_fill,
                   const VectorXd& demand) {
  if (rows_to_fill.empty()) return;
  const VectorXd residual = (supplies - probs.colwise().sum().transpose()).cwiseMax(0.0);
  const double total = residual.sum();
  double need = 0.0;
  for (Index i : rows_to_fill) need += demand(i);
  const double denom = std::max(total, need);
  if (denom <= 0.0) return;
  for (Index i : rows_to_fill) probs.row(i) += (demand(i) / denom) * residual.transpose();
}

}  // namespace

NswSolution solve(const NswProblem& problem, const SolveOptions& options) {
  const Instance& inst = problem.instance;
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  if (!(options.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  const VectorXd supplies = inst.supplies.size() == 0 ? VectorXd::Ones(m) : inst.supplies;
  if (supplies.size() != m) throw Error(ErrorKind::DimensionMismatch, "supplies length differs from item count");
  const VectorXd offsets = problem.offsets.size() == 0 ? VectorXd::Zero(n) : problem.offsets;
  const VectorXd budget = problem.row_budget.size() == 0 ? VectorXd::Ones(n) : problem.row_budget;
  if (offsets.size() != n || budget.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "offsets and row budgets need one entry per agent");

  std::vector<Index> active = problem.active_agents;
  if (active.empty()) active = all_agents(inst);
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  for (Index i : active) {
    if (i < 0 || i >= n) throw Error(ErrorKind::InvalidArgument, "active agent index out of range");
    if (!(budget(i) > 0.0 && budget(i) <= 1.0)) throw Error(ErrorKind::InvalidArgument, "row budget outside (0,1]");
    if (!std::isfinite(offsets(i))) throw Error(ErrorKind::NonFiniteValue, "offset " + std::to_string(i));
  }

  std::vector<Index> cols;
  for (Index j = 0; j < m; ++j)
    if (supplies(j) > kSupplyZero) cols.push_back(j);
  const Index J = static_cast<Index>(cols.size());
  const double total_supply = supplies.sum();

  // Classify agents: flat rows (constant over the supplied items) have a
  // surplus that depends only on how much they receive, so when even a full
  // row cannot beat the offset they are degenerate.
  std::vector<Index> flat_degenerate, candidates;
  VectorXd row_scale = VectorXd::Ones(n);
  for (Index i : active) {
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (Index j : cols) {
      hi = std::max(hi, inst.values(i, j));
      lo = std::min(lo, inst.values(i, j));
    }
    if (J == 0) lo = 0.0;
    const double scale = hi + std::abs(offsets(i));
    if (hi - lo <= 1e-12 * hi || hi == 0.0) {
      const double best = hi * std::min(budget(i), total_supply) - offsets(i);
      if (best < -1e-10 * std::max(scale, 1e-300))
        throw Error(ErrorKind::Infeasible, "agent " + std::to_string(i) + " cannot reach its offset");
      if (best <= 1e-10 * scale) {
        flat_degenerate.push_back(i);
        continue;
      }
    }
    row_scale(i) = hi;
    candidates.push_back(i);
  }

  Reduced red;
  red.cols = cols;
  red.c.resize(J);
  for (Index j = 0; j < J; ++j) red.c(j) = supplies(cols[static_cast<std::size_t>(j)]);

  auto build_rows = [&](const std::vector<Index>& rows, Index n_pos) {
    red.rows = rows;
    red.n_pos = n_pos;
    const Index R = static_cast<Index>(rows.size());
    red.V.resize(R, J);
    red.o.resize(R);
    red.b.resize(R);
    for (Index r = 0; r < R; ++r) {
      const Index i = rows[static_cast<std::size_t>(r)];
      for (Index j = 0; j < J; ++j) red.V(r, j) = inst.values(i, cols[static_cast<std::size_t>(j)]) / row_scale(i);
      red.o(r) = offsets(i) / row_scale(i);
      red.b(r) = budget(i);
    }
  };

  std::vector<Index> positive, pinned;
  MatrixXd start;
  if (!candidates.empty()) {
    build_rows(candidates, static_cast<Index>(candidates.size()));
    const Index R = static_cast<Index>(candidates.size());
    bool zero_offsets = true;
    for (Index r = 0; r < R; ++r) zero_offsets = zero_offsets && red.o(r) <= 0.0;
    if (zero_offsets) {
      // Everyone reaches a positive surplus by sharing a favourite item.
      start = MatrixXd::Zero(R, J);
      std::vector<Index> fav(static_cast<std::size_t>(R));
      VectorXd count = VectorXd::Zero(J);
      for (Index r = 0; r < R; ++r) {
        red.V.row(r).maxCoeff(&fav[static_cast<std::size_t>(r)]);
        count(fav[static_cast<std::size_t>(r)]) += 1.0;
      }
      for (Index r = 0; r < R; ++r) {
        const Index j = fav[static_cast<std::size_t>(r)];
        start(r, j) = std::min(red.b(r), red.c(j) / count(j));
      }
      positive = candidates;
    } else {
      std::vector<Index> all_rows(static_cast<std::size_t>(R));
      std::iota(all_rows.begin(), all_rows.end(), Index{0});
      const auto res = lp::maximize(surplus_lp(red, all_rows, true));
      if (res.status == lp::Status::Infeasible)
        throw Error(ErrorKind::Infeasible, "the offsets cannot all be met at once");
      if (res.status != lp::Status::Optimal) throw Error(ErrorKind::NoConvergence, "feasibility program failed");
      if (res.x(R * J) > 1e-9) {
        start = lp_point(res, R, J);
        positive = candidates;
      } else {
        // Peel off agents that can be made strictly better off while all stay
        // at or above their offsets; average the witnesses.
        std::vector<Index> undecided = all_rows;
        std::vector<MatrixXd> points{lp_point(res, R, J)};
        std::vector<bool> is_pos(static_cast<std::size_t>(R), false);
        while (!undecided.empty()) {
          const auto step = lp::maximize(surplus_lp(red, undecided, false));
          if (step.status != lp::Status::Optimal) throw Error(ErrorKind::NoConvergence, "feasibility program failed");
          std::vector<Index> next;
          bool progress = false;
          for (std::size_t k = 0; k < undecided.size(); ++k) {
            if (step.x(R * J + static_cast<Index>(k)) > 1e-9) {
              is_pos[static_cast<std::size_t>(undecided[k])] = true;
              progress = true;
            } else {
              next.push_back(undecided[k]);
            }
          }
          if (!progress) break;
          points.push_back(lp_point(step, R, J));
          undecided = next;
        }
        MatrixXd avg = MatrixXd::Zero(R, J);
        for (const auto& pt : points) avg += pt;
        avg /= static_cast<double>(points.size());
        std::vector<Index> order;
        for (Index r = 0; r < R; ++r)
          if (is_pos[static_cast<std::size_t>(r)]) {
            positive.push_back(candidates[static_cast<std::size_t>(r)]);
            order.push_back(r);
          }
        for (Index r = 0; r < R; ++r)
          if (!is_pos[static_cast<std::size_t>(r)]) {
            pinned.push_back(candidates[static_cast<std::size_t>(r)]);
            order.push_back(r);
          }
        start.resize(R, J);
        for (Index k = 0; k < R; ++k) start.row(k) = avg.row(order[static_cast<std::size_t>(k)]);
      }
    }
  }

  NswSolution sol;
  sol.active_agents = active;
  sol.certified_agents = positive;
  sol.degenerate_agents = flat_degenerate;
  sol.degenerate_agents.insert(sol.degenerate_agents.end(), pinned.begin(), pinned.end());
  std::sort(sol.degenerate_agents.begin(), sol.degenerate_agents.end());

  MatrixXd probs = MatrixXd::Zero(n, m);
  VectorXd item_prices = VectorXd::Zero(m);
  VectorXd agent_prices = VectorXd::Zero(n);

  std::vector<Index> rows = positive;
  rows.insert(rows.end(), pinned.begin(), pinned.end());
  if (!positive.empty()) {
    build_rows(rows, static_cast<Index>(positive.size()));
    const Index R = static_cast<Index>(rows.size());
    // interior point mixed toward the max-surplus start
    MatrixXd interior(R, J);
    for (Index r = 0; r < R; ++r)
      for (Index j = 0; j < J; ++j)
        interior(r, j) = 0.5 * std::min(red.b(r) / static_cast<double>(J), red.c(j) / static_cast<double>(R));
    double theta = 0.5;
    MatrixXd mix;
    for (int k = 0; k < 60; ++k) {
      mix = theta * start + (1.0 - theta) * interior;
      bool ok = true;
      for (Index r = 0; r < red.n_pos; ++r) {
        const double s_mix = red.V.row(r).dot(mix.row(r)) - red.o(r);
        const double s_lp = red.V.row(r).dot(start.row(r)) - red.o(r);
        ok = ok && s_mix >= 0.5 * theta * s_lp;
      }
      if (ok) break;
      theta = 0.5 * (1.0 + theta);
    }
    const auto outcome = run_barrier(red, mix, options);
    sol.iterations = outcome.iterations;
    const Candidate& best = outcome.best;
    for (Index r = 0; r < R; ++r)
      for (Index j = 0; j < J; ++j) probs(rows[static_cast<std::size_t>(r)], cols[static_cast<std::size_t>(j)]) = best.p(r, j);
    for (Index j = 0; j < J; ++j) item_prices(cols[static_cast<std::size_t>(j)]) = best.t(j);
    // prices live on the scaled rows; the certificate renormalizes anyway
    for (Index r = 0; r < red.n_pos; ++r) agent_prices(rows[static_cast<std::size_t>(r)]) = best.q(r);
  } else if (!pinned.empty()) {
    // Nobody gains: the pro-rata rule applies to everyone when it keeps each
    // agent at its offset, otherwise the jointly degenerate agents keep the
    // feasibility witness.
    MatrixXd trial = MatrixXd::Zero(n, m);
    pro_rata_fill(trial, supplies, sol.degenerate_agents, budget);
    bool ok = true;
    for (Index i : pinned) {
      const double s = inst.values.row(i).dot(trial.row(i)) - offsets(i);
      ok = ok && s >= -1e-10 * (row_scale(i) + std::abs(offsets(i)));
    }
    if (ok) {
      probs = trial;
    } else {
      for (std::size_t r = 0; r < pinned.size(); ++r)
        for (Index j = 0; j < J; ++j)
          probs(pinned[r], cols[static_cast<std::size_t>(j)]) = start(static_cast<Index>(r), j);
    }
  }

  pro_rata_fill(probs, supplies, flat_degenerate, budget);
  if (problem.complete) {
    VectorXd deficit = VectorXd::Zero(n);
    std::vector<Index> short_rows;
    for (Index i : active) {
      deficit(i) = budget(i) - probs.row(i).sum();
      if (deficit(i) > 1e-15) short_rows.push_back(i);
    }
    pro_rata_fill(probs, supplies, short_rows, deficit);
  }
  probs = probs.cwiseMax(0.0);

  sol.assignment.probs = probs;
  sol.assignment.row_budget = budget;
  sol.assignment.tolerance = options.tol;
  sol.utilities = utilities(inst.values, probs);
  sol.surplus = VectorXd::Zero(n);
  for (Index i : active) sol.surplus(i) = sol.utilities(i) - offsets(i);
  sol.objective = 0.0;
  for (Index i : positive) sol.objective += std::log(sol.surplus(i));

  // Items without supply carry the price that keeps every certified agent's
  // inequality tight enough.
  if (!positive.empty()) {
    const MatrixXd vhat = renormalize(inst.values, probs, offsets, positive);
    for (Index j = 0; j < m; ++j) {
      if (supplies(j) > kSupplyZero) continue;
      double top = 0.0;
      for (Index i : positive) top = std::max(top, vhat(i, j) - agent_prices(i));
      item_prices(j) = top;
    }
  }
  sol.duals = {item_prices, agent_prices};

  if (!positive.empty()) {
    Instance checked = inst;
    checked.supplies = supplies;
    sol.kkt_residual = kkt_check(checked, sol.assignment, sol.duals, offsets, positive);
    if (!(sol.kkt_residual <= options.tol)) {
      // one more try: the LP prices for the assignment we have
      try {
        sol.duals = recover_duals(checked, sol.assignment, offsets, positive, options.tol);
        sol.kkt_residual = kkt_check(checked, sol.assignment, sol.duals, offsets, positive);
      } catch (const Error&) {
      }
    }
    if (!(sol.kkt_residual <= options.tol)) throw NoConvergence(sol.iterations, sol.kkt_residual);
  }
  return sol;
}

}  // namespace matchlab

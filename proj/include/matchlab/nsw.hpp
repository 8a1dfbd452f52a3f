#pragma once

#include "matchlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace matchlab {

/// Item prices t_j and agent prices q_i certifying an NSW optimum.
template <typename Scalar = double>
struct BasicDuals {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> item_prices;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> agent_prices;
};
using Duals = BasicDuals<double>;

struct NswProblem {
  Instance instance;
  /// Agents taking part; empty means all of them.
  std::vector<Index> active_agents;
  /// One entry per instance agent; empty means zero offsets.
  DisagreementPoint offsets;
  /// One entry per instance agent, each in (0,1]; empty means unit demand.
  VectorXd row_budget;
  /// Top up rows that stop short of their budget with leftover supply. Leftover
  /// supply only remains on items no under-filled agent values, so utilities do
  /// not change.
  bool complete = false;
};

struct TraceRow {
  Index iteration = 0;
  double objective = 0.0;
  double residual = 0.0;
};

struct SolveOptions {
  double tol = 1e-7;
  Index max_iterations = 200000;
  std::vector<TraceRow>* trace = nullptr;
};

struct NswSolution {
  FractionalAssignment assignment;
  UtilityVector utilities;
  /// u_i - o_i for active agents, zero elsewhere.
  VectorXd surplus;
  /// Sum of log surplus over the non-degenerate active agents.
  double objective = 0.0;
  Duals duals;
  double kkt_residual = 0.0;
  std::vector<Index> active_agents;
  /// Active agents whose surplus is zero in every feasible assignment.
  std::vector<Index> degenerate_agents;
  /// The non-degenerate active agents; the ones the certificate covers.
  std::vector<Index> certified_agents;
  Index iterations = 0;
};

NswSolution solve(const NswProblem& problem, const SolveOptions& options = {});

/// Break-down of a KKT residual. `pair_residual(i,j)` is the stationarity
/// violation for checked agent i and item j (zero for unchecked rows).
template <typename Scalar = double>
struct KktReport {
  Scalar residual{0};
  Scalar sign{0};
  Scalar slackness{0};
  Scalar stationarity{0};
  Scalar feasibility{0};
  Index worst_agent = -1;
  Index worst_item = -1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pair_residual;
};

/// Scale each listed agent's row so that its surplus at `probs` becomes one.
/// Returns the scaled matrix; rows of unlisted agents are copied unchanged.
template <typename DerivedV, typename DerivedP, typename DerivedO>
auto renormalize(const Eigen::MatrixBase<DerivedV>& values, const Eigen::MatrixBase<DerivedP>& probs,
                 const Eigen::MatrixBase<DerivedO>& offsets, const std::vector<Index>& agents) {
  using Scalar = typename DerivedV::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> scaled = values;
  const auto u = utilities(values, probs);
  for (Index i : agents) {
    const Scalar surplus = u(i) - Scalar(offsets(i));
    if (!(surplus > Scalar(0)))
      throw Error(ErrorKind::DegenerateNormalization, "agent " + std::to_string(i) + " has no positive surplus");
    scaled.row(i) = values.row(i) / surplus;
  }
  return scaled;
}

/// Market with explicit multiplicities: agent i stands for `agent_size(i)`
/// identical unit-demand agents, probs(i,j) is the share of one such agent's
/// budget spent on item j, and column usage is sum_i agent_size(i) probs(i,j).
/// Plain instances use unit sizes.
template <typename Scalar>
struct SizedMarket {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix values;
  Matrix probs;
  Vector agent_size;
  Vector row_budget;
  Vector supplies;
  Vector offsets;
};

/// KKT residual of an NSW candidate over the checked agents. Values are
/// renormalized to unit surplus first; the conditions are
///   t, q >= 0;  t_j (c_j - col_j) = 0;  q_i (b_i - row_i) = 0;
///   v_ij <= t_j + q_i, with equality where p_ij > support_tol;
/// plus primal feasibility of rows and columns.
template <typename Scalar>
KktReport<Scalar> kkt_report(const SizedMarket<Scalar>& market, const BasicDuals<Scalar>& duals,
                             const std::vector<Index>& checked, const Scalar& support_tol) {
  const Index n = market.values.rows();
  const Index m = market.values.cols();
  if (market.probs.rows() != n || market.probs.cols() != m || market.agent_size.size() != n ||
      market.row_budget.size() != n || market.supplies.size() != m || market.offsets.size() != n ||
      duals.item_prices.size() != m || duals.agent_prices.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "KKT check inputs disagree in shape");

  KktReport<Scalar> rep;
  rep.pair_residual = SizedMarket<Scalar>::Matrix::Zero(n, m);
  const auto normalized = renormalize(market.values, market.probs, market.offsets, checked);
  const auto zero = Scalar(0);
  auto bump = [](Scalar& slot, const Scalar& v) {
    if (v > slot) slot = v;
  };

  typename SizedMarket<Scalar>::Vector col_use = SizedMarket<Scalar>::Vector::Zero(m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) {
      col_use(j) += market.agent_size(i) * market.probs(i, j);
      bump(rep.feasibility, -market.probs(i, j));
    }
  for (Index j = 0; j < m; ++j) {
    const Scalar t = duals.item_prices(j);
    bump(rep.sign, -t);
    const Scalar slack = market.supplies(j) - col_use(j);
    bump(rep.feasibility, -slack);
    bump(rep.slackness, (t < zero ? Scalar(-t) : t) * slack);
  }
  for (Index i = 0; i < n; ++i) {
    const Scalar slack = market.row_budget(i) - market.probs.row(i).sum();
    bump(rep.feasibility, -slack);
  }
  for (Index i : checked) {
    const Scalar q = duals.agent_prices(i);
    bump(rep.sign, -q);
    const Scalar slack = market.row_budget(i) - market.probs.row(i).sum();
    bump(rep.slackness, (q < zero ? Scalar(-q) : q) * slack);
    for (Index j = 0; j < m; ++j) {
      const Scalar gap = normalized(i, j) - duals.item_prices(j) - q;
      Scalar viol = gap > zero ? gap : zero;
      if (market.probs(i, j) > support_tol) viol = gap < zero ? Scalar(-gap) : gap;
      rep.pair_residual(i, j) = viol;
      if (viol > rep.stationarity) {
        rep.stationarity = viol;
        rep.worst_agent = i;
        rep.worst_item = j;
      }
    }
  }
  rep.residual = rep.sign;
  bump(rep.residual, rep.slackness);
  bump(rep.residual, rep.stationarity);
  bump(rep.residual, rep.feasibility);
  return rep;
}

SizedMarket<double> unit_market(const Instance& inst, const FractionalAssignment& assignment,
                                const DisagreementPoint& offsets);

KktReport<double> kkt_report(const Instance& inst, const FractionalAssignment& assignment, const Duals& duals,
                             const DisagreementPoint& offsets, const std::vector<Index>& agents);

/// Max KKT violation; agents with zero surplus must be left out of `agents`.
double kkt_check(const Instance& inst, const FractionalAssignment& assignment, const Duals& duals,
                 const DisagreementPoint& offsets, const std::vector<Index>& agents);
double kkt_check(const Instance& inst, const FractionalAssignment& assignment, const Duals& duals,
                 const DisagreementPoint& offsets);

MatrixXd renormalize(const Instance& inst, const FractionalAssignment& assignment, const DisagreementPoint& offsets,
                     const std::vector<Index>& agents);

class NotOptimal : public Error {
 public:
  NotOptimal(Index agent, Index item, double violation);
  Index agent() const { return agent_; }
  Index item() const { return item_; }
  double violation() const { return violation_; }

 private:
  Index agent_;
  Index item_;
  double violation_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(Index iterations, double best_residual);
  Index iterations() const { return iterations_; }
  double best_residual() const { return best_residual_; }

 private:
  Index iterations_;
  double best_residual_;
};

/// Prices minimizing the largest KKT violation for a claimed optimum, found by
/// linear programming. Throws NotOptimal when the best achievable violation
/// exceeds `tol`.
Duals recover_duals(const Instance& inst, const FractionalAssignment& assignment, const DisagreementPoint& offsets,
                    const std::vector<Index>& agents, double tol);

}  // namespace matchlab

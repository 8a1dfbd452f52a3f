#include "matchlab/lp.hpp"

#include <cmath>
#include <limits>

namespace matchlab::lp {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Tableau {
  RowMatrix t;  // constraint rows, then one objective row; last column is the rhs
  std::vector<Index> basis;
  Index n_rows = 0;
  Index n_cols = 0;  // structural + slack + artificial columns

  double& rhs(Index r) { return t(r, n_cols); }

  void pivot(Index row, Index col) {
    t.row(row) /= t(row, col);
    for (Index r = 0; r < t.rows(); ++r) {
      if (r == row) continue;
      const double f = t(r, col);
      if (f != 0.0) t.row(r) -= f * t.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  }

  void set_objective(const VectorXd& cost) {
    // reduced costs d_j = c_B B^-1 A_j - c_j, stored in the last row
    t.row(n_rows).setZero();
    for (Index j = 0; j < n_cols; ++j) t(n_rows, j) = -cost(j);
    for (Index r = 0; r < n_rows; ++r) {
      const double cb = cost(basis[static_cast<std::size_t>(r)]);
      if (cb != 0.0) t.row(n_rows) += cb * t.row(r);
    }
  }

  // Dantzig pricing, switching to Bland's rule while the objective stalls so
  // that degenerate cycling cannot occur. Columns with allowed[j] == false
  // never enter.
  Status run(const std::vector<bool>& allowed, double eps) {
    const Index limit = 200000;
    Index stalled = 0;
    for (Index it = 0; it < limit; ++it) {
      const bool bland = stalled > 50;
      Index enter = -1;
      double most = -eps;
      for (Index j = 0; j < n_cols; ++j) {
        if (!allowed[static_cast<std::size_t>(j)] || t(n_rows, j) >= most) continue;
        enter = j;
        if (bland) break;
        most = t(n_rows, j);
      }
      if (enter < 0) return Status::Optimal;
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index r = 0; r < n_rows; ++r) {
        const double a = t(r, enter);
        if (a <= eps) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
             basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return Status::Unbounded;
      const double before = rhs(n_rows);
      pivot(leave, enter);
      stalled = std::abs(rhs(n_rows) - before) <= 1e-14 * (1.0 + std::abs(before)) ? stalled + 1 : 0;
    }
    return Status::IterationLimit;
  }
};

}  // namespace

Result maximize(const Problem& problem, double eps) {
  const Index m = problem.A.rows();
  const Index n = problem.A.cols();
  if (problem.b.size() != m || problem.c.size() != n || static_cast<Index>(problem.sense.size()) != m)
    throw Error(ErrorKind::DimensionMismatch, "linear program dimensions disagree");

  // Normalize to a nonnegative right-hand side.
  MatrixXd A = problem.A;
  VectorXd b = problem.b;
  std::vector<Sense> sense = problem.sense;
  for (Index r = 0; r < m; ++r) {
    if (b(r) < 0.0) {
      A.row(r) *= -1.0;
      b(r) = -b(r);
      auto& s = sense[static_cast<std::size_t>(r)];
      if (s == Sense::LessEqual) s = Sense::GreaterEqual;
      else if (s == Sense::GreaterEqual) s = Sense::LessEqual;
    }
  }

  Index n_slack = 0;
  Index n_art = 0;
  for (auto s : sense) {
    if (s != Sense::Equal) ++n_slack;
    if (s != Sense::LessEqual) ++n_art;
  }

  Tableau tab;
  tab.n_rows = m;
  tab.n_cols = n + n_slack + n_art;
  tab.t = MatrixXd::Zero(m + 1, tab.n_cols + 1);
  tab.basis.assign(static_cast<std::size_t>(m), -1);
  tab.t.topLeftCorner(m, n) = A;
  tab.t.block(0, tab.n_cols, m, 1) = b;

  Index slack = n;
  Index art = n + n_slack;
  std::vector<bool> is_art(static_cast<std::size_t>(tab.n_cols), false);
  for (Index r = 0; r < m; ++r) {
    switch (sense[static_cast<std::size_t>(r)]) {
      case Sense::LessEqual:
        tab.t(r, slack) = 1.0;
        tab.basis[static_cast<std::size_t>(r)] = slack++;
        break;
      case Sense::GreaterEqual:
        tab.t(r, slack++) = -1.0;
        tab.t(r, art) = 1.0;
        is_art[static_cast<std::size_t>(art)] = true;
        tab.basis[static_cast<std::size_t>(r)] = art++;
        break;
      case Sense::Equal:
        tab.t(r, art) = 1.0;
        is_art[static_cast<std::size_t>(art)] = true;
        tab.basis[static_cast<std::size_t>(r)] = art++;
        break;
    }
  }

  Result result;
  std::vector<bool> allowed(static_cast<std::size_t>(tab.n_cols), true);

  if (n_art > 0) {
    VectorXd phase1 = VectorXd::Zero(tab.n_cols);
    for (Index j = 0; j < tab.n_cols; ++j)
      if (is_art[static_cast<std::size_t>(j)]) phase1(j) = -1.0;
    tab.set_objective(phase1);
    const Status st = tab.run(allowed, eps);
    if (st == Status::IterationLimit) {
      result.status = st;
      return result;
    }
    const double infeas = -tab.t(m, tab.n_cols);
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (infeas > 1e-9 * scale) {
      result.status = Status::Infeasible;
      return result;
    }
    // Pivot remaining artificials out of the basis where possible.
    for (Index r = 0; r < m; ++r) {
      if (!is_art[static_cast<std::size_t>(tab.basis[static_cast<std::size_t>(r)])]) continue;
      for (Index j = 0; j < tab.n_cols; ++j) {
        if (!is_art[static_cast<std::size_t>(j)] && std::abs(tab.t(r, j)) > 1e-9) {
          tab.pivot(r, j);
          break;
        }
      }
    }
    for (Index j = 0; j < tab.n_cols; ++j)
      if (is_art[static_cast<std::size_t>(j)]) allowed[static_cast<std::size_t>(j)] = false;
  }

  VectorXd cost = VectorXd::Zero(tab.n_cols);
  cost.head(n) = problem.c;
  tab.set_objective(cost);
  result.status = tab.run(allowed, eps);
  if (result.status != Status::Optimal) return result;

  result.x = VectorXd::Zero(n);
  for (Index r = 0; r < m; ++r) {
    const Index col = tab.basis[static_cast<std::size_t>(r)];
    if (col < n) result.x(col) = std::max(0.0, tab.rhs(r));
  }
  result.objective = problem.c.dot(result.x);
  return result;
}

}  // namespace matchlab::lp

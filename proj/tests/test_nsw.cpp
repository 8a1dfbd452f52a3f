#include <doctest.h>

#include "matchlab/nsw.hpp"
#include "oracles.hpp"

using namespace matchlab;

namespace {

NswSolution solve_values(const MatrixXd& v, std::vector<Index> agents = {}, VectorXd offsets = {}) {
  NswProblem prob;
  prob.instance = make_instance(v);
  prob.active_agents = std::move(agents);
  prob.offsets = std::move(offsets);
  return solve(prob);
}

FractionalAssignment assignment_of(const MatrixXd& p) {
  FractionalAssignment a = FractionalAssignment::zeros(p.rows(), p.cols());
  a.probs = p;
  return a;
}

}  // namespace

TEST_CASE("three-agent example: full and restricted optima") {
  const auto full = solve_values(oracle::table1());
  CHECK(full.utilities(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(full.utilities(1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(full.utilities(2) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK((full.assignment.probs - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(full.kkt_residual <= 1e-7);

  const auto ab = solve_values(oracle::table1(), {0, 1});
  CHECK(ab.utilities(0) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(ab.utilities(1) == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(ab.utilities(2) == 0.0);
  CHECK(ab.assignment.probs.row(2).sum() == 0.0);
}

TEST_CASE("single agent takes its best item") {
  MatrixXd v(1, 2);
  v << 1, 0;
  const auto sol = solve_values(v);
  CHECK(sol.assignment.probs(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.utilities(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two agents sharing one valued item, against a grid search") {
  MatrixXd v(2, 2);
  v << 1, 0, 1, 0;
  const auto sol = solve_values(v);
  double best = -1.0, best_x = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double x = k * 1e-4;
    if (x * (1.0 - x) > best) {
      best = x * (1.0 - x);
      best_x = x;
    }
  }
  CHECK(sol.utilities(0) == doctest::Approx(best_x).epsilon(1e-4));
  CHECK(sol.utilities(1) == doctest::Approx(1.0 - best_x).epsilon(1e-4));
  CHECK(sol.utilities(0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("KKT check with the initial-equilibrium prices") {
  const Instance inst = make_instance(oracle::table1());
  const auto p = assignment_of(MatrixXd::Identity(3, 3));
  Duals d{Eigen::Vector3d(0, 1, 1), Eigen::Vector3d(1, 0, 0)};
  CHECK(kkt_check(inst, p, d, VectorXd::Zero(3)) <= 1e-9);

  d.item_prices(1) += 0.1;
  CHECK(kkt_check(inst, p, d, VectorXd::Zero(3)) >= 0.09);
}

TEST_CASE("KKT check on the restricted optimum") {
  const Instance inst = make_instance(oracle::table1());
  MatrixXd p = MatrixXd::Zero(3, 3);
  p << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0;
  const auto a = assignment_of(p);
  const std::vector<Index> ab{0, 1};
  // the printed prices leave item A half-allocated at a positive price
  Duals printed{Eigen::Vector3d(2.0 / 3, 4.0 / 3, 2.0 / 3), Eigen::Vector3d(0, 0, 0)};
  const auto bad = kkt_report(inst, a, printed, VectorXd::Zero(3), ab);
  CHECK(bad.slackness == doctest::Approx(1.0 / 3.0));

  Duals fixed{Eigen::Vector3d(0, 2.0 / 3, 0), Eigen::Vector3d(2.0 / 3, 2.0 / 3, 0)};
  CHECK(kkt_check(inst, a, fixed, VectorXd::Zero(3), ab) <= 1e-12);

  const Duals rec = recover_duals(inst, a, VectorXd::Zero(3), ab, 1e-7);
  CHECK(kkt_check(inst, a, rec, VectorXd::Zero(3), ab) <= 1e-7);
}

TEST_CASE("KKT check on a symmetric diagonal") {
  const Instance inst = make_instance(MatrixXd::Identity(2, 2));
  Duals d{VectorXd::Ones(2), VectorXd::Zero(2)};
  CHECK(kkt_check(inst, assignment_of(MatrixXd::Identity(2, 2)), d, VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("KKT check refuses zero-surplus agents") {
  const Instance inst = make_instance(MatrixXd::Identity(2, 2));
  Duals d{VectorXd::Ones(2), VectorXd::Zero(2)};
  const auto p = assignment_of(MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(kkt_check(inst, p, d, VectorXd::Zero(2)), Error);
}

TEST_CASE("recover_duals") {
  const Instance inst = make_instance(oracle::table1());
  const auto id = assignment_of(MatrixXd::Identity(3, 3));
  const Duals d = recover_duals(inst, id, VectorXd::Zero(3), all_agents(inst), 1e-9);
  CHECK(kkt_check(inst, id, d, VectorXd::Zero(3)) <= 1e-9);

  SUBCASE("suboptimal assignment is rejected") {
    MatrixXd p(3, 3);
    p << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0;
    const double eps = 0.05;
    MatrixXd q = p;
    q(0, 0) -= eps;
    q(0, 1) += eps;
    q(1, 1) -= eps;
    q(1, 0) += eps;
    const VectorXd o = VectorXd::Zero(2);
    const MatrixXd v2 = oracle::table1().topRows(2);
    CHECK(oracle::log_nsw(v2, q.topRows(2), o) < oracle::log_nsw(v2, p.topRows(2), o));
    try {
      recover_duals(inst, assignment_of(q), VectorXd::Zero(3), {0, 1}, 1e-7);
      FAIL("expected NotOptimal");
    } catch (const NotOptimal& e) {
      CHECK(e.kind() == ErrorKind::NotOptimal);
      CHECK(e.violation() > 1e-3);
      CHECK(e.agent() >= 0);
    }
  }

  SUBCASE("1x1") {
    const Instance one = make_instance(MatrixXd::Constant(1, 1, 3.0));
    const Duals d1 = recover_duals(one, assignment_of(MatrixXd::Ones(1, 1)), VectorXd::Zero(1), {0}, 1e-9);
    CHECK(d1.item_prices(0) + d1.agent_prices(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("renormalize") {
  const Instance inst = make_instance(oracle::table1());
  const auto id = assignment_of(MatrixXd::Identity(3, 3));
  const MatrixXd r = renormalize(inst, id, VectorXd::Zero(3), all_agents(inst));
  CHECK(r(1, 0) == 0.0);
  CHECK(r(1, 1) == 1.0);
  CHECK(r(1, 2) == 0.5);
  CHECK(r.row(0) == inst.values.row(0));

  MatrixXd p(3, 3);
  p << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0;
  const MatrixXd f = renormalize(inst, assignment_of(p), VectorXd::Zero(3), {0, 1});
  CHECK(f(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(f(0, 1) == doctest::Approx(4.0 / 3));
  CHECK(f(0, 2) == 0.0);
  CHECK_THROWS_AS(renormalize(inst, assignment_of(p), VectorXd::Zero(3), {2}), Error);
}

TEST_CASE("solver beats random feasible assignments") {
  std::mt19937_64 rng(11);
  for (Index n : {3, 4}) {
    for (int trial = 0; trial < 5; ++trial) {
      const MatrixXd v = oracle::grid_values(n, n, 4, rng);
      const auto sol = solve_values(v);
      CHECK(sol.kkt_residual <= 1e-7);
      if (!sol.degenerate_agents.empty()) continue;
      const double f = oracle::log_nsw(v, sol.assignment.probs, VectorXd::Zero(n));
      const VectorXd zero = VectorXd::Zero(n);
      for (int k = 0; k < 10000; ++k) {
        const MatrixXd p = oracle::random_bistochastic(n, rng, 0.3);
        CHECK_MESSAGE(oracle::log_nsw(v, p, zero) <= f + 1e-7, "trial " << trial);
      }
    }
  }
}

TEST_CASE("certificate soundness on random instances") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 5;
    const MatrixXd v = oracle::uniform_values(n, n, rng);
    NswProblem prob;
    prob.instance = make_instance(v);
    const auto sol = solve(prob);
    CHECK(sol.kkt_residual <= 1e-7);
    const Duals d = recover_duals(prob.instance, sol.assignment, VectorXd::Zero(n), sol.certified_agents, 1e-7);
    CHECK(kkt_check(prob.instance, sol.assignment, d, VectorXd::Zero(n), sol.certified_agents) <= 1e-7);
  }
}

TEST_CASE("scaling one agent leaves the others unchanged") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 4;
    MatrixXd v = oracle::uniform_values(n, n, rng);
    const auto base = solve_values(v);
    v.row(1) *= 7.5;
    const auto scaled = solve_values(v);
    for (Index i = 0; i < n; ++i) {
      if (i == 1) continue;
      CHECK(scaled.utilities(i) == doctest::Approx(base.utilities(i)).epsilon(1e-6));
    }
    CHECK(scaled.utilities(1) == doctest::Approx(7.5 * base.utilities(1)).epsilon(1e-6));
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        CHECK((base.assignment.probs(i, j) > 1e-5) == (scaled.assignment.probs(i, j) > 1e-5));
  }
}

TEST_CASE("shifting one agent under the uniform disagreement point") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 4;
    MatrixXd v = oracle::uniform_values(n, n, rng);
    const auto base = solve_values(v, {}, uniform_disagreement(make_instance(v)));
    v.row(2).array() += 3.0;
    const auto shifted = solve_values(v, {}, uniform_disagreement(make_instance(v)));
    CHECK((base.surplus - shifted.surplus).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((base.assignment.probs - shifted.assignment.probs).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("more supply never lowers the optimum") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    NswProblem prob;
    prob.instance = make_instance(oracle::uniform_values(3, 4, rng));
    prob.instance.supplies = Eigen::Vector4d(0.5, 0.5, 0.5, 0.5);
    const double before = solve(prob).objective;
    prob.instance.supplies(trial % 4) = 1.0;
    CHECK(solve(prob).objective >= before - 1e-7);
  }
}

TEST_CASE("identical rows under the uniform offsets are degenerate") {
  MatrixXd v(3, 3);
  v << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  const auto sol = solve_values(v, {}, uniform_disagreement(make_instance(v)));
  CHECK(sol.degenerate_agents.size() == 3);
  CHECK((sol.assignment.probs - MatrixXd::Constant(3, 3, 1.0 / 3)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constant rows under the uniform offsets are degenerate") {
  MatrixXd v(3, 3);
  v << 1, 1, 1, 2, 0, 0, 0, 0, 2;
  const auto sol = solve_values(v, {}, uniform_disagreement(make_instance(v)));
  CHECK(sol.degenerate_agents == std::vector<Index>{0});
  CHECK(sol.surplus.minCoeff() >= -1e-9);
  CHECK(sol.assignment.probs.row(0).sum() == doctest::Approx(1.0));
  CHECK(sol.assignment.probs.colwise().sum().maxCoeff() <= 1.0 + 1e-9);
}

TEST_CASE("joint degeneracy: two agents after the same item") {
  MatrixXd v(2, 2);
  v << 1, 0, 1, 0;
  NswProblem prob;
  prob.instance = make_instance(v);
  prob.offsets = uniform_disagreement(prob.instance);
  prob.complete = true;
  const auto sol = solve(prob);
  CHECK(sol.degenerate_agents.size() == 2);
  CHECK((sol.assignment.probs - MatrixXd::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("mixed positive and jointly degenerate agents") {
  // agents 0 and 1 can only just reach their offsets by splitting item 0
  MatrixXd v(3, 3);
  v << 1, 0, 0, 1, 0, 0, 0, 1, 2;
  NswProblem prob;
  prob.instance = make_instance(v);
  prob.offsets = Eigen::Vector3d(0.5, 0.5, 0.0);
  prob.complete = true;
  const auto sol = solve(prob);
  CHECK(sol.degenerate_agents == std::vector<Index>{0, 1});
  CHECK(sol.certified_agents == std::vector<Index>{2});
  CHECK(sol.surplus.minCoeff() >= -1e-8);
  CHECK(sol.assignment.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK((sol.assignment.probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
  CHECK((sol.assignment.probs.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-8);
  CHECK(sol.utilities(2) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("offsets that cannot be met") {
  MatrixXd v(2, 2);
  v << 1, 0, 1, 0;
  NswProblem prob;
  prob.instance = make_instance(v);
  prob.offsets = Eigen::Vector2d(0.6, 0.6);
  try {
    solve(prob);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("under-filled rows are completed without changing utilities") {
  MatrixXd v(2, 3);
  v << 1, 0, 0, 0, 1, 0;
  NswProblem prob;
  prob.instance = make_instance(v);
  const auto plain = solve(prob);
  prob.complete = true;
  const auto full = solve(prob);
  CHECK((plain.utilities - full.utilities).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((full.assignment.probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK(full.kkt_residual <= 1e-7);
}

TEST_CASE("partial budgets and fractional supplies") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    NswProblem prob;
    prob.instance = make_instance(oracle::uniform_values(3, 5, rng));
    prob.instance.supplies = VectorXd::Constant(5, 0.5);
    prob.instance.supplies(trial % 5) = 0.0;
    prob.row_budget = Eigen::Vector3d(0.5, 1.0, 0.25);
    const auto sol = solve(prob);
    CHECK(sol.kkt_residual <= 1e-7);
    CHECK(sol.assignment.feasibility_violation(prob.instance.supplies) <= 1e-9);
    CHECK(sol.assignment.probs.col(trial % 5).sum() == 0.0);
  }
}

TEST_CASE("trace records the barrier progress") {
  std::vector<TraceRow> trace;
  NswProblem prob;
  prob.instance = make_instance(oracle::table1());
  SolveOptions opts;
  opts.trace = &trace;
  solve(prob, opts);
  REQUIRE(!trace.empty());
  for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k].residual < trace[k - 1].residual);
}

#pragma once

#include "matchlab/core.hpp"

#include <vector>

// Dense two-phase simplex for the small linear programs that appear around the
// NSW solver (degeneracy detection, dual recovery). Not meant for large models.

namespace matchlab::lp {

enum class Sense { LessEqual, GreaterEqual, Equal };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

/// maximize c'x subject to A x (sense) b, x >= 0.
struct Problem {
  MatrixXd A;
  VectorXd b;
  VectorXd c;
  std::vector<Sense> sense;
};

struct Result {
  Status status = Status::Infeasible;
  VectorXd x;
  double objective = 0.0;
};

Result maximize(const Problem& problem, double eps = 1e-10);

}  // namespace matchlab::lp

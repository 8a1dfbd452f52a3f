#pragma once

// Reference computations used only by the tests. They are deliberately naive.

#include "matchlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace oracle {

using matchlab::Index;
using matchlab::MatrixXd;
using matchlab::VectorXd;

inline MatrixXd table1() {
  MatrixXd v(3, 3);
  v << 1, 2, 0, 0, 2, 1, 0, 0, 1;
  return v;
}

// Entries drawn from {0, 1/k, ..., 1}.
inline MatrixXd grid_values(Index n, Index m, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, k);
  MatrixXd v(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) v(i, j) = pick(rng) / static_cast<double>(k);
  return v;
}

inline MatrixXd uniform_values(Index n, Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd v(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) v(i, j) = u(rng);
  return v;
}

// Alternate row and column scaling until both margins are one.
inline MatrixXd sinkhorn(MatrixXd a, int sweeps = 5000, double tol = 1e-14) {
  for (int s = 0; s < sweeps; ++s) {
    a = a.array().colwise() / a.rowwise().sum().array();
    a = a.array().rowwise() / a.colwise().sum().array();
    if ((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < tol) break;
  }
  return a;
}

// A random doubly stochastic matrix. With zero_prob > 0 the support is a union
// of random permutations, so every entry lies on a perfect matching and the
// balancing converges.
inline MatrixXd random_bistochastic(Index n, std::mt19937_64& rng, double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd a(n, n);
  if (zero_prob <= 0.0) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = u(rng) + 1e-3;
    return sinkhorn(a);
  }
  a.setZero();
  const Index layers = std::max<Index>(1, static_cast<Index>(std::ceil((1.0 - zero_prob) * static_cast<double>(n))));
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Index l = 0; l < layers; ++l) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < n; ++i) a(i, perm[static_cast<std::size_t>(i)]) += u(rng) + 1e-3;
  }
  return sinkhorn(a);
}

inline double log_nsw(const MatrixXd& v, const MatrixXd& p, const VectorXd& o) {
  double f = 0.0;
  for (Index i = 0; i < v.rows(); ++i) {
    const double s = v.row(i).dot(p.row(i)) - o(i);
    if (s <= 0.0) return -std::numeric_limits<double>::infinity();
    f += std::log(s);
  }
  return f;
}

// Brute-force subset enumeration of rho for tiny instances, given a solver
// returning utilities of the listed agents.
template <typename Solve>
double rho_bruteforce(Index n, Solve&& solve_utilities) {
  const VectorXd full = solve_utilities(std::vector<Index>{});
  double rho = 1.0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Index> agents;
    for (Index i = 0; i < n; ++i)
      if (mask & (1u << i)) agents.push_back(i);
    const VectorXd part = solve_utilities(agents);
    for (Index i : agents)
      if (part(i) > 0.0 && full(i) > 0.0) rho = std::max(rho, full(i) / part(i));
  }
  return rho;
}

}  // namespace oracle

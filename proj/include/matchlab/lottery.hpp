#pragma once

#include "matchlab/core.hpp"

#include <cstdint>
#include <vector>

namespace matchlab {

struct LotteryTerm {
  double weight = 0.0;
  /// matching[i] is the item agent i receives, or -1.
  std::vector<Index> matching;
};

struct Lottery {
  Index n_agents = 0;
  Index n_items = 0;
  std::vector<LotteryTerm> terms;
  /// Mass left over after extraction; at most the decomposition tolerance.
  double residual = 0.0;

  /// Sum of weight * permutation matrix over the terms.
  MatrixXd marginals() const;
};

/// Birkhoff-von Neumann decomposition. Square doubly stochastic inputs are
/// decomposed directly; anything else is first embedded into the doubly
/// stochastic matrix [[P, diag(1-row)], [diag(1-col), P^T]]. Each round takes
/// the perfect matching on the current support whose smallest entry is
/// largest and removes it at that weight.
Lottery decompose(const MatrixXd& probs, double tol = 1e-9);
Lottery decompose(const FractionalAssignment& p, double tol = 1e-9);

/// Draw one matching. Residual mass counts toward the lexicographically
/// smallest matching.
std::vector<Index> sample(const Lottery& lottery, std::uint64_t seed);

/// Maximum-cardinality bipartite matching (Hopcroft-Karp). adjacency[u] lists
/// right vertices in the order they should be tried. Returns match of each
/// left vertex, -1 if unmatched.
std::vector<Index> max_bipartite_matching(const std::vector<std::vector<Index>>& adjacency, Index n_right);

}  // namespace matchlab

#include "matchlab/lottery.hpp"

#include "matchlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace matchlab {
namespace {

constexpr double kEntryZero = 1e-12;

struct HopcroftKarp {
  const std::vector<std::vector<Index>>& adj;
  Index n_left;
  Index n_right;
  std::vector<Index> match_l, match_r, dist;

  HopcroftKarp(const std::vector<std::vector<Index>>& a, Index right)
      : adj(a), n_left(static_cast<Index>(a.size())), n_right(right),
        match_l(a.size(), -1), match_r(static_cast<std::size_t>(right), -1), dist(a.size(), 0) {}

  bool bfs() {
    std::queue<Index> q;
    bool found = false;
    for (Index u = 0; u < n_left; ++u) {
      if (match_l[u] < 0) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = -1;
      }
    }
    while (!q.empty()) {
      const Index u = q.front();
      q.pop();
      for (Index v : adj[u]) {
        const Index w = match_r[v];
        if (w < 0) found = true;
        else if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(Index u) {
    for (Index v : adj[u]) {
      const Index w = match_r[v];
      if (w < 0 || (dist[w] == dist[u] + 1 && dfs(w))) {
        match_l[u] = v;
        match_r[v] = u;
        return true;
      }
    }
    dist[u] = -1;
    return false;
  }

  Index run() {
    Index size = 0;
    while (bfs())
      for (Index u = 0; u < n_left; ++u)
        if (match_l[u] < 0 && dfs(u)) ++size;
    return size;
  }
};

// Perfect matching using only entries >= threshold, or empty.
std::vector<Index> perfect_matching(const MatrixXd& a, double threshold) {
  const Index n = a.rows();
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (a(i, j) >= threshold && a(i, j) > 0.0) adj[i].push_back(j);
  HopcroftKarp hk(adj, n);
  if (hk.run() < n) return {};
  return hk.match_l;
}

// Perfect matching maximizing its smallest entry: binary search over the
// distinct positive entries.
std::vector<Index> bottleneck_matching(const MatrixXd& a) {
  std::vector<double> levels;
  for (Index k = 0; k < a.size(); ++k)
    if (a.data()[k] > 0.0) levels.push_back(a.data()[k]);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.empty()) return {};
  std::vector<Index> best = perfect_matching(a, levels.front());
  if (best.empty()) return {};
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    auto m = perfect_matching(a, levels[mid]);
    if (m.empty()) {
      hi = mid - 1;
    } else {
      best = std::move(m);
      lo = mid;
    }
  }
  return best;
}

}  // namespace

std::vector<Index> max_bipartite_matching(const std::vector<std::vector<Index>>& adjacency, Index n_right) {
  HopcroftKarp hk(adjacency, n_right);
  hk.run();
  return hk.match_l;
}

MatrixXd Lottery::marginals() const {
  MatrixXd p = MatrixXd::Zero(n_agents, n_items);
  for (const auto& term : terms)
    for (Index i = 0; i < n_agents; ++i)
      if (term.matching[i] >= 0) p(i, term.matching[i]) += term.weight;
  return p;
}

Lottery decompose(const MatrixXd& probs, double tol) {
  const Index n = probs.rows();
  const Index m = probs.cols();
  if (!probs.allFinite()) throw Error(ErrorKind::NotDecomposable, "non-finite entry");
  if (n > 0 && m > 0) {
    if (probs.minCoeff() < -tol) throw Error(ErrorKind::NotDecomposable, "negative entry");
    const double row = (probs.rowwise().sum().array() - 1.0).maxCoeff();
    const double col = (probs.colwise().sum().array() - 1.0).maxCoeff();
    if (row > tol || col > tol)
      throw Error(ErrorKind::NotDecomposable, "row or column sum exceeds one by " + std::to_string(std::max(row, col)));
  }

  MatrixXd p = probs.unaryExpr([](double x) { return x < kEntryZero ? 0.0 : x; });
  const bool square_stochastic = n == m && n > 0 &&
                                 (p.rowwise().sum().array() - 1.0).abs().maxCoeff() <= tol &&
                                 (p.colwise().sum().array() - 1.0).abs().maxCoeff() <= tol;
  MatrixXd a;
  if (square_stochastic) {
    a = p;
  } else {
    a = MatrixXd::Zero(n + m, n + m);
    a.topLeftCorner(n, m) = p;
    a.bottomRightCorner(m, n) = p.transpose();
    for (Index i = 0; i < n; ++i) a(i, m + i) = std::max(0.0, 1.0 - p.row(i).sum());
    for (Index j = 0; j < m; ++j) a(n + j, j) = std::max(0.0, 1.0 - p.col(j).sum());
  }

  Lottery lot;
  lot.n_agents = n;
  lot.n_items = m;
  double remaining = 1.0;
  while (remaining > tol) {
    const auto match = bottleneck_matching(a);
    if (match.empty()) break;
    double w = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < a.rows(); ++i) w = std::min(w, a(i, match[i]));
    w = std::min(w, remaining);
    for (Index i = 0; i < a.rows(); ++i) {
      double& x = a(i, match[i]);
      x -= w;
      if (x < kEntryZero) x = 0.0;
    }
    LotteryTerm term;
    term.weight = w;
    term.matching.assign(static_cast<std::size_t>(n), -1);
    for (Index i = 0; i < n; ++i)
      if (match[i] < m) term.matching[i] = match[i];
    lot.terms.push_back(std::move(term));
    remaining -= w;
  }
  lot.residual = std::max(0.0, remaining);
  if (lot.residual > tol)
    throw Error(ErrorKind::NotDecomposable, "no perfect matching left with mass " + std::to_string(lot.residual));
  return lot;
}

Lottery decompose(const FractionalAssignment& p, double tol) { return decompose(p.probs, tol); }

std::vector<Index> sample(const Lottery& lottery, std::uint64_t seed) {
  if (lottery.terms.empty()) return std::vector<Index>(static_cast<std::size_t>(lottery.n_agents), -1);
  std::size_t first = 0;
  for (std::size_t k = 1; k < lottery.terms.size(); ++k)
    if (lottery.terms[k].matching < lottery.terms[first].matching) first = k;
  double total = lottery.residual;
  for (const auto& t : lottery.terms) total += t.weight;
  Rng rng(seed);
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k < lottery.terms.size(); ++k) {
    const double w = lottery.terms[k].weight + (k == first ? lottery.residual : 0.0);
    if (u < w) return lottery.terms[k].matching;
    u -= w;
  }
  return lottery.terms.back().matching;
}

}  // namespace matchlab

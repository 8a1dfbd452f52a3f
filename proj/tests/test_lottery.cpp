#include <doctest.h>

#include "matchlab/lottery.hpp"
#include "oracles.hpp"

#include <map>
#include <random>

using namespace matchlab;

namespace {

// Independent reconstruction: sum weight * permutation matrix, plus shape checks.
MatrixXd rebuild(const Lottery& lot) {
  MatrixXd out = MatrixXd::Zero(lot.n_agents, lot.n_items);
  for (const auto& t : lot.terms) {
    REQUIRE(static_cast<Index>(t.matching.size()) == lot.n_agents);
    std::vector<int> used(static_cast<std::size_t>(lot.n_items), 0);
    for (Index i = 0; i < lot.n_agents; ++i) {
      const Index j = t.matching[static_cast<std::size_t>(i)];
      if (j < 0) continue;
      REQUIRE(j < lot.n_items);
      CHECK(++used[static_cast<std::size_t>(j)] == 1);
      out(i, j) += t.weight;
    }
  }
  return out;
}

double weight_sum(const Lottery& lot) {
  double s = 0.0;
  for (const auto& t : lot.terms) s += t.weight;
  return s;
}

}  // namespace

TEST_CASE("identity is a single matching") {
  const Lottery lot = decompose(MatrixXd::Identity(4, 4));
  REQUIRE(lot.terms.size() == 1);
  CHECK(lot.terms[0].weight == doctest::Approx(1.0));
  CHECK(lot.terms[0].matching == std::vector<Index>{0, 1, 2, 3});
  CHECK(lot.residual == 0.0);
}

TEST_CASE("all one-half 2x2") {
  const Lottery lot = decompose(MatrixXd::Constant(2, 2, 0.5));
  REQUIRE(lot.terms.size() == 2);
  CHECK(lot.terms[0].weight == doctest::Approx(0.5));
  CHECK(lot.terms[1].weight == doctest::Approx(0.5));
  CHECK((rebuild(lot) - MatrixXd::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("3x3 with a zero pattern") {
  MatrixXd p(3, 3);
  p << 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5, 0, 0.5;
  const Lottery lot = decompose(p);
  CHECK(lot.terms.size() == 2);
  CHECK((rebuild(lot) - p).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((lot.marginals() - p).cwiseAbs().maxCoeff() <= 1e-12);
  for (const auto& t : lot.terms)
    for (Index i = 0; i < 3; ++i) CHECK(p(i, t.matching[static_cast<std::size_t>(i)]) > 0.0);
}

TEST_CASE("random balanced matrices") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = size(rng);
    const MatrixXd p = oracle::random_bistochastic(n, rng, trial % 2 ? 0.6 : 0.0);
    const Lottery lot = decompose(p);
    CHECK((rebuild(lot) - p).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(static_cast<Index>(lot.terms.size()) <= (n - 1) * (n - 1) + 1);
    CHECK(weight_sum(lot) + lot.residual == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& t : lot.terms) CHECK(t.weight > 0.0);
  }
}

TEST_CASE("substochastic input is padded") {
  MatrixXd p(2, 3);
  p << 0.3, 0.2, 0.1, 0.0, 0.5, 0.4;
  const Lottery lot = decompose(p);
  CHECK(lot.n_agents == 2);
  CHECK(lot.n_items == 3);
  CHECK((rebuild(lot) - p).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(weight_sum(lot) + lot.residual == doctest::Approx(1.0));
}

TEST_CASE("invalid inputs") {
  MatrixXd neg = MatrixXd::Identity(2, 2);
  neg(0, 1) = -0.1;
  CHECK_THROWS_AS(decompose(neg), Error);
  MatrixXd over = MatrixXd::Constant(2, 2, 0.6);
  try {
    decompose(over);
    FAIL("expected NotDecomposable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotDecomposable);
  }
}

TEST_CASE("sampling frequencies") {
  MatrixXd p(3, 3);
  p << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
  const Lottery lot = decompose(p);
  const int draws = 20000;
  MatrixXd counts = MatrixXd::Zero(3, 3);
  for (int k = 0; k < draws; ++k) {
    const auto m = sample(lot, static_cast<std::uint64_t>(k));
    for (Index i = 0; i < 3; ++i) counts(i, m[static_cast<std::size_t>(i)]) += 1.0;
  }
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      const double sigma = std::sqrt(p(i, j) * (1 - p(i, j)) / draws);
      CHECK(std::abs(counts(i, j) / draws - p(i, j)) <= 3 * sigma + 1e-12);
    }
  CHECK(sample(lot, 17) == sample(lot, 17));
}

TEST_CASE("residual goes to the lexicographically smallest matching") {
  Lottery lot;
  lot.n_agents = 2;
  lot.n_items = 2;
  lot.terms = {{0.0, {1, 0}}, {0.0, {0, 1}}};
  lot.residual = 1.0;
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(sample(lot, s) == std::vector<Index>{0, 1});
}

TEST_CASE("max bipartite matching") {
  // path graph: greedy would match 0-0 and leave 1 stranded
  const std::vector<std::vector<Index>> adj{{0, 1}, {0}};
  const auto m = max_bipartite_matching(adj, 2);
  CHECK(m == std::vector<Index>{1, 0});
  const auto none = max_bipartite_matching({{}, {0}}, 1);
  CHECK(none == std::vector<Index>{-1, 0});
}

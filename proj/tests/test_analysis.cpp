#include <doctest.h>

#include "matchlab/analysis.hpp"
#include "matchlab/instances.hpp"
#include "oracles.hpp"

#include <random>

using namespace matchlab;

TEST_CASE("benchmark") {
  SUBCASE("identical rows sit at the disagreement point") {
    MatrixXd v(2, 2);
    v << 1, 2, 1, 2;
    const auto b = benchmark(make_instance(v));
    CHECK(b.disagreement(0) == doctest::Approx(1.5));
    CHECK(b.utilities(0) == doctest::Approx(1.5).epsilon(1e-7));
    CHECK(b.utilities(1) == doctest::Approx(1.5).epsilon(1e-7));
  }
  SUBCASE("diagonal") {
    MatrixXd v(2, 2);
    v << 2, 0, 0, 2;
    const auto b = benchmark(make_instance(v));
    CHECK(b.utilities(0) == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(b.utilities(1) == doctest::Approx(2.0).epsilon(1e-7));
  }
  SUBCASE("single agent") {
    MatrixXd v(1, 2);
    v << 1, 3;
    CHECK(benchmark(make_instance(v)).utilities(0) == doctest::Approx(3.0).epsilon(1e-7));
  }
  SUBCASE("rsd worst case") {
    const auto b = benchmark(gen_rsd_worst(4, 1e-3));
    CHECK(b.utilities(0) >= 0.99);
  }
  SUBCASE("ordinal worst case") {
    const double eps = 1e-4;
    const auto b = benchmark(gen_ordinal_worst(4, eps));
    for (Index i = 0; i < 4; ++i) CHECK(b.utilities(i) >= 1 - 10 * eps);
  }
}

TEST_CASE("approximation ratios") {
  VectorXd m(3), b(3);
  m << 1, 0, 0;
  b << 2, 1, 0;
  const auto r = approx_ratio(m, b);
  CHECK(r.ratios(0) == 2.0);
  CHECK(std::isinf(r.ratios(1)));
  CHECK(r.ratios(2) == 1.0);
  CHECK(r.worst_agent == 1);
  CHECK_THROWS_AS(approx_ratio(m, VectorXd::Ones(2)), Error);
}

TEST_CASE("rho on the three-agent example") {
  const auto r = rho_exact(table1_instance());
  CHECK(r.rho == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
  CHECK(r.witness_subset == std::vector<Index>{0, 1});
  CHECK(r.witness_agent == 1);
  CHECK(r.subsets == 7);
}

TEST_CASE("rho is one without competition") {
  CHECK(rho_exact(make_instance(MatrixXd::Identity(4, 4))).rho == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(rho_exact(make_instance(MatrixXd::Ones(3, 3))).rho == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("rho against brute force") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance inst = make_instance(oracle::uniform_values(4, 4, rng));
    const double expect = oracle::rho_bruteforce(4, [&](const std::vector<Index>& agents) {
      NswProblem p;
      p.instance = inst;
      p.active_agents = agents;
      return solve(p).utilities;
    });
    CHECK(rho_exact(inst).rho == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("rho scan") {
  const auto a = rho_scan("uniform:3", 6, 1);
  const auto b = rho_scan("uniform:3", 6, 1);
  CHECK(a.rhos == b.rhos);
  CHECK(a.rhos.size() == 6);
  Index total = 0;
  for (Index c : a.bin_counts) total += c;
  CHECK(total == 6);
  const auto c = rho_scan("uniform:3", 3, 1, {table1_instance()});
  CHECK(c.max_rho >= 4.0 / 3.0 - 1e-6);
  CHECK(c.argmax == 3);
}

TEST_CASE("truthfulness audit") {
  SUBCASE("PA") {
    const auto r = truthfulness_audit(generate("random:4", 3), "pa", 20, 3);
    CHECK(r.worst_gain <= 1e-5);
    CHECK(r.evaluated == 80);
  }
  SUBCASE("RSD") {
    CHECK(truthfulness_audit(generate("random:4", 4), "rsd", 20, 4).worst_gain <= 1e-12);
  }
  SUBCASE("PS can be manipulated") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
      worst = std::max(worst, truthfulness_audit(generate("random:4", seed), "ps", 20, seed).worst_gain);
    CHECK(worst > 1e-3);
  }
}

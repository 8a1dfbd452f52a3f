#include <doctest.h>

#include "matchlab/instances.hpp"
#include "matchlab/lowerbound.hpp"
#include "matchlab/mechanisms.hpp"

#include <map>

using namespace matchlab;

namespace {

Index index_of(const std::vector<std::string>& labels, const std::string& name) {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == name) return static_cast<Index>(k);
  FAIL("missing label " << name);
  return -1;
}

const LowerBoundTable& table_named(const std::vector<LowerBoundTable>& tables, const std::string& name) {
  for (const auto& t : tables)
    if (t.name == name) return t;
  FAIL("missing table " << name);
  return tables.front();
}

}  // namespace

TEST_CASE("random generators") {
  const RandomFamily grid{Distribution::Grid, 2, 0.5};
  CHECK(gen_random(3, grid, 7) == gen_random(3, grid, 7));
  CHECK_FALSE(gen_random(3, grid, 7) == gen_random(3, grid, 8));
  const Instance g = gen_random(6, grid, 1);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) {
      const double x = g.values(i, j) * 2;
      CHECK(x == std::round(x));
    }
  const Instance u = gen_random(5, {}, 2);
  CHECK(u.values.minCoeff() >= 0.0);
  CHECK(u.values.maxCoeff() <= 1.0);

  // 400 entries at p = 1/2: the zero count stays within 4 sigma of 200
  const Instance s = gen_random(20, {Distribution::Sparse, 2, 0.5}, 3);
  const double zeros = static_cast<double>((s.values.array() == 0.0).count());
  CHECK(std::abs(zeros - 200.0) <= 4 * 10.0);
}

TEST_CASE("adversarial instances") {
  CHECK(gen_rsd_worst(1, 0.5).values == MatrixXd::Ones(1, 1));
  const Instance o = gen_ordinal_worst(4, 0.1);
  MatrixXd expect(4, 4);
  expect << 1, 0.1, 0, 0, 1, 0, 0.9, 0, 1, 0, 0, 0.9, 0, 1, 1, 1;
  CHECK(o.values == expect);
  for (Index i = 1; i < 3; ++i) CHECK(preference_order(o.values, i).front() == 0);
}

TEST_CASE("generator specs") {
  CHECK(generate("table1", 0) == table1_instance());
  CHECK(table1_instance().agent_labels == std::vector<std::string>{"a", "b", "c"});
  CHECK(generate("rsd-worst:3,0.25", 0) == gen_rsd_worst(3, 0.25));
  CHECK(generate("grid:4,3", 9) == gen_random(4, {Distribution::Grid, 3, 0.5}, 9));
  CHECK(generate("random:4", 2) == generate("uniform:4", 2));
  const auto spec = parse_generator("sparse:5,0.25");
  CHECK(spec.name == "sparse");
  CHECK(spec.args == std::vector<double>{5, 0.25});
  CHECK_THROWS_AS(parse_generator("uniform:x"), Error);
  CHECK_THROWS_AS(generate("nope:3", 0), Error);
  CHECK_THROWS_AS(generate("uniform:0", 0), Error);
}

TEST_CASE("first level parameters") {
  const auto p = lowerbound_params(1);
  const auto& L = p.levels.front();
  CHECK(L.v == Rational(9, 4));
  CHECK_FALSE(L.high_regime);
  CHECK(L.s_h == 13);
  CHECK(L.s_d == 9);
  CHECK(L.s_b == 5);
  CHECK(L.k == 1);
  CHECK(p.k0 == L.s_a);
  CHECK_THROWS_AS(lowerbound_params(0), Error);
}

TEST_CASE("parameter identities up to depth 8") {
  for (Index s = 1; s <= 8; ++s) {
    const auto p = lowerbound_params(s);
    BigInt k_next = 1;
    for (auto it = p.levels.rbegin(); it != p.levels.rend(); ++it) {
      const auto& L = *it;
      Rational v = 2;
      for (Index r = 0; r < L.r; ++r) v *= Rational(9, 8);
      CHECK(L.v == v);
      CHECK(L.s_a == L.s_b + L.s_f + L.s_c);
      CHECK(L.s_c == L.s_d + L.s_g);
      CHECK(L.s_b + L.s_d == 1 + L.s_h);
      CHECK((1 + L.s_h) % 14 == 0);
      CHECK(L.k == k_next);
      k_next = L.s_a * L.k;
      CHECK(L.high_regime == (L.v > Rational(9, 2)));
      CHECK(Rational(L.s_a) <= (L.high_regime ? 2 : 4) * L.v * L.v * L.v);
      for (const BigInt* x : {&L.s_a, &L.s_b, &L.s_c, &L.s_d, &L.s_f, &L.s_g, &L.s_h}) CHECK(*x > 0);
    }
    CHECK(p.k0 == k_next);
    const auto c = check_params(p);
    CHECK(c.identities);
    CHECK(c.divisible_by_14);
    CHECK(c.size_bound);
  }
}

TEST_CASE("base market sizes") {
  const auto tables = lowerbound_tables(lowerbound_params(1));
  const auto& t = table_named(tables, "base market, initial");
  const std::map<std::string, int> sizes{{"A_0", 17000}, {"B_0", 850}, {"C_0", 816}, {"D_0", 34},
                                         {"E_0", 33},    {"F_0", 1},   {"G_0", 5},   {"H_0", 1}};
  for (const auto& [name, size] : sizes) CHECK(t.market.supplies(index_of(t.item_labels, name)) == size);
}

TEST_CASE("equilibrium tables certify exactly") {
  for (Index s = 1; s <= 3; ++s) {
    const auto p = lowerbound_params(s);
    for (const auto& t : lowerbound_tables(p)) {
      CAPTURE(s);
      CAPTURE(t.name);
      const auto cert = certify_lowerbound_table(t);
      CHECK(cert.report.residual == 0);
    }
  }
}

TEST_CASE("last level extras") {
  for (Index s = 1; s <= 3; ++s) {
    const auto p = lowerbound_params(s);
    const auto tables = lowerbound_tables(p);
    const auto& t = table_named(tables, "last level, initial");
    const std::string r = std::to_string(s);
    const Index e = index_of(t.agent_labels, "e_" + r);
    const Index item = index_of(t.item_labels, "I_" + r);
    CHECK(t.market.values(e, item) == 1 / (p.levels.back().v + 1));
    CHECK(t.market.supplies(item) == 1);
  }
}

TEST_CASE("a corrupted price is caught") {
  auto tables = lowerbound_tables(lowerbound_params(1));
  LowerBoundTable t = table_named(tables, "base market, initial");
  t.duals.item_prices(index_of(t.item_labels, "B_0")) += Rational(1, 10);
  CHECK(to_double(certify_lowerbound_table(t).report.residual) >= 0.09);
}

TEST_CASE("loser ratio in exact arithmetic") {
  for (Index s = 1; s <= 3; ++s) {
    const auto p = lowerbound_params(s);
    // the tables give the loser 1 initially and 1/(v_s + 1) at the end
    CHECK(loser_ratio(p) == p.levels.back().v + 1);
  }
}

TEST_CASE("expansion size guard") {
  const auto p = lowerbound_params(1);
  CHECK(p.n_agents == 805896);
  try {
    expand_lowerbound(p, 100000);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooLarge);
    CHECK(std::string(e.what()).find("805896") != std::string::npos);
  }
}

TEST_CASE("rational helpers") {
  CHECK(to_string(Rational(3, 4)) == "3/4");
  CHECK(to_double(Rational(1, 3)) == doctest::Approx(1.0 / 3));
}

#include "matchlab/lowerbound.hpp"

#include <algorithm>
#include <map>

namespace matchlab {
namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

BigInt floor_of(const Rational& x) {
  BigInt q = numerator(x) / denominator(x);
  if (q * denominator(x) > numerator(x)) q -= 1;
  return q;
}

BigInt ceil_of(const Rational& x) {
  BigInt f = floor_of(x);
  return Rational(f) == x ? f : f + 1;
}

Rational pow_rational(const Rational& base, Index e) {
  Rational out = 1;
  for (Index k = 0; k < e; ++k) out *= base;
  return out;
}

Rational R(long a, long b = 1) { return Rational(a) / Rational(b); }

// Builder for sized markets with named bidders and items.
class MarketBuilder {
 public:
  explicit MarketBuilder(std::string name) { table_.name = std::move(name); }

  void item(const std::string& label, const Rational& size, const Rational& price) {
    items_[label] = static_cast<Index>(item_sizes_.size());
    table_.item_labels.push_back(label);
    item_sizes_.push_back(size);
    prices_.push_back(price);
  }

  void agent(const std::string& label, const Rational& size, const Rational& price, bool checked = true) {
    agents_[label] = static_cast<Index>(agent_sizes_.size());
    table_.agent_labels.push_back(label);
    agent_sizes_.push_back(size);
    agent_prices_.push_back(price);
    if (checked) table_.checked.push_back(agents_[label]);
  }

  void value(const std::string& a, const std::string& i, const Rational& v) { values_.push_back({a, i, v}); }
  void share(const std::string& a, const std::string& i, const Rational& p) { shares_.push_back({a, i, p}); }

  LowerBoundTable build() {
    const Index n = static_cast<Index>(agent_sizes_.size());
    const Index m = static_cast<Index>(item_sizes_.size());
    auto& mk = table_.market;
    mk.values = SizedMarket<Rational>::Matrix::Zero(n, m);
    mk.probs = SizedMarket<Rational>::Matrix::Zero(n, m);
    mk.agent_size.resize(n);
    mk.row_budget = SizedMarket<Rational>::Vector::Constant(n, Rational(1));
    mk.offsets = SizedMarket<Rational>::Vector::Zero(n);
    mk.supplies.resize(m);
    table_.duals.item_prices.resize(m);
    table_.duals.agent_prices.resize(n);
    for (Index i = 0; i < n; ++i) {
      mk.agent_size(i) = agent_sizes_[i];
      table_.duals.agent_prices(i) = agent_prices_[i];
    }
    for (Index j = 0; j < m; ++j) {
      mk.supplies(j) = item_sizes_[j];
      table_.duals.item_prices(j) = prices_[j];
    }
    for (const auto& e : values_) mk.values(agents_.at(e.agent), items_.at(e.item)) = e.x;
    for (const auto& e : shares_) mk.probs(agents_.at(e.agent), items_.at(e.item)) = e.x;
    return table_;
  }

 private:
  struct Entry {
    std::string agent, item;
    Rational x;
  };
  LowerBoundTable table_;
  std::map<std::string, Index> agents_, items_;
  std::vector<Rational> item_sizes_, prices_, agent_sizes_, agent_prices_;
  std::vector<Entry> values_, shares_;
};

std::string lvl(const char* base, Index r) { return std::string(base) + "_" + std::to_string(r); }

// Base market with `copies` copies; `initial` picks the equilibrium. In the
// final equilibrium c_0 and e_0 have left. The item H_0 and its initial holder
// are added by the caller.
void add_base(MarketBuilder& b, const Rational& copies, bool initial, const std::string& h_item) {
  const Rational k = copies;
  if (initial) {
    b.item("A_0", 17000 * k, 0);
    b.item("B_0", 850 * k, R(1, 2));
    b.item("C_0", 816 * k, 1);
    b.item("D_0", 34 * k, 1);
    b.item("E_0", 33 * k, 1);
    b.item("F_0", k, 2);
    b.item("G_0", 5 * k, 0);
    b.agent("a_0", 17000 * k, 1);
    b.agent("b_0", 850 * k, R(1, 2));
    b.agent("c_0", 816 * k, 0);
    b.agent("d_0", 34 * k, 0);
    b.agent("e_0", 33 * k, 0);
    b.agent("f_0", 6 * k, R(2, 3));
  } else {
    b.item("A_0", 17000 * k, 0);
    b.item("B_0", 850 * k, R(20, 41));
    b.item("C_0", 816 * k, R(79, 4920));
    b.item("D_0", 34 * k, R(6, 5));
    b.item("E_0", 33 * k, R(6, 55));
    b.item("F_0", k, R(16, 5));
    b.item("G_0", 5 * k, R(4, 5));
    b.agent("a_0", 17000 * k, R(40, 41));
    b.agent("b_0", 850 * k, R(192, 205));
    b.agent("d_0", 34 * k, R(4, 5));
    b.agent("f_0", 6 * k, 0);
  }
  // values of the initial equilibrium; the final normalization is applied by the checker
  b.value("a_0", "A_0", 1);
  b.value("a_0", "B_0", R(3, 2));
  b.value("b_0", "B_0", 1);
  b.value("b_0", "C_0", R(4687, 7008));
  b.value("b_0", "D_0", R(3, 2));
  b.value("d_0", "D_0", 1);
  b.value("d_0", "E_0", R(5, 11));
  b.value("d_0", "F_0", 2);
  b.value("f_0", "F_0", R(8, 3));
  b.value("f_0", "G_0", R(2, 3));
  b.value("f_0", h_item, R(5, 3));
  if (initial) {
    b.value("c_0", "C_0", 1);
    b.value("e_0", "E_0", 1);
    b.share("a_0", "A_0", 1);
    b.share("b_0", "B_0", 1);
    b.share("c_0", "C_0", 1);
    b.share("d_0", "D_0", 1);
    b.share("e_0", "E_0", 1);
    b.share("f_0", "F_0", R(1, 6));
    b.share("f_0", "G_0", R(5, 6));
  } else {
    b.share("a_0", "A_0", R(19, 20));
    b.share("a_0", "B_0", R(1, 20));
    b.share("b_0", "C_0", R(24, 25));
    b.share("b_0", "D_0", R(1, 25));
    b.share("d_0", "E_0", R(33, 34));
    b.share("d_0", "F_0", R(1, 34));
    b.share("f_0", "G_0", R(5, 6));
    b.share("f_0", h_item, R(1, 6));
  }
}

// Level r with `copies` copies. Item A_r is added by the caller (it is H_0 or
// E_{r-1}); e_item names the item E_r.
void add_level(MarketBuilder& b, const LevelParams& L, const Rational& copies, bool initial, const std::string& a_item,
               const std::string& e_item) {
  const Index r = L.r;
  const Rational k = copies;
  const Rational v = L.v;
  const std::string A = a_item, B = lvl("B", r), C = lvl("C", r), D = lvl("D", r), F = lvl("F", r),
                    G = lvl("G", r), H = lvl("H", r);
  const std::string a = lvl("a", r), bb = lvl("b", r), c = lvl("c", r), f = lvl("f", r), g = lvl("g", r),
                    h = lvl("h", r);
  const Rational sa(L.s_a), sb(L.s_b), sc(L.s_c), sd(L.s_d), sf(L.s_f), sg(L.s_g), sh(L.s_h);
  if (initial) {
    b.item(B, sb * k, 2);
    b.item(C, sc * k, R(1, 2));
    b.item(D, sd * k, 0);
    b.item(F, sf * k, 1);
    b.item(G, sg * k, 1);
    b.item(H, sh * k, 1);
    b.agent(bb, (sb + sd) * k, R(2, 7));
    b.agent(c, sc * k, R(1, 2));
    b.agent(f, sf * k, 0);
    b.agent(g, sg * k, 0);
    b.agent(h, sh * k, 0);
  } else {
    b.item(B, sb * k, R(16, 9) * v);
    b.item(C, sc * k, R(4, 9) * v);
    b.item(D, sd * k, R(2, 9) * v);
    b.item(F, sf * k, L.vF_f);
    b.item(G, sg * k, L.vF_g);
    b.item(H, sh * k, L.vF_h);
    b.agent(bb, (sb + sd) * k, 0);
    b.agent(c, sc * k, 0);
  }
  b.value(a, A, 1);
  b.value(a, B, 2);
  b.value(a, C, R(1, 2));
  b.value(a, F, L.vI_f);
  b.value(bb, B, R(16, 7));
  b.value(bb, D, R(2, 7));
  b.value(bb, e_item, R(9, 7));
  b.value(bb, H, L.vI_h);
  b.value(c, C, 1);
  b.value(c, D, R(1, 2));
  b.value(c, G, L.vI_g);
  if (initial) {
    b.value(f, F, 1);
    b.value(g, G, 1);
    b.value(h, H, 1);
    b.share(a, A, 1);
    b.share(bb, B, sb / (sb + sd));
    b.share(bb, D, sd / (sb + sd));
    b.share(c, C, 1);
    b.share(f, F, 1);
    b.share(g, G, 1);
    b.share(h, H, 1);
  } else {
    b.share(a, B, sb / sa);
    b.share(a, C, sc / sa);
    b.share(a, F, sf / sa);
    b.share(bb, e_item, 1 / (1 + sh));
    b.share(bb, H, sh / (1 + sh));
    b.share(c, D, sd / sc);
    b.share(c, G, sg / sc);
  }
}

// The extra item I_s and bidders e_s, i_s of the last level. E_s is added here.
void add_tail(MarketBuilder& b, const LevelParams& L, bool initial) {
  const Index s = L.r;
  const std::string E = lvl("E", s), I = lvl("I", s), e = lvl("e", s), i = lvl("i", s);
  if (initial) {
    b.item(E, 1, 1);
    b.item(I, 1, 1);
    b.agent(e, 1, 0);
    b.agent(i, 1, 0);
    b.value(i, I, 1);
    b.share(e, E, 1);
    b.share(i, I, 1);
  } else {
    b.item(E, 1, L.v);
    b.item(I, 1, 0);
    b.agent(e, 1, 1);
    b.share(e, I, 1);
  }
  b.value(e, E, 1);
  b.value(e, I, 1 / (L.v + 1));
}

LowerBoundTable assembled(const LowerBoundParams& p, bool initial) {
  MarketBuilder b(initial ? "chained market, initial" : "chained market, final");
  add_base(b, Rational(p.k0), initial, "A_1");
  // H_0 = A_1, E_r = A_{r+1}, h_0 = a_1
  for (const auto& L : p.levels) {
    const Rational k(L.k);
    b.item(lvl("A", L.r), Rational(L.s_a) * k, initial ? Rational(1) : R(8, 9) * L.v);
    b.agent(lvl("a", L.r), Rational(L.s_a) * k, 0);
  }
  for (const auto& L : p.levels) {
    const bool last = L.r == p.s;
    if (last) add_tail(b, L, initial);
    add_level(b, L, Rational(L.k), initial, lvl("A", L.r), last ? lvl("E", L.r) : lvl("A", L.r + 1));
  }
  return b.build();
}

}  // namespace

double to_double(const Rational& x) { return x.convert_to<double>(); }

std::string to_string(const Rational& x) { return x.str(); }

LowerBoundParams lowerbound_params(Index s) {
  if (s < 1) throw Error(ErrorKind::InvalidArgument, "depth s must be at least 1");
  if (s > 200) throw Error(ErrorKind::TooLarge, "depth s = " + std::to_string(s) + " is beyond the supported range");
  LowerBoundParams p;
  p.s = s;
  for (Index r = 1; r <= s; ++r) {
    LevelParams L;
    L.r = r;
    L.v = 2 * pow_rational(R(9, 8), r);
    const Rational& v = L.v;
    L.high_regime = v > R(9, 2);
    const BigInt f14 = floor_of(v / 14);
    const BigInt f16 = floor_of(R(16, 9) * v);
    L.s_h = 14 * f14 + 13;
    L.s_d = 9 * (f14 + 1);
    L.s_b = 5 * (f14 + 1);
    if (L.high_regime) {
      const BigInt f2 = floor_of(R(2, 9) * v);
      const BigInt f4 = floor_of(R(4, 9) * v);
      L.s_g = 9 * f2 * (f14 + 1);
      L.s_c = 9 * (f14 + 1) * (f2 + 1);
      L.s_f = 5 * f16 * (f14 + 1) + 9 * f4 * (f14 + 1) * (f2 + 1);
      L.s_a = 5 * (f14 + 1) + 9 * (f14 + 1) * (f2 + 1) + 5 * f16 * (f14 + 1) + 9 * f4 * (f14 + 1) * (f2 + 1);
    } else {
      const BigInt g = ceil_of((9 - 2 * v) / (R(2, 3) * v - 1));
      L.s_g = g;
      L.s_c = 9 + g;
      L.s_f = 5 * f16 * (f14 + 1);
      L.s_a = 14 + g + 5 * f16;
    }
    const Rational sb(L.s_b), sc(L.s_c), sd(L.s_d), sf(L.s_f), sg(L.s_g), sh(L.s_h);
    L.vF_h = (sh + 1 - v) / sh;
    L.vI_h = R(9, 7) / v * L.vF_h;
    L.vF_g = (sg + sd - R(2, 9) * v * sd) / sg;
    L.vI_g = R(9, 4) / v * L.vF_g;
    L.vF_f = (sf + sb + sc - R(16, 9) * v * sb - R(4, 9) * v * sc) / sf;
    L.vI_f = R(9, 8) / v * L.vF_f;
    p.levels.push_back(L);
  }
  BigInt k = 1;
  for (Index r = s; r >= 1; --r) {
    p.levels[r - 1].k = k;
    k *= p.levels[r - 1].s_a;
  }
  p.k0 = k;

  p.n_agents = 18739 * p.k0 + 2;
  p.n_items = 18739 * p.k0 + 2;
  for (const auto& L : p.levels) {
    p.n_agents += (L.s_a + L.s_b + L.s_d + L.s_c + L.s_f + L.s_g + L.s_h) * L.k;
    p.n_items += (L.s_a + L.s_b + L.s_c + L.s_d + L.s_f + L.s_g + L.s_h) * L.k;
  }
  return p;
}

ParamChecks check_params(const LowerBoundParams& p) {
  ParamChecks c;
  auto fail = [&](bool& flag, const std::string& what) {
    flag = false;
    c.failures.push_back(what);
  };
  for (const auto& L : p.levels) {
    const std::string at = " at r=" + std::to_string(L.r);
    if (L.s_a != L.s_b + L.s_f + L.s_c) fail(c.identities, "s_a != s_b + s_f + s_c" + at);
    if (L.s_c != L.s_d + L.s_g) fail(c.identities, "s_c != s_d + s_g" + at);
    if (L.s_b + L.s_d != 1 + L.s_h) fail(c.identities, "s_b + s_d != 1 + s_h" + at);
    if (9 * L.s_b != 5 * L.s_d) fail(c.identities, "s_b != 5/9 s_d" + at);
    const BigInt above = L.r == 1 ? p.k0 : p.levels[L.r - 2].k;
    if (above != L.s_a * L.k) fail(c.identities, "k_{r-1} != s_{a,r} k_r" + at);
    if ((1 + L.s_h) % 14 != 0) fail(c.divisible_by_14, "14 does not divide 1 + s_h" + at);
    const Rational cap = (L.high_regime ? 2 : 4) * L.v * L.v * L.v;
    if (Rational(L.s_a) > cap) fail(c.size_bound, "s_a = " + L.s_a.str() + " exceeds " + to_string(cap) + at);
    const bool ok = L.vF_f >= 0 && L.vF_g >= 0 && L.vF_h >= 0 && L.vI_f <= 1 && L.vI_g <= R(3, 2) &&
                    L.vI_h <= R(9, 7);
    if (!ok)
      fail(c.values_valid, "derived values out of range" + at + ": vF_f=" + to_string(L.vF_f) +
                               " vF_g=" + to_string(L.vF_g) + " vF_h=" + to_string(L.vF_h));
  }
  // k0 <= (9/8)^(e/2) with e = s^2 + 58 s, squared to stay in integers
  const Index e = p.s * p.s + 58 * p.s;
  if (Rational(p.k0 * p.k0) > pow_rational(R(9, 8), e))
    fail(c.k0_bound, "k_0 = " + p.k0.str() + " exceeds (9/8)^(" + std::to_string(e) + "/2)");
  return c;
}

std::vector<LowerBoundTable> lowerbound_tables(const LowerBoundParams& p) {
  std::vector<LowerBoundTable> out;
  {
    MarketBuilder b("base market, initial");
    add_base(b, 1, true, "H_0");
    b.item("H_0", 1, 1);
    b.agent("h_0", 1, 0);
    b.value("h_0", "H_0", 1);
    b.share("h_0", "H_0", 1);
    out.push_back(b.build());
  }
  {
    MarketBuilder b("base market, final");
    add_base(b, 1, false, "H_0");
    b.item("H_0", 1, 2);
    // h_0 = a_1 is served in the next market, so it has no allocation to normalize by here
    b.agent("h_0", 1, 0, false);
    b.value("h_0", "H_0", 2);
    auto t = b.build();
    // printed final values are already normalized
    t.market.values.row(0) *= R(40, 41);
    t.market.values.row(1) *= R(292, 205);
    t.market.values.row(2) *= 2;
    t.market.values.row(3) *= R(6, 5);
    out.push_back(t);
  }
  {
    const LevelParams& L = p.levels.back();
    MarketBuilder b("last level, initial");
    const std::string A = lvl("A", L.r);
    b.item(A, Rational(L.s_a), 1);
    b.agent(lvl("a", L.r), Rational(L.s_a), 0);
    add_tail(b, L, true);
    add_level(b, L, 1, true, A, lvl("E", L.r));
    out.push_back(b.build());
  }
  out.push_back(assembled(p, true));
  out.push_back(assembled(p, false));
  return out;
}

TableCertificate certify_lowerbound_table(const LowerBoundTable& table) {
  return {table.name, kkt_report(table.market, table.duals, table.checked, Rational(0))};
}

Rational loser_ratio(const LowerBoundParams& p) {
  const auto initial = assembled(p, true);
  const auto final = assembled(p, false);
  const std::string loser = lvl("e", p.s);
  auto utility = [&](const LowerBoundTable& t) {
    for (std::size_t i = 0; i < t.agent_labels.size(); ++i)
      if (t.agent_labels[i] == loser) {
        const Index row = static_cast<Index>(i);
        return Rational(t.market.values.row(row).cwiseProduct(t.market.probs.row(row)).sum());
      }
    throw Error(ErrorKind::InvalidArgument, "loser missing from market");
  };
  return utility(initial) / utility(final);
}

ExpandedLowerBound expand_lowerbound(const LowerBoundParams& p, Index max_agents) {
  if (p.n_agents > max_agents)
    throw Error(ErrorKind::TooLarge, "expanded lower-bound market for s=" + std::to_string(p.s) + " has " +
                                         p.n_agents.str() + " agents (limit " + std::to_string(max_agents) + ")");
  const auto initial = assembled(p, true);
  const auto final = assembled(p, false);
  const Index n = p.n_agents.convert_to<Index>();
  const Index m = p.n_items.convert_to<Index>();

  // unit row / column ranges of every bidder and item type
  std::vector<Index> row_start, col_start;
  Index next = 0;
  for (Index i = 0; i < initial.market.agent_size.size(); ++i) {
    row_start.push_back(next);
    next += initial.market.agent_size(i).convert_to<Index>();
  }
  row_start.push_back(next);
  next = 0;
  for (Index j = 0; j < initial.market.supplies.size(); ++j) {
    col_start.push_back(next);
    next += initial.market.supplies(j).convert_to<Index>();
  }
  col_start.push_back(next);

  ExpandedLowerBound out;
  out.instance.values = MatrixXd::Zero(n, m);
  out.instance.supplies = VectorXd::Ones(m);
  out.initial = FractionalAssignment::zeros(n, m);
  out.final = FractionalAssignment::zeros(n, m);
  auto fill = [&](const LowerBoundTable& t, MatrixXd& probs, bool values) {
    for (Index a = 0; a < static_cast<Index>(t.agent_labels.size()); ++a) {
      const auto ia = std::find(initial.agent_labels.begin(), initial.agent_labels.end(), t.agent_labels[a]) -
                      initial.agent_labels.begin();
      for (Index it = 0; it < static_cast<Index>(t.item_labels.size()); ++it) {
        const auto jt = std::find(initial.item_labels.begin(), initial.item_labels.end(), t.item_labels[it]) -
                        initial.item_labels.begin();
        const double share = to_double(t.market.probs(a, it) / t.market.supplies(it));
        const double value = to_double(t.market.values(a, it));
        for (Index r = row_start[ia]; r < row_start[ia + 1]; ++r)
          for (Index c = col_start[jt]; c < col_start[jt + 1]; ++c) {
            probs(r, c) = share;
            if (values) out.instance.values(r, c) = value;
          }
      }
    }
  };
  fill(initial, out.initial.probs, true);
  fill(final, out.final.probs, false);
  for (Index a = 0; a < static_cast<Index>(initial.agent_labels.size()); ++a) {
    const auto& label = initial.agent_labels[a];
    const bool gone = std::find(final.agent_labels.begin(), final.agent_labels.end(), label) == final.agent_labels.end();
    for (Index r = row_start[a]; r < row_start[a + 1]; ++r) {
      out.instance.agent_labels.push_back(label);
      if (gone) out.removal_set.push_back(r);
    }
    if (label == lvl("e", p.s)) out.loser = row_start[a];
  }
  for (Index j = 0; j < static_cast<Index>(initial.item_labels.size()); ++j)
    for (Index c = col_start[j]; c < col_start[j + 1]; ++c) out.instance.item_labels.push_back(initial.item_labels[j]);
  return out;
}

}  // namespace matchlab

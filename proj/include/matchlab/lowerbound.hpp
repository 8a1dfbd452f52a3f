#pragma once

#include "matchlab/core.hpp"
#include "matchlab/nsw.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <string>
#include <vector>

namespace matchlab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Parameters of level r (1 <= r <= s) of the chained lower-bound market.
struct LevelParams {
  Index r = 0;
  Rational v;
  /// v_r > 9/2.
  bool high_regime = false;
  BigInt s_a, s_b, s_c, s_d, s_f, s_g, s_h;
  /// Number of copies of this level's market.
  BigInt k;
  /// Initial and final values of a_r for F_r, c_r for G_r, b_r for H_r.
  Rational vI_f, vI_g, vI_h, vF_f, vF_g, vF_h;
};

struct LowerBoundParams {
  Index s = 0;
  /// levels[r-1] holds level r.
  std::vector<LevelParams> levels;
  /// Copies of the base market.
  BigInt k0;
  /// Unit agents and items of the expanded market in the initial equilibrium.
  BigInt n_agents;
  BigInt n_items;
};

LowerBoundParams lowerbound_params(Index s);

struct ParamChecks {
  /// s_a = s_b + s_f + s_c, s_c = s_d + s_g, s_b + s_d = 1 + s_h, 9 s_b = 5 s_d, k_{r-1} = s_{a,r} k_r.
  bool identities = true;
  /// 14 divides 1 + s_h at every level.
  bool divisible_by_14 = true;
  /// s_a <= 2 v^3 (high regime) or 4 v^3 (low regime).
  bool size_bound = true;
  /// Derived values non-negative and below the caps the initial prices impose.
  bool values_valid = true;
  /// k_0 <= (9/8)^((s^2 + 58 s)/2).
  bool k0_bound = true;
  std::vector<std::string> failures;
};

ParamChecks check_params(const LowerBoundParams& params);

/// A market with named, sized bidders and items, a claimed equilibrium and its prices.
struct LowerBoundTable {
  std::string name;
  std::vector<std::string> agent_labels;
  std::vector<std::string> item_labels;
  SizedMarket<Rational> market;
  BasicDuals<Rational> duals;
  /// Agents whose KKT conditions are checked; all but boundary agents whose
  /// allocation lives in a neighbouring market.
  std::vector<Index> checked;
};

/// Base market alone, initial and final; the last level with the extra item,
/// initial; the whole chained market (all copies aggregated), initial and final.
std::vector<LowerBoundTable> lowerbound_tables(const LowerBoundParams& params);

struct TableCertificate {
  std::string name;
  KktReport<Rational> report;
};

TableCertificate certify_lowerbound_table(const LowerBoundTable& table);

/// Utility of the loser e_s in the initial over the final equilibrium, in its
/// own (unnormalized) values.
Rational loser_ratio(const LowerBoundParams& params);

/// Unit expansion of the chained market: every bidder and item of size w
/// becomes w identical rows or columns. Throws TooLarge above `max_agents`.
struct ExpandedLowerBound {
  Instance instance;
  FractionalAssignment initial;
  FractionalAssignment final;
  std::vector<Index> removal_set;
  Index loser = -1;
};

ExpandedLowerBound expand_lowerbound(const LowerBoundParams& params, Index max_agents);

double to_double(const Rational& x);
std::string to_string(const Rational& x);

}  // namespace matchlab

#include "matchlab/mechanisms.hpp"

#include "matchlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace matchlab {
namespace {

std::vector<Index> normalize_agents(const Instance& inst, std::vector<Index> agents) {
  if (agents.empty()) return all_agents(inst);
  std::sort(agents.begin(), agents.end());
  agents.erase(std::unique(agents.begin(), agents.end()), agents.end());
  for (Index i : agents)
    if (i < 0 || i >= inst.n_agents()) throw Error(ErrorKind::InvalidArgument, "agent index out of range");
  return agents;
}

void require_unit_supplies(const Instance& inst, const char* who) {
  for (Index j = 0; j < inst.n_items(); ++j)
    if (inst.supplies(j) != 1.0) throw Error(ErrorKind::InvalidArgument, std::string(who) + " needs unit supplies");
}

}  // namespace

PaOutcome pa_run(const Instance& inst, const DisagreementPoint& offsets, const std::vector<Index>& agents,
                 const SolveOptions& options) {
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  PaOutcome out;
  out.agents = normalize_agents(inst, agents);
  const VectorXd o = offsets.size() == 0 ? VectorXd::Zero(n) : offsets;
  if (o.size() != n) throw Error(ErrorKind::DimensionMismatch, "offsets need one entry per agent");
  if (inst.supplies.sum() < static_cast<double>(out.agents.size()) - 1e-9)
    throw Error(ErrorKind::InvalidArgument, "total supply is below the number of agents");

  NswProblem base;
  base.instance = inst;
  base.active_agents = out.agents;
  base.offsets = o;
  base.complete = true;
  out.base = solve(base, options);

  out.fractions = VectorXd::Zero(n);
  out.leave_one_out = MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  out.assignment = FractionalAssignment::zeros(n, m, options.tol);
  const auto& certified = out.base.certified_agents;

  if (certified.empty()) {
    out.degenerate_all = true;
    for (Index i : out.agents) {
      out.fractions(i) = 1.0;
      out.assignment.probs.row(i) = out.base.assignment.probs.row(i);
    }
    return out;
  }

  for (Index i : out.agents) {
    std::vector<Index> others;
    for (Index k : out.agents)
      if (k != i) others.push_back(k);
    double log_f = 0.0;
    if (!others.empty()) {
      NswProblem without = base;
      without.active_agents = others;
      without.complete = false;
      const NswSolution sol = solve(without, options);
      for (Index k : others) out.leave_one_out(i, k) = sol.utilities(k);

      std::vector<Index> expected;
      for (Index k : certified)
        if (k != i) expected.push_back(k);
      if (expected != sol.certified_agents) out.degenerate_mismatch = true;
      std::vector<Index> common;
      std::set_intersection(expected.begin(), expected.end(), sol.certified_agents.begin(),
                            sol.certified_agents.end(), std::back_inserter(common));
      for (Index k : common) log_f += std::log(out.base.surplus(k)) - std::log(sol.surplus(k));
    }
    // Removing i can only help the others, so f <= 1 up to solver noise.
    const double f = std::min(1.0, std::exp(log_f));
    out.fractions(i) = f;
    out.assignment.probs.row(i) = f * out.base.assignment.probs.row(i);
  }
  return out;
}

RpiOutcome rpi_run(const Instance& inst, const RpiOptions& options) {
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  if (n != m) throw Error(ErrorKind::InvalidArgument, "RPI needs as many agents as items");
  require_unit_supplies(inst, "RPI");
  if (options.n0 < 1) throw Error(ErrorKind::InvalidArgument, "n0 must be at least 1");

  RpiOutcome out;
  out.assignment = FractionalAssignment::zeros(n, m, options.solver.tol);
  MatrixXd& P = out.assignment.probs;
  std::vector<Index> remaining = all_agents(inst);
  VectorXd c = VectorXd::Ones(m);

  for (Index depth = 0; !remaining.empty(); ++depth) {
    const Index n_bar = static_cast<Index>(remaining.size());
    RpiLevel level;
    level.depth = depth;
    level.remaining = remaining;
    level.supplies = c;
    if (n_bar < options.n0) {
      for (Index i : remaining) P.row(i) = c.transpose() / static_cast<double>(n_bar);
      out.levels.push_back(std::move(level));
      break;
    }

    Rng rng(options.seed ^ static_cast<std::uint64_t>(depth));
    auto sampled = sample_without_replacement(remaining, static_cast<std::size_t>((n_bar + 1) / 2), rng);
    std::sort(sampled.begin(), sampled.end());

    Instance sub = inst;
    sub.supplies = c;
    const VectorXd o = uniform_disagreement(sub, static_cast<double>(n_bar));
    const PaOutcome pa = pa_run(sub, o, sampled, options.solver);

    VectorXd used = VectorXd::Zero(m);
    for (Index i : sampled) {
      const double f = pa.assignment.probs.row(i).sum();
      P.row(i) = 0.5 * pa.assignment.probs.row(i) + (1.0 - 0.5 * f) * c.transpose() / static_cast<double>(n_bar);
      used += P.row(i).transpose();
    }
    c -= used;
    for (Index j = 0; j < m; ++j) {
      if (c(j) < -1e-8)
        throw Error(ErrorKind::SupplyUnderflow,
                    "item " + std::to_string(j) + " at depth " + std::to_string(depth) + ": " + std::to_string(c(j)));
      c(j) = std::clamp(c(j), 0.0, 1.0);
    }

    level.sampled = sampled;
    level.offsets = o;
    level.fractions = pa.fractions;
    out.levels.push_back(std::move(level));

    std::vector<Index> rest;
    std::set_difference(remaining.begin(), remaining.end(), sampled.begin(), sampled.end(), std::back_inserter(rest));
    remaining = std::move(rest);
  }
  return out;
}

std::vector<Index> preference_order(const MatrixXd& values, Index agent) {
  std::vector<Index> order(static_cast<std::size_t>(values.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return values(agent, a) > values(agent, b); });
  return order;
}

namespace {

struct SerialDictatorship {
  std::vector<std::vector<Index>> prefs;
  std::vector<char> taken;

  explicit SerialDictatorship(const Instance& inst) : taken(static_cast<std::size_t>(inst.n_items()), 0) {
    for (Index i = 0; i < inst.n_agents(); ++i) prefs.push_back(preference_order(inst.values, i));
  }

  Index pick(Index agent) const {
    for (Index j : prefs[agent])
      if (!taken[j]) return j;
    return -1;
  }
};

}  // namespace

FractionalAssignment rsd_exact(const Instance& inst) {
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  if (n > 10) throw Error(ErrorKind::TooLargeForExact, "exact RSD enumerates n! orders; n = " + std::to_string(n));
  require_unit_supplies(inst, "RSD");

  SerialDictatorship sd(inst);
  std::vector<std::uint64_t> factorial(static_cast<std::size_t>(n) + 1, 1);
  for (Index k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * static_cast<std::uint64_t>(k);

  // counts(i,j): number of orders in which i ends up with j
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);
  std::vector<char> placed(static_cast<std::size_t>(n), 0);

  auto dfs = [&](auto&& self, Index depth) -> void {
    if (depth == n) return;
    const std::uint64_t below = factorial[n - depth - 1];
    for (Index i = 0; i < n; ++i) {
      if (placed[i]) continue;
      const Index j = sd.pick(i);
      placed[i] = 1;
      if (j >= 0) {
        counts(i, j) += below;
        sd.taken[j] = 1;
      }
      self(self, depth + 1);
      if (j >= 0) sd.taken[j] = 0;
      placed[i] = 0;
    }
  };
  dfs(dfs, 0);

  FractionalAssignment out = FractionalAssignment::zeros(n, m);
  const double total = static_cast<double>(factorial[n]);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) out.probs(i, j) = static_cast<double>(counts(i, j)) / total;
  return out;
}

FractionalAssignment rsd_sampled(const Instance& inst, Index samples, std::uint64_t seed) {
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one sample");
  require_unit_supplies(inst, "RSD");
  SerialDictatorship sd(inst);
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);
  std::vector<Index> order = all_agents(inst);
  for (Index r = 0; r < samples; ++r) {
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    shuffle(order, rng);
    std::fill(sd.taken.begin(), sd.taken.end(), 0);
    for (Index i : order) {
      const Index j = sd.pick(i);
      if (j < 0) continue;
      ++counts(i, j);
      sd.taken[j] = 1;
    }
  }
  FractionalAssignment out = FractionalAssignment::zeros(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) out.probs(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(samples);
  return out;
}

FractionalAssignment ps_run(const Instance& inst) {
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  std::vector<std::vector<Index>> prefs;
  for (Index i = 0; i < n; ++i) prefs.push_back(preference_order(inst.values, i));
  VectorXd left = inst.supplies;
  std::vector<std::size_t> cursor(static_cast<std::size_t>(n), 0);
  FractionalAssignment out = FractionalAssignment::zeros(n, m);
  std::vector<Index> eaters(static_cast<std::size_t>(m));

  double t = 0.0;
  while (t < 1.0) {
    std::fill(eaters.begin(), eaters.end(), 0);
    bool anyone = false;
    for (Index i = 0; i < n; ++i) {
      auto& k = cursor[i];
      while (k < prefs[i].size() && left(prefs[i][k]) <= 0.0) ++k;
      if (k < prefs[i].size()) {
        ++eaters[prefs[i][k]];
        anyone = true;
      }
    }
    if (!anyone) break;
    double dt = 1.0 - t;
    for (Index j = 0; j < m; ++j)
      if (eaters[j] > 0) dt = std::min(dt, left(j) / static_cast<double>(eaters[j]));
    for (Index i = 0; i < n; ++i)
      if (cursor[i] < prefs[i].size()) out.probs(i, prefs[i][cursor[i]]) += dt;
    for (Index j = 0; j < m; ++j) {
      if (eaters[j] == 0) continue;
      const double eaten = dt * static_cast<double>(eaters[j]);
      // the item that set dt is exhausted exactly
      left(j) = eaten >= left(j) * (1.0 - 1e-12) ? 0.0 : left(j) - eaten;
    }
    t += dt;
    if (1.0 - t <= 1e-15) break;
  }
  return out;
}

const Mechanism& find_mechanism(const std::string& name) {
  static const std::map<std::string, Mechanism> registry = {
      {"pa",
       [](const Instance& inst, const MechanismConfig& cfg) {
         return pa_run(inst, VectorXd::Zero(inst.n_agents()), {}, cfg.solver).assignment;
       }},
      {"rpi",
       [](const Instance& inst, const MechanismConfig& cfg) {
         return rpi_run(inst, RpiOptions{cfg.n0, cfg.seed, cfg.solver}).assignment;
       }},
      {"rsd",
       [](const Instance& inst, const MechanismConfig& cfg) {
         return cfg.exact ? rsd_exact(inst) : rsd_sampled(inst, cfg.samples, cfg.seed);
       }},
      {"ps", [](const Instance& inst, const MechanismConfig&) { return ps_run(inst); }},
  };
  const auto it = registry.find(name);
  if (it == registry.end()) throw Error(ErrorKind::InvalidArgument, "unknown mechanism '" + name + "'");
  return it->second;
}

std::vector<std::string> mechanism_names() { return {"pa", "rpi", "rsd", "ps"}; }

}  // namespace matchlab

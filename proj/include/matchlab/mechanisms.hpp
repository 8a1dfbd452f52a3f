#pragma once

#include "matchlab/core.hpp"
#include "matchlab/nsw.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace matchlab {

struct PaOutcome {
  /// q = f_i p*_i for the participating agents, zero rows elsewhere.
  FractionalAssignment assignment;
  /// f_i for participating agents, zero elsewhere.
  VectorXd fractions;
  /// leave_one_out(i, k): u'_k in the solve without agent i; NaN where not defined.
  MatrixXd leave_one_out;
  NswSolution base;
  std::vector<Index> agents;
  /// Every participating agent was degenerate; f = 1 and q is the solver's fill.
  bool degenerate_all = false;
  /// Some leave-one-out solve had a different degenerate set than the base solve.
  bool degenerate_mismatch = false;
};

/// Partial allocation on the listed agents (all when empty) with the given
/// outside options, over the instance supplies. Products in f_i run over the
/// surpluses u_k - o_k of agents that are non-degenerate in both solves.
PaOutcome pa_run(const Instance& inst, const DisagreementPoint& offsets, const std::vector<Index>& agents = {},
                 const SolveOptions& options = {});

struct RpiLevel {
  Index depth = 0;
  std::vector<Index> remaining;
  std::vector<Index> sampled;
  VectorXd supplies;
  VectorXd offsets;
  VectorXd fractions;
};

struct RpiOutcome {
  FractionalAssignment assignment;
  std::vector<RpiLevel> levels;
};

struct RpiOptions {
  Index n0 = 4;
  std::uint64_t seed = 0;
  SolveOptions solver;
};

RpiOutcome rpi_run(const Instance& inst, const RpiOptions& options);

/// Random serial dictatorship averaged over all n! orders (n <= 10).
FractionalAssignment rsd_exact(const Instance& inst);
/// Random serial dictatorship averaged over `samples` seeded orders.
FractionalAssignment rsd_sampled(const Instance& inst, Index samples, std::uint64_t seed);

/// Probabilistic serial (simultaneous eating at unit speed).
FractionalAssignment ps_run(const Instance& inst);

/// Items in decreasing value, ties by smaller index.
std::vector<Index> preference_order(const MatrixXd& values, Index agent);

struct MechanismConfig {
  std::uint64_t seed = 0;
  Index n0 = 4;
  bool exact = true;
  Index samples = 1000;
  SolveOptions solver;
};

using Mechanism = std::function<FractionalAssignment(const Instance&, const MechanismConfig&)>;

/// "pa", "rpi", "rsd", "ps". Throws InvalidArgument for other names.
const Mechanism& find_mechanism(const std::string& name);
std::vector<std::string> mechanism_names();

}  // namespace matchlab

#pragma once

#include "matchlab/core.hpp"
#include "matchlab/mechanisms.hpp"
#include "matchlab/nsw.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace matchlab {

struct BenchmarkResult {
  DisagreementPoint disagreement;
  NswSolution solution;
  /// o_i + surplus_i.
  UtilityVector utilities;
};

/// Nash bargaining solution with the uniform random assignment as the
/// disagreement point.
BenchmarkResult benchmark(const Instance& inst, const SolveOptions& options = {});

struct RatioReport {
  /// benchmark_i / mechanism_i; +inf when the mechanism gives nothing to an
  /// agent with positive benchmark utility, 1 when both are zero.
  VectorXd ratios;
  double max_ratio = 1.0;
  Index worst_agent = -1;
};

RatioReport approx_ratio(const UtilityVector& mechanism, const UtilityVector& benchmark_utilities);
RatioReport approx_ratio(const Instance& inst, const FractionalAssignment& mechanism, const BenchmarkResult& bench);

struct RhoOptions {
  /// Offsets at the row averages instead of zero.
  bool bargaining = false;
  SolveOptions solver;
  unsigned threads = 0;
};

struct RhoSkip {
  std::vector<Index> subset;
  Index agent = -1;
};

struct RhoReport {
  double rho = 1.0;
  std::vector<Index> witness_subset;
  Index witness_agent = -1;
  double utility_before = 0.0;
  double utility_after = 0.0;
  /// Same maximum over subsets of size ceil(n/2) only.
  double half_rho = 1.0;
  std::vector<Index> half_witness_subset;
  Index half_witness_agent = -1;
  Index subsets = 0;
  /// Agent/subset pairs left out because the agent was degenerate in one of the solves.
  std::vector<RhoSkip> skipped;
};

/// Max over non-empty N' and i in N' of u_i(p) / u_i(p'), p the NSW optimum on
/// all agents and p' on N' (n <= 12).
RhoReport rho_exact(const Instance& inst, const RhoOptions& options = {});

struct RhoScanReport {
  std::string generator;
  std::uint64_t seed = 0;
  std::vector<double> rhos;
  std::vector<double> half_rhos;
  double max_rho = 1.0;
  Index argmax = -1;
  /// Histogram bin lower edges and counts.
  std::vector<double> bin_edges;
  std::vector<Index> bin_counts;
};

/// rho_exact over `trials` instances; trial k uses derive_seed(seed, k).
/// Injected instances are appended after the generated ones.
RhoScanReport rho_scan(const std::string& generator, Index trials, std::uint64_t seed,
                       const std::vector<Instance>& injected = {}, const RhoOptions& options = {});

struct AuditReport {
  double worst_gain = 0.0;
  Index worst_agent = -1;
  VectorXd worst_report;
  Index evaluated = 0;
};

/// Gain of agent i, in true values, from reporting `report` instead of its
/// true row, everyone else truthful.
double misreport_gain(const Instance& inst, const Mechanism& mechanism, const MechanismConfig& config, Index agent,
                      const VectorXd& report, const FractionalAssignment& truthful);

/// For every agent, `misreports` random reports (half fresh uniform rows, half
/// perturbations and reorderings of the true row); returns the largest gain.
/// Randomized mechanisms reuse config.seed in every run.
AuditReport truthfulness_audit(const Instance& inst, const std::string& mechanism, Index misreports,
                               std::uint64_t seed, const MechanismConfig& config = {});

}  // namespace matchlab

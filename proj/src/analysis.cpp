#include "matchlab/analysis.hpp"

#include "matchlab/instances.hpp"
#include "matchlab/parallel.hpp"
#include "matchlab/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace matchlab {

BenchmarkResult benchmark(const Instance& inst, const SolveOptions& options) {
  BenchmarkResult out;
  out.disagreement = uniform_disagreement(inst);
  NswProblem problem;
  problem.instance = inst;
  problem.offsets = out.disagreement;
  problem.complete = true;
  out.solution = solve(problem, options);
  out.utilities = out.solution.utilities;
  return out;
}

RatioReport approx_ratio(const UtilityVector& mechanism, const UtilityVector& benchmark_utilities) {
  if (mechanism.size() != benchmark_utilities.size())
    throw Error(ErrorKind::DimensionMismatch, "utility vectors differ in length");
  RatioReport out;
  out.ratios.resize(mechanism.size());
  for (Index i = 0; i < mechanism.size(); ++i) {
    const double b = benchmark_utilities(i);
    const double m = mechanism(i);
    double r;
    if (m > 0.0) r = b / m;
    else r = b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    out.ratios(i) = r;
    if (out.worst_agent < 0 || r > out.max_ratio) {
      out.max_ratio = r;
      out.worst_agent = i;
    }
  }
  return out;
}

RatioReport approx_ratio(const Instance& inst, const FractionalAssignment& mechanism, const BenchmarkResult& bench) {
  return approx_ratio(utilities(inst, mechanism), bench.utilities);
}

namespace {

struct SubsetResult {
  double ratio = 1.0;
  Index agent = -1;
  double before = 0.0;
  double after = 0.0;
  std::vector<RhoSkip> skipped;
};

bool contains(const std::vector<Index>& sorted, Index x) { return std::binary_search(sorted.begin(), sorted.end(), x); }

std::vector<Index> subset_of(std::uint64_t mask, Index n) {
  std::vector<Index> s;
  for (Index i = 0; i < n; ++i)
    if (mask >> i & 1U) s.push_back(i);
  return s;
}

}  // namespace

RhoReport rho_exact(const Instance& inst, const RhoOptions& options) {
  const Index n = inst.n_agents();
  if (n > 12) throw Error(ErrorKind::TooLargeForExact, "rho enumerates 2^n subsets; n = " + std::to_string(n));
  NswProblem problem;
  problem.instance = inst;
  problem.offsets = options.bargaining ? uniform_disagreement(inst) : VectorXd::Zero(n);
  const NswSolution full = solve(problem, options.solver);

  const std::uint64_t count = (std::uint64_t{1} << n) - 1;
  std::vector<SubsetResult> results(static_cast<std::size_t>(count));
  parallel_for(
      static_cast<std::size_t>(count),
      [&](std::size_t k) {
        const std::uint64_t mask = k + 1;
        NswProblem sub = problem;
        sub.active_agents = subset_of(mask, n);
        const NswSolution sol = solve(sub, options.solver);
        SubsetResult& res = results[k];
        for (Index i : sub.active_agents) {
          if (contains(full.degenerate_agents, i) || contains(sol.degenerate_agents, i) || !(sol.utilities(i) > 0.0)) {
            res.skipped.push_back({sub.active_agents, i});
            continue;
          }
          const double r = full.utilities(i) / sol.utilities(i);
          if (res.agent < 0 || r > res.ratio) {
            res.ratio = r;
            res.agent = i;
            res.before = full.utilities(i);
            res.after = sol.utilities(i);
          }
        }
      },
      options.threads);

  RhoReport out;
  out.subsets = static_cast<Index>(count);
  const int half = static_cast<int>((n + 1) / 2);
  bool have = false, have_half = false;
  for (std::uint64_t k = 0; k < count; ++k) {
    const SubsetResult& res = results[k];
    out.skipped.insert(out.skipped.end(), res.skipped.begin(), res.skipped.end());
    if (res.agent < 0) continue;
    const std::uint64_t mask = k + 1;
    if (!have || res.ratio > out.rho) {
      have = true;
      out.rho = res.ratio;
      out.witness_subset = subset_of(mask, n);
      out.witness_agent = res.agent;
      out.utility_before = res.before;
      out.utility_after = res.after;
    }
    if (std::popcount(mask) == half && (!have_half || res.ratio > out.half_rho)) {
      have_half = true;
      out.half_rho = res.ratio;
      out.half_witness_subset = subset_of(mask, n);
      out.half_witness_agent = res.agent;
    }
  }
  return out;
}

RhoScanReport rho_scan(const std::string& generator, Index trials, std::uint64_t seed,
                       const std::vector<Instance>& injected, const RhoOptions& options) {
  if (trials < 1) throw Error(ErrorKind::InvalidArgument, "rho scan needs at least one trial");
  const GeneratorSpec spec = parse_generator(generator);
  std::vector<Instance> instances;
  for (Index k = 0; k < trials; ++k) instances.push_back(generate(spec, derive_seed(seed, static_cast<std::uint64_t>(k))));
  instances.insert(instances.end(), injected.begin(), injected.end());

  RhoScanReport out;
  out.generator = generator;
  out.seed = seed;
  out.rhos.resize(instances.size());
  out.half_rhos.resize(instances.size());
  RhoOptions inner = options;
  inner.threads = 1;
  parallel_for(
      instances.size(),
      [&](std::size_t k) {
        const RhoReport r = rho_exact(instances[k], inner);
        out.rhos[k] = r.rho;
        out.half_rhos[k] = r.half_rho;
      },
      options.threads);

  for (std::size_t k = 0; k < out.rhos.size(); ++k) {
    if (out.argmax < 0 || out.rhos[k] > out.max_rho) {
      out.max_rho = out.rhos[k];
      out.argmax = static_cast<Index>(k);
    }
  }
  const double lo = *std::min_element(out.rhos.begin(), out.rhos.end());
  const double hi = out.max_rho;
  const int bins = hi - lo > 1e-12 ? 10 : 1;
  const double width = bins > 1 ? (hi - lo) / bins : 1.0;
  out.bin_counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b < bins; ++b) out.bin_edges.push_back(lo + b * width);
  for (double r : out.rhos) {
    const int b = std::min(bins - 1, static_cast<int>((r - lo) / width));
    ++out.bin_counts[static_cast<std::size_t>(b)];
  }
  return out;
}

double misreport_gain(const Instance& inst, const Mechanism& mechanism, const MechanismConfig& config, Index agent,
                      const VectorXd& report, const FractionalAssignment& truthful) {
  Instance lie = inst;
  lie.values.row(agent) = report.transpose();
  const FractionalAssignment p = mechanism(lie, config);
  return inst.values.row(agent).dot(p.probs.row(agent) - truthful.probs.row(agent));
}

AuditReport truthfulness_audit(const Instance& inst, const std::string& mechanism, Index misreports,
                               std::uint64_t seed, const MechanismConfig& config) {
  const Mechanism& mech = find_mechanism(mechanism);
  const Index n = inst.n_agents();
  const Index m = inst.n_items();
  const FractionalAssignment truthful = mech(inst, config);

  const std::size_t total = static_cast<std::size_t>(n * misreports);
  std::vector<double> gains(total, -std::numeric_limits<double>::infinity());
  std::vector<VectorXd> reports(total);
  parallel_for(total, [&](std::size_t k) {
    const Index i = static_cast<Index>(k) / misreports;
    const Index r = static_cast<Index>(k) % misreports;
    Rng rng(derive_seed(seed, k));
    const VectorXd truth = inst.values.row(i).transpose();
    const double scale = truth.maxCoeff() > 0.0 ? truth.maxCoeff() : 1.0;
    VectorXd w(m);
    if (r < misreports / 2) {
      for (Index j = 0; j < m; ++j) w(j) = scale * uniform01(rng);
    } else {
      for (Index j = 0; j < m; ++j) w(j) = truth(j) * (0.5 + uniform01(rng));
      if (m > 1) {
        const Index a = uniform_index(rng, m);
        const Index b = uniform_index(rng, m);
        std::swap(w(a), w(b));
      }
    }
    reports[k] = w;
    gains[k] = misreport_gain(inst, mech, config, i, w, truthful);
  });

  AuditReport out;
  out.evaluated = static_cast<Index>(total);
  out.worst_gain = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < total; ++k) {
    if (gains[k] > out.worst_gain) {
      out.worst_gain = gains[k];
      out.worst_agent = static_cast<Index>(k) / misreports;
      out.worst_report = reports[k];
    }
  }
  return out;
}

}  // namespace matchlab

#include "matchlab/analysis.hpp"
#include "matchlab/instances.hpp"
#include "matchlab/io.hpp"
#include "matchlab/lottery.hpp"
#include "matchlab/lowerbound.hpp"
#include "matchlab/mechanisms.hpp"
#include "matchlab/nsw.hpp"
#include "matchlab/parallel.hpp"
#include "matchlab/random.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace matchlab;

namespace {

struct RunConfig {
  std::string instance_path;
  std::string generator;
  std::uint64_t seed = 0;
  double tol = 1e-7;
  std::string out = "out";
  std::string agents;
  bool bargaining = false;

  std::string mechanism;
  Index n0 = 4;
  Index reps = 1;
  Index samples = 0;
  bool lottery = false;
  Index audit = 0;

  Index scan = 0;
  Index misreports = 20;

  Index depth = 1;
  bool certify = false;
  Index expand = 0;

  std::string probs_path;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::NotOptimal:
    case ErrorKind::Infeasible:
    case ErrorKind::DegenerateNormalization:
    case ErrorKind::SupplyUnderflow:
    case ErrorKind::NotDecomposable:
      return 2;
    default:
      return 1;
  }
}

Instance load_input(const RunConfig& cfg) {
  if (!cfg.instance_path.empty() && !cfg.generator.empty())
    throw Error(ErrorKind::InvalidArgument, "give either --instance or --gen, not both");
  if (!cfg.instance_path.empty()) return load_instance(cfg.instance_path);
  if (!cfg.generator.empty()) return generate(cfg.generator, cfg.seed);
  throw Error(ErrorKind::InvalidArgument, "no instance: use --instance FILE or --gen SPEC");
}

std::vector<Index> parse_agents(const Instance& inst, const std::string& text) {
  std::vector<Index> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    Index idx = -1;
    for (std::size_t k = 0; k < inst.agent_labels.size(); ++k)
      if (inst.agent_labels[k] == tok) idx = static_cast<Index>(k);
    if (idx < 0) {
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || idx < 0 || idx >= inst.n_agents())
        throw Error(ErrorKind::InvalidArgument, "unknown agent '" + tok + "'");
    }
    out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Json metadata(const std::string& command, const RunConfig& cfg, const Instance* inst) {
  Json m = Json::object();
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = cfg.seed;
  m["tol"] = cfg.tol;
  if (inst) m["instance_hash"] = instance_hash(*inst);
  if (!cfg.generator.empty()) m["generator"] = cfg.generator;
  if (!cfg.instance_path.empty()) m["instance_path"] = cfg.instance_path;
  return m;
}

std::string fmt(const VectorXd& v) {
  std::ostringstream os;
  os << "[";
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << "]";
  return os.str();
}

SolveOptions solver_options(const RunConfig& cfg) {
  SolveOptions o;
  o.tol = cfg.tol;
  return o;
}

Json agents_json(const std::vector<Index>& agents) { return Json(agents); }

int cmd_solve(const RunConfig& cfg) {
  const Instance inst = load_input(cfg);
  NswProblem prob;
  prob.instance = inst;
  prob.active_agents = parse_agents(inst, cfg.agents);
  prob.offsets = cfg.bargaining ? uniform_disagreement(inst) : VectorXd::Zero(inst.n_agents());
  const NswSolution sol = solve(prob, solver_options(cfg));

  Json doc = Json::object();
  doc["metadata"] = metadata("solve", cfg, &inst);
  doc["active_agents"] = agents_json(sol.active_agents);
  doc["offsets"] = vector_to_json(prob.offsets);
  doc["probs"] = matrix_to_json(sol.assignment.probs);
  doc["utilities"] = vector_to_json(sol.utilities);
  doc["surplus"] = vector_to_json(sol.surplus);
  doc["objective"] = number_to_json(sol.objective);
  doc["item_prices"] = vector_to_json(sol.duals.item_prices);
  doc["agent_prices"] = vector_to_json(sol.duals.agent_prices);
  doc["kkt_residual"] = sol.kkt_residual;
  doc["degenerate_agents"] = agents_json(sol.degenerate_agents);
  doc["iterations"] = sol.iterations;
  const std::string path = output_path(cfg.out, "solution.json");
  write_json(path, doc);

  VectorXd shown(static_cast<Index>(sol.active_agents.size()));
  for (std::size_t k = 0; k < sol.active_agents.size(); ++k) shown(static_cast<Index>(k)) = sol.utilities(sol.active_agents[k]);
  std::cout << "solve: utilities " << fmt(shown) << " kkt " << sol.kkt_residual << " -> " << path << "\n";
  return 0;
}

int cmd_mech(const RunConfig& cfg) {
  const Instance inst = load_input(cfg);
  const Mechanism& mech = find_mechanism(cfg.mechanism);
  if (cfg.reps < 1) throw Error(ErrorKind::InvalidArgument, "--reps must be at least 1");
  MechanismConfig mc;
  mc.seed = cfg.seed;
  mc.n0 = cfg.n0;
  mc.exact = cfg.samples == 0;
  if (cfg.samples > 0) mc.samples = cfg.samples;
  mc.solver = solver_options(cfg);

  const bool randomized = cfg.mechanism == "rpi" || (cfg.mechanism == "rsd" && !mc.exact);
  const Index reps = randomized ? cfg.reps : 1;
  std::vector<MatrixXd> runs(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    MechanismConfig c = mc;
    if (reps > 1) c.seed = derive_seed(cfg.seed, r);
    runs[r] = mech(inst, c).probs;
  });

  const Index n = inst.n_agents();
  MatrixXd mean = MatrixXd::Zero(n, inst.n_items());
  for (const auto& p : runs) mean += p;
  mean /= static_cast<double>(reps);
  VectorXd util = utilities(inst.values, mean);
  VectorXd stderr_u = VectorXd::Zero(n);
  if (reps > 1) {
    for (const auto& p : runs) stderr_u += (utilities(inst.values, p) - util).cwiseAbs2();
    stderr_u = (stderr_u / static_cast<double>(reps - 1) / static_cast<double>(reps)).cwiseSqrt();
  }

  const BenchmarkResult bench = benchmark(inst, solver_options(cfg));
  const RatioReport ratio = approx_ratio(util, bench.utilities);

  Report report;
  report.mechanism = cfg.mechanism;
  report.seed = cfg.seed;
  report.probs = mean;
  report.utilities = util;
  report.benchmark_utilities = bench.utilities;
  report.ratios = ratio.ratios;
  report.metadata = metadata("mech", cfg, &inst);
  report.metadata["reps"] = reps;
  report.metadata["exact"] = mc.exact;
  report.metadata["n0"] = cfg.n0;
  Json doc = report_to_json(report);
  doc["utility_stderr"] = vector_to_json(stderr_u);
  doc["max_ratio"] = number_to_json(ratio.max_ratio);
  doc["worst_agent"] = ratio.worst_agent;
  if (cfg.lottery) {
    const Lottery lot = decompose(mean, std::max(cfg.tol, 1e-9));
    doc["lottery"] = lottery_to_json(lot);
    doc["lottery_residual"] = lot.residual;
  }
  if (cfg.audit > 0) {
    const AuditReport a = truthfulness_audit(inst, cfg.mechanism, cfg.audit, cfg.seed, mc);
    doc["audit"] = {{"misreports_per_agent", cfg.audit},
                    {"evaluated", a.evaluated},
                    {"worst_gain", a.worst_gain},
                    {"worst_agent", a.worst_agent},
                    {"worst_report", vector_to_json(a.worst_report)}};
  }
  const std::string path = output_path(cfg.out, "mech_" + cfg.mechanism + ".json");
  write_json(path, doc);

  std::cout << "mech " << cfg.mechanism << ": utilities " << fmt(util);
  if (reps > 1) std::cout << " stderr " << fmt(stderr_u);
  std::cout << " max ratio " << ratio.max_ratio << " (agent " << ratio.worst_agent << ") -> " << path << "\n";
  return 0;
}

int cmd_rho(const RunConfig& cfg) {
  RhoOptions opt;
  opt.bargaining = cfg.bargaining;
  opt.solver = solver_options(cfg);
  if (cfg.scan > 0) {
    if (cfg.generator.empty()) throw Error(ErrorKind::InvalidArgument, "--scan needs --gen");
    const RhoScanReport r = rho_scan(cfg.generator, cfg.scan, cfg.seed, {}, opt);
    Json doc = Json::object();
    doc["metadata"] = metadata("rho-scan", cfg, nullptr);
    doc["trials"] = cfg.scan;
    doc["rhos"] = r.rhos;
    doc["half_rhos"] = r.half_rhos;
    doc["max_rho"] = r.max_rho;
    doc["argmax"] = r.argmax;
    doc["argmax_instance_hash"] = instance_hash(generate(cfg.generator, derive_seed(cfg.seed, static_cast<std::uint64_t>(r.argmax))));
    doc["bin_edges"] = r.bin_edges;
    doc["bin_counts"] = r.bin_counts;
    const std::string path = output_path(cfg.out, "rho_scan.json");
    write_json(path, doc);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < r.rhos.size(); ++k) rows.push_back({static_cast<double>(k), r.rhos[k], r.half_rhos[k]});
    write_csv(output_path(cfg.out, "rho_scan.csv"), {"trial", "rho", "half_rho"}, rows);
    std::cout << "rho scan: " << cfg.scan << " instances, max rho " << r.max_rho << " at trial " << r.argmax << " -> "
              << path << "\n";
    return 0;
  }
  const Instance inst = load_input(cfg);
  const RhoReport r = rho_exact(inst, opt);
  Json doc = Json::object();
  doc["metadata"] = metadata("rho", cfg, &inst);
  doc["bargaining"] = cfg.bargaining;
  doc["rho"] = r.rho;
  doc["witness_subset"] = agents_json(r.witness_subset);
  doc["witness_agent"] = r.witness_agent;
  doc["utility_before"] = r.utility_before;
  doc["utility_after"] = r.utility_after;
  doc["half_rho"] = r.half_rho;
  doc["half_witness_subset"] = agents_json(r.half_witness_subset);
  doc["half_witness_agent"] = r.half_witness_agent;
  doc["subsets"] = r.subsets;
  Json skipped = Json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"subset", s.subset}, {"agent", s.agent}});
  doc["skipped"] = skipped;
  const std::string path = output_path(cfg.out, "rho.json");
  write_json(path, doc);
  std::cout << "rho: " << r.rho << " (agent " << r.witness_agent << ", " << r.subsets << " subsets) -> " << path << "\n";
  return 0;
}

int cmd_audit(const RunConfig& cfg) {
  const Instance inst = load_input(cfg);
  MechanismConfig mc;
  mc.seed = cfg.seed;
  mc.n0 = cfg.n0;
  mc.solver = solver_options(cfg);
  const AuditReport r = truthfulness_audit(inst, cfg.mechanism, cfg.misreports, cfg.seed, mc);
  Json doc = Json::object();
  doc["metadata"] = metadata("audit", cfg, &inst);
  doc["mechanism"] = cfg.mechanism;
  doc["misreports_per_agent"] = cfg.misreports;
  doc["evaluated"] = r.evaluated;
  doc["worst_gain"] = r.worst_gain;
  doc["worst_agent"] = r.worst_agent;
  doc["worst_report"] = vector_to_json(r.worst_report);
  const std::string path = output_path(cfg.out, "audit_" + cfg.mechanism + ".json");
  write_json(path, doc);
  std::cout << "audit " << cfg.mechanism << ": worst gain " << r.worst_gain << " over " << r.evaluated
            << " misreports -> " << path << "\n";
  return 0;
}

Json rational_matrix(const Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(to_string(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json rational_vector(const Eigen::Matrix<Rational, Eigen::Dynamic, 1>& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(to_string(v(i)));
  return out;
}

Json table_json(const LowerBoundTable& t) {
  return {{"name", t.name},
          {"agent_labels", t.agent_labels},
          {"item_labels", t.item_labels},
          {"agent_sizes", rational_vector(t.market.agent_size)},
          {"item_sizes", rational_vector(t.market.supplies)},
          {"values", rational_matrix(t.market.values)},
          {"probs", rational_matrix(t.market.probs)},
          {"item_prices", rational_vector(t.duals.item_prices)},
          {"agent_prices", rational_vector(t.duals.agent_prices)}};
}

int cmd_lowerbound(const RunConfig& cfg) {
  const LowerBoundParams p = lowerbound_params(cfg.depth);
  const ParamChecks checks = check_params(p);
  Json levels = Json::array();
  for (const auto& L : p.levels)
    levels.push_back({{"r", L.r},
                      {"v", to_string(L.v)},
                      {"high_regime", L.high_regime},
                      {"s_a", L.s_a.str()},
                      {"s_b", L.s_b.str()},
                      {"s_c", L.s_c.str()},
                      {"s_d", L.s_d.str()},
                      {"s_f", L.s_f.str()},
                      {"s_g", L.s_g.str()},
                      {"s_h", L.s_h.str()},
                      {"k", L.k.str()},
                      {"vI_f", to_string(L.vI_f)},
                      {"vI_g", to_string(L.vI_g)},
                      {"vI_h", to_string(L.vI_h)},
                      {"vF_f", to_string(L.vF_f)},
                      {"vF_g", to_string(L.vF_g)},
                      {"vF_h", to_string(L.vF_h)}});
  Json params = Json::object();
  params["metadata"] = metadata("lowerbound", cfg, nullptr);
  params["s"] = p.s;
  params["k0"] = p.k0.str();
  params["n_agents"] = p.n_agents.str();
  params["n_items"] = p.n_items.str();
  params["levels"] = levels;
  params["checks"] = {{"identities", checks.identities},
                      {"divisible_by_14", checks.divisible_by_14},
                      {"size_bound", checks.size_bound},
                      {"values_valid", checks.values_valid},
                      {"k0_bound", checks.k0_bound},
                      {"failures", checks.failures}};
  params["loser_ratio"] = to_string(loser_ratio(p));

  bool all_zero = true;
  std::vector<LowerBoundTable> tables;
  const bool need_tables = cfg.certify || p.s <= 3;
  if (need_tables) tables = lowerbound_tables(p);
  if (cfg.certify) {
    Json certs = Json::array();
    for (const auto& t : tables) {
      const TableCertificate c = certify_lowerbound_table(t);
      const auto& r = c.report;
      all_zero = all_zero && r.residual == 0;
      Json entry = {{"table", c.name},
                    {"residual", to_string(r.residual)},
                    {"sign", to_string(r.sign)},
                    {"slackness", to_string(r.slackness)},
                    {"stationarity", to_string(r.stationarity)},
                    {"feasibility", to_string(r.feasibility)}};
      if (r.worst_agent >= 0) {
        entry["worst_agent"] = t.agent_labels[static_cast<std::size_t>(r.worst_agent)];
        if (r.worst_item >= 0) entry["worst_item"] = t.item_labels[static_cast<std::size_t>(r.worst_item)];
      }
      certs.push_back(entry);
    }
    params["certificates"] = certs;
  }
  write_json(output_path(cfg.out, "params.json"), params);

  if (!tables.empty()) {
    const LowerBoundTable* initial = nullptr;
    const LowerBoundTable* final_eq = nullptr;
    for (const auto& t : tables) {
      if (t.name == "chained market, initial") initial = &t;
      if (t.name == "chained market, final") final_eq = &t;
    }
    Json inst = table_json(*initial);
    inst.erase("probs");
    inst.erase("item_prices");
    inst.erase("agent_prices");
    inst["metadata"] = metadata("lowerbound", cfg, nullptr);
    write_json(output_path(cfg.out, "instance.json"), inst);
    write_json(output_path(cfg.out, "initial_assignment.json"), table_json(*initial));
    write_json(output_path(cfg.out, "final_assignment.json"), table_json(*final_eq));
    Json removed = Json::array();
    for (const auto& a : initial->agent_labels)
      if (std::find(final_eq->agent_labels.begin(), final_eq->agent_labels.end(), a) == final_eq->agent_labels.end())
        removed.push_back(a);
    write_json(output_path(cfg.out, "removal_set.json"), {{"removed", removed}, {"loser", "e_" + std::to_string(p.s)}});
  }
  if (cfg.expand > 0) {
    const ExpandedLowerBound e = expand_lowerbound(p, cfg.expand);
    save_instance(output_path(cfg.out, "expanded_instance.json"), e.instance);
  }

  std::cout << "lowerbound s=" << p.s << ": n=" << p.n_agents << " k0=" << p.k0
            << " identities=" << (checks.identities ? "ok" : "FAIL") << " k0_bound=" << (checks.k0_bound ? "ok" : "FAIL")
            << " loser_ratio=" << to_string(loser_ratio(p));
  if (cfg.certify) std::cout << " certificates=" << (all_zero ? "exact" : "NONZERO");
  std::cout << " -> " << cfg.out << "\n";
  return 0;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.generator.empty()) throw Error(ErrorKind::InvalidArgument, "gen needs --gen SPEC");
  const Instance inst = generate(cfg.generator, cfg.seed);
  const std::string path = output_path(cfg.out, "instance.json");
  Json doc = instance_to_json(inst);
  doc["metadata"] = metadata("gen", cfg, &inst);
  write_json(path, doc);
  std::cout << "gen " << cfg.generator << ": " << inst.n_agents() << "x" << inst.n_items() << " hash "
            << instance_hash(inst) << " -> " << path << "\n";
  return 0;
}

MatrixXd load_probs(const std::string& path) {
  const Json doc = read_json(path);
  const Json* rows = &doc;
  if (doc.is_object()) {
    if (!doc.contains("probs")) throw ParseError(path, 1, 1, "probs", "expected a \"probs\" matrix");
    rows = &doc["probs"];
  }
  if (!rows->is_array() || rows->empty() || !(*rows)[0].is_array())
    throw ParseError(path, 1, 1, "probs", "expected a non-empty array of rows");
  const Index n = static_cast<Index>(rows->size());
  const Index m = static_cast<Index>((*rows)[0].size());
  MatrixXd p(n, m);
  for (Index i = 0; i < n; ++i) {
    const Json& row = (*rows)[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != m)
      throw ParseError(path, 1, 1, "probs", "row " + std::to_string(i) + " has the wrong length");
    for (Index j = 0; j < m; ++j) {
      const Json& x = row[static_cast<std::size_t>(j)];
      if (!x.is_number()) throw ParseError(path, 1, 1, "probs", "non-numeric entry in row " + std::to_string(i));
      p(i, j) = x.get<double>();
    }
  }
  return p;
}

int cmd_decompose(const RunConfig& cfg) {
  if (cfg.probs_path.empty()) throw Error(ErrorKind::InvalidArgument, "decompose needs --probs FILE");
  const MatrixXd p = load_probs(cfg.probs_path);
  const Lottery lot = decompose(p, std::max(cfg.tol, 1e-9));
  Json doc = Json::object();
  doc["metadata"] = metadata("decompose", cfg, nullptr);
  doc["n_agents"] = lot.n_agents;
  doc["n_items"] = lot.n_items;
  doc["residual"] = lot.residual;
  doc["reconstruction_error"] = (lot.marginals() - p).cwiseAbs().maxCoeff();
  doc["terms"] = lottery_to_json(lot);
  const auto draw = sample(lot, cfg.seed);
  doc["sample"] = draw;
  const std::string path = output_path(cfg.out, "lottery.json");
  write_json(path, doc);
  std::cout << "decompose: " << lot.terms.size() << " matchings, reconstruction error "
            << doc["reconstruction_error"].get<double>() << " -> " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  if (const char* env = std::getenv("MATCHLAB_TOL")) {
    try {
      cfg.tol = std::stod(env);
    } catch (const std::exception&) {
      std::cerr << "error: MATCHLAB_TOL is not a number: " << env << "\n";
      return 1;
    }
  }

  CLI::App app{"Cardinal one-sided matching: Nash social welfare, PA/RPI/RSD/PS mechanisms, rho, lower-bound family"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", cfg.seed, "Random seed (recorded in every report)");
  app.add_option("--tol", cfg.tol, "Solver tolerance (default 1e-7 or MATCHLAB_TOL)");
  app.add_option("--out", cfg.out, "Output directory")->capture_default_str();

  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--instance", cfg.instance_path, "Instance JSON file");
    sub->add_option("--gen", cfg.generator, generator_help());
  };

  auto* solve_cmd = app.add_subcommand("solve", "Nash social welfare optimum, with duals and KKT residual");
  add_input(solve_cmd);
  solve_cmd->add_option("--agents", cfg.agents, "Comma-separated agent labels or indices");
  solve_cmd->add_flag("--bargaining", cfg.bargaining, "Use the uniform random assignment as disagreement point");

  auto* mech_cmd = app.add_subcommand("mech", "Run a mechanism and compare with the Nash bargaining benchmark");
  mech_cmd->add_option("mechanism", cfg.mechanism, "pa, rpi, rsd or ps")->required();
  add_input(mech_cmd);
  mech_cmd->add_option("--n0", cfg.n0, "RPI base-case size")->capture_default_str();
  mech_cmd->add_option("--reps", cfg.reps, "Monte-Carlo repetitions for randomized mechanisms")->capture_default_str();
  mech_cmd->add_flag("--exact", [&](std::int64_t) { cfg.samples = 0; }, "Exact RSD over all orders (default)");
  mech_cmd->add_option("--samples", cfg.samples, "Sampled RSD with this many orders");
  mech_cmd->add_flag("--lottery", cfg.lottery, "Attach a lottery over matchings");
  mech_cmd->add_option("--audit", cfg.audit, "Truthfulness audit with this many misreports per agent");

  auto* rho_cmd = app.add_subcommand("rho", "Utility monotonicity factor rho");
  add_input(rho_cmd);
  rho_cmd->add_flag("--bargaining", cfg.bargaining, "Offsets at the row averages");
  rho_cmd->add_option("--scan", cfg.scan, "Scan this many generated instances (needs --gen)");

  auto* audit_cmd = app.add_subcommand("audit", "Search for profitable misreports");
  audit_cmd->add_option("mechanism", cfg.mechanism, "pa, rpi, rsd or ps")->required();
  add_input(audit_cmd);
  audit_cmd->add_option("--misreports", cfg.misreports, "Misreports per agent")->capture_default_str();
  audit_cmd->add_option("--n0", cfg.n0, "RPI base-case size")->capture_default_str();

  auto* lb_cmd = app.add_subcommand("lowerbound", "Parameters, tables and certificates of the chained lower-bound market");
  lb_cmd->add_option("--s", cfg.depth, "Number of levels")->capture_default_str();
  lb_cmd->add_flag("--certify", cfg.certify, "Check every equilibrium table in exact arithmetic");
  lb_cmd->add_option("--expand", cfg.expand, "Also write the unit-expanded instance if it has at most this many agents");

  auto* gen_cmd = app.add_subcommand("gen", "Write a generated instance");
  gen_cmd->add_option("--gen", cfg.generator, generator_help())->required();

  auto* dec_cmd = app.add_subcommand("decompose", "Birkhoff-von Neumann decomposition of an assignment");
  dec_cmd->add_option("--probs", cfg.probs_path, "JSON file with a matrix or an object with \"probs\"")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve_cmd) return cmd_solve(cfg);
    if (*mech_cmd) return cmd_mech(cfg);
    if (*rho_cmd) return cmd_rho(cfg);
    if (*audit_cmd) return cmd_audit(cfg);
    if (*lb_cmd) return cmd_lowerbound(cfg);
    if (*gen_cmd) return cmd_gen(cfg);
    if (*dec_cmd) return cmd_decompose(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

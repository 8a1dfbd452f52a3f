#include "matchlab/instances.hpp"

#include "matchlab/random.hpp"

#include <charconv>
#include <cmath>

namespace matchlab {
namespace {

Index as_count(double x, const std::string& spec) {
  if (!(x >= 1.0) || x != std::floor(x) || x > 1e6)
    throw Error(ErrorKind::InvalidArgument, "'" + spec + "': size must be a positive integer");
  return static_cast<Index>(x);
}

void expect_args(const GeneratorSpec& g, std::size_t count) {
  if (g.args.size() != count)
    throw Error(ErrorKind::InvalidArgument,
                "'" + g.text + "' takes " + std::to_string(count) + " argument(s); " + generator_help());
}

}  // namespace

Instance gen_random(Index n, const RandomFamily& family, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  Rng rng(seed);
  MatrixXd v(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      switch (family.kind) {
        case Distribution::Uniform01:
          v(i, j) = uniform01(rng);
          break;
        case Distribution::Grid:
          v(i, j) = static_cast<double>(uniform_index(rng, family.grid_k + 1)) / family.grid_k;
          break;
        case Distribution::Sparse: {
          const double u = uniform01(rng);
          const double x = uniform01(rng);
          v(i, j) = u < family.zero_prob ? 0.0 : x;
          break;
        }
      }
    }
  }
  return make_instance(std::move(v));
}

Instance gen_rsd_worst(Index n, double eps) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  MatrixXd v = MatrixXd::Zero(n, n);
  v.col(0).setOnes();
  for (Index i = 1; i < n; ++i) v(i, i) = 1.0 - eps;
  return make_instance(std::move(v));
}

Instance gen_ordinal_worst(Index n, double eps) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "the ordinal instance needs n >= 2");
  MatrixXd v = MatrixXd::Zero(n, n);
  v(0, 0) = 1.0;
  v(0, 1) = eps;
  for (Index i = 1; i + 1 < n; ++i) {
    v(i, 0) = 1.0;
    v(i, i + 1) = 1.0 - eps;
  }
  for (Index j = 1; j < n; ++j) v(n - 1, j) = 1.0;
  return make_instance(std::move(v));
}

Instance table1_instance() {
  MatrixXd v(3, 3);
  v << 1, 2, 0, 0, 2, 1, 0, 0, 1;
  Instance inst = make_instance(std::move(v));
  inst.agent_labels = {"a", "b", "c"};
  inst.item_labels = {"A", "B", "C"};
  return inst;
}

GeneratorSpec parse_generator(const std::string& spec) {
  GeneratorSpec g;
  g.text = spec;
  const auto colon = spec.find(':');
  g.name = spec.substr(0, colon);
  if (colon == std::string::npos) return g;
  std::string rest = spec.substr(colon + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    const std::string tok = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
      throw Error(ErrorKind::InvalidArgument, "'" + spec + "': cannot read number '" + tok + "'");
    g.args.push_back(x);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return g;
}

Instance generate(const GeneratorSpec& g, std::uint64_t seed) {
  if (g.name == "uniform" || g.name == "random") {
    expect_args(g, 1);
    return gen_random(as_count(g.args[0], g.text), {}, seed);
  }
  if (g.name == "grid") {
    expect_args(g, 2);
    RandomFamily f{Distribution::Grid, static_cast<int>(as_count(g.args[1], g.text)), 0.0};
    return gen_random(as_count(g.args[0], g.text), f, seed);
  }
  if (g.name == "sparse") {
    expect_args(g, 2);
    if (!(g.args[1] >= 0.0 && g.args[1] <= 1.0))
      throw Error(ErrorKind::InvalidArgument, "'" + g.text + "': zero probability outside [0,1]");
    RandomFamily f{Distribution::Sparse, 2, g.args[1]};
    return gen_random(as_count(g.args[0], g.text), f, seed);
  }
  if (g.name == "rsd-worst") {
    expect_args(g, 2);
    return gen_rsd_worst(as_count(g.args[0], g.text), g.args[1]);
  }
  if (g.name == "ordinal-worst") {
    expect_args(g, 2);
    return gen_ordinal_worst(as_count(g.args[0], g.text), g.args[1]);
  }
  if (g.name == "table1") {
    expect_args(g, 0);
    return table1_instance();
  }
  throw Error(ErrorKind::InvalidArgument, "unknown generator '" + g.name + "'; " + generator_help());
}

Instance generate(const std::string& spec, std::uint64_t seed) { return generate(parse_generator(spec), seed); }

std::string generator_help() {
  return "generators: uniform:n, random:n, grid:n,k, sparse:n,p, rsd-worst:n,eps, ordinal-worst:n,eps, table1";
}

}  // namespace matchlab

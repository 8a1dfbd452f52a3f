#pragma once

#include "matchlab/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace matchlab {

enum class Distribution { Uniform01, Grid, Sparse };

struct RandomFamily {
  Distribution kind = Distribution::Uniform01;
  /// Grid: entries from {0, 1/k, ..., 1}.
  int grid_k = 2;
  /// Sparse: each entry is zero with this probability, else uniform in [0,1).
  double zero_prob = 0.5;
};

Instance gen_random(Index n, const RandomFamily& family, std::uint64_t seed);

/// Row 1 = e_1; row i >= 2 has 1 for item 1 and 1-eps for item i.
Instance gen_rsd_worst(Index n, double eps);

/// Row 1 = (1, eps, 0, ...); row i in 2..n-1 has 1 for item 1 and 1-eps for
/// item i+1; row n = (0, 1, ..., 1).
Instance gen_ordinal_worst(Index n, double eps);

/// Three agents a, b, c and items A, B, C with values [[1,2,0],[0,2,1],[0,0,1]].
Instance table1_instance();

/// "name:arg1,arg2". Names: uniform:n, random:n (same as uniform), grid:n,k,
/// sparse:n,p, rsd-worst:n,eps, ordinal-worst:n,eps, table1.
struct GeneratorSpec {
  std::string name;
  std::vector<double> args;
  std::string text;
};

GeneratorSpec parse_generator(const std::string& spec);
Instance generate(const GeneratorSpec& spec, std::uint64_t seed);
Instance generate(const std::string& spec, std::uint64_t seed);
std::string generator_help();

}  // namespace matchlab

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace matchlab {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-agent expected utilities, u_i = sum_j v_ij p_ij.
using UtilityVector = VectorXd;
/// Per-agent outside-option utility subtracted before bargaining.
using DisagreementPoint = VectorXd;

inline constexpr double kDefaultTolerance = 1e-9;

enum class ErrorKind {
  DimensionMismatch,
  NegativeValue,
  NonFiniteValue,
  InvalidArgument,
  Io,
  Parse,
  Infeasible,
  NoConvergence,
  DegenerateNormalization,
  NotOptimal,
  NotDecomposable,
  SupplyUnderflow,
  TooLargeForExact,
  TooLarge,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// n agents by m items. Supplies default to one unit per item.
struct Instance {
  MatrixXd values;
  VectorXd supplies;
  std::vector<std::string> agent_labels;
  std::vector<std::string> item_labels;

  Index n_agents() const { return values.rows(); }
  Index n_items() const { return values.cols(); }

  bool operator==(const Instance& other) const;
};

/// Row-substochastic allocation matrix.
struct FractionalAssignment {
  MatrixXd probs;
  VectorXd row_budget;
  double tolerance = kDefaultTolerance;

  static FractionalAssignment zeros(Index n_agents, Index n_items, double tolerance = kDefaultTolerance);

  Index n_agents() const { return probs.rows(); }
  Index n_items() const { return probs.cols(); }

  /// Largest violation of the entry bounds, row budgets and the given column supplies.
  double feasibility_violation(const VectorXd& supplies) const;
  bool is_feasible(const VectorXd& supplies) const { return feasibility_violation(supplies) <= tolerance; }

  /// Clamp entries into [0, 1].
  void finalize();
};

/// Throws on a malformed instance; fills in unit supplies when none were given.
Instance validate_instance(Instance raw);

/// Construct and validate from a value matrix with unit supplies.
Instance make_instance(MatrixXd values);

/// Expected utility of every agent. Works for any Eigen scalar.
template <typename DerivedV, typename DerivedP>
auto utilities(const Eigen::MatrixBase<DerivedV>& values, const Eigen::MatrixBase<DerivedP>& probs) {
  using Scalar = typename DerivedV::Scalar;
  if (values.rows() != probs.rows() || values.cols() != probs.cols())
    throw Error(ErrorKind::DimensionMismatch, "value and probability matrices differ in shape");
  return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(values.cwiseProduct(probs).rowwise().sum());
}

UtilityVector utilities(const Instance& inst, const FractionalAssignment& p);

/// o_i = (1/n_bar) sum_j v_ij c_j; with unit supplies and n_bar = m this is the row average.
DisagreementPoint uniform_disagreement(const Instance& inst, double n_bar);
DisagreementPoint uniform_disagreement(const Instance& inst);

/// Sub-instance holding only the listed agents (in order).
Instance restrict_agents(const Instance& inst, const std::vector<Index>& agents);

std::vector<Index> all_agents(const Instance& inst);

}  // namespace matchlab

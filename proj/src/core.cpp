#include "matchlab/core.hpp"

#include <algorithm>
#include <cmath>

namespace matchlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NegativeValue: return "NegativeValue";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateNormalization: return "DegenerateNormalization";
    case ErrorKind::NotOptimal: return "NotOptimal";
    case ErrorKind::NotDecomposable: return "NotDecomposable";
    case ErrorKind::SupplyUnderflow: return "SupplyUnderflow";
    case ErrorKind::TooLargeForExact: return "TooLargeForExact";
    case ErrorKind::TooLarge: return "TooLarge";
  }
  return "Unknown";
}

bool Instance::operator==(const Instance& other) const {
  return values.rows() == other.values.rows() && values.cols() == other.values.cols() &&
         supplies.size() == other.supplies.size() && values == other.values &&
         supplies == other.supplies && agent_labels == other.agent_labels &&
         item_labels == other.item_labels;
}

FractionalAssignment FractionalAssignment::zeros(Index n_agents, Index n_items, double tolerance) {
  return {MatrixXd::Zero(n_agents, n_items), VectorXd::Ones(n_agents), tolerance};
}

double FractionalAssignment::feasibility_violation(const VectorXd& supplies) const {
  if (supplies.size() != probs.cols() || row_budget.size() != probs.rows())
    throw Error(ErrorKind::DimensionMismatch, "assignment does not match supplies or budgets");
  if (probs.size() == 0) return 0.0;
  double worst = std::max({0.0, -probs.minCoeff(), probs.maxCoeff() - 1.0});
  worst = std::max(worst, (probs.rowwise().sum() - row_budget).maxCoeff());
  worst = std::max(worst, (probs.colwise().sum().transpose() - supplies).maxCoeff());
  return worst;
}

void FractionalAssignment::finalize() { probs = probs.cwiseMax(0.0).cwiseMin(1.0); }

Instance validate_instance(Instance raw) {
  const Index n = raw.values.rows();
  const Index m = raw.values.cols();
  if (n <= 0 || m <= 0) throw Error(ErrorKind::DimensionMismatch, "instance needs at least one agent and one item");
  if (raw.supplies.size() == 0) raw.supplies = VectorXd::Ones(m);
  if (raw.supplies.size() != m)
    throw Error(ErrorKind::DimensionMismatch,
                "supplies has length " + std::to_string(raw.supplies.size()) + ", expected " + std::to_string(m));
  if (!raw.agent_labels.empty() && static_cast<Index>(raw.agent_labels.size()) != n)
    throw Error(ErrorKind::DimensionMismatch, "agent_labels length differs from the number of agents");
  if (!raw.item_labels.empty() && static_cast<Index>(raw.item_labels.size()) != m)
    throw Error(ErrorKind::DimensionMismatch, "item_labels length differs from the number of items");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double v = raw.values(i, j);
      if (!std::isfinite(v))
        throw Error(ErrorKind::NonFiniteValue, "value (" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (v < 0.0)
        throw Error(ErrorKind::NegativeValue, "value (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (Index j = 0; j < m; ++j) {
    const double c = raw.supplies(j);
    if (!std::isfinite(c)) throw Error(ErrorKind::NonFiniteValue, "supply " + std::to_string(j));
    if (c < 0.0 || c > 1.0) throw Error(ErrorKind::InvalidArgument, "supply " + std::to_string(j) + " outside [0,1]");
  }
  return raw;
}

Instance make_instance(MatrixXd values) {
  Instance inst;
  inst.values = std::move(values);
  return validate_instance(std::move(inst));
}

UtilityVector utilities(const Instance& inst, const FractionalAssignment& p) {
  return utilities(inst.values, p.probs);
}

DisagreementPoint uniform_disagreement(const Instance& inst, double n_bar) {
  if (n_bar <= 0.0) throw Error(ErrorKind::InvalidArgument, "n_bar must be positive");
  return inst.values * inst.supplies / n_bar;
}

DisagreementPoint uniform_disagreement(const Instance& inst) {
  return uniform_disagreement(inst, static_cast<double>(inst.n_items()));
}

Instance restrict_agents(const Instance& inst, const std::vector<Index>& agents) {
  Instance out;
  out.values.resize(static_cast<Index>(agents.size()), inst.n_items());
  for (std::size_t k = 0; k < agents.size(); ++k) {
    if (agents[k] < 0 || agents[k] >= inst.n_agents())
      throw Error(ErrorKind::InvalidArgument, "agent index out of range");
    out.values.row(static_cast<Index>(k)) = inst.values.row(agents[k]);
    if (!inst.agent_labels.empty()) out.agent_labels.push_back(inst.agent_labels[agents[k]]);
  }
  out.supplies = inst.supplies;
  out.item_labels = inst.item_labels;
  return out;
}

std::vector<Index> all_agents(const Instance& inst) {
  std::vector<Index> out(static_cast<std::size_t>(inst.n_agents()));
  for (Index i = 0; i < inst.n_agents(); ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

}  // namespace matchlab

#pragma once

#include "matchlab/core.hpp"
#include "matchlab/lottery.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace matchlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column, std::string field, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string field_;
};

/// Instance file: {"values": [[...]], "supplies": [...], "agent_labels": [...], "item_labels": [...]}.
Instance parse_instance(const std::string& text, const std::string& source = "<string>");
Instance load_instance(const std::string& path);
Json instance_to_json(const Instance& inst);
void save_instance(const std::string& path, const Instance& inst);

/// FNV-1a over the shape and the bit patterns of values and supplies.
std::string instance_hash(const Instance& inst);

Json matrix_to_json(const MatrixXd& m);
Json vector_to_json(const VectorXd& v);
/// Non-finite entries become the strings "inf", "-inf" or "nan".
Json number_to_json(double x);

struct Report {
  std::string mechanism;
  std::uint64_t seed = 0;
  MatrixXd probs;
  VectorXd utilities;
  VectorXd benchmark_utilities;
  VectorXd ratios;
  Json metadata = Json::object();
};

Json report_to_json(const Report& report);
void save_report(const std::string& path, const Report& report);

Json lottery_to_json(const Lottery& lottery);

void write_json(const std::string& path, const Json& doc);
Json read_json(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Creates the directory (and parents) if missing; returns dir/name.
std::string output_path(const std::string& dir, const std::string& name);

}  // namespace matchlab

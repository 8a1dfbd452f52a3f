#include "matchlab/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace matchlab {
namespace {

std::string describe(const std::string& source, std::size_t line, std::size_t column, const std::string& field,
                     const std::string& message) {
  std::ostringstream out;
  out << source;
  if (line > 0) out << ":" << line << ":" << column;
  if (!field.empty()) out << " (" << field << ")";
  out << ": " << message;
  return out.str();
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

double read_number(const Json& node, const std::string& source, const std::string& field) {
  if (!node.is_number()) throw ParseError(source, 0, 0, field, "expected a number, got " + std::string(node.type_name()));
  return node.get<double>();
}

std::vector<std::string> read_labels(const Json& doc, const char* key, const std::string& source) {
  std::vector<std::string> out;
  if (!doc.contains(key)) return out;
  const Json& arr = doc.at(key);
  if (!arr.is_array()) throw ParseError(source, 0, 0, key, "expected an array of strings");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_string())
      throw ParseError(source, 0, 0, std::string(key) + "[" + std::to_string(k) + "]", "expected a string");
    out.push_back(arr[k].get<std::string>());
  }
  return out;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
}

void hash_u64(std::uint64_t& h, std::uint64_t x) {
  unsigned char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(x >> (8 * k));
  hash_bytes(h, buf, 8);
}

}  // namespace

ParseError::ParseError(std::string source, std::size_t line, std::size_t column, std::string field,
                       const std::string& message)
    : Error(ErrorKind::Parse, describe(source, line, column, field, message)),
      line_(line), column_(column), field_(std::move(field)) {}

Instance parse_instance(const std::string& text, const std::string& source) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(source, line, column, "", e.what());
  }
  if (!doc.is_object()) throw ParseError(source, 1, 1, "", "top level must be an object");
  if (!doc.contains("values")) throw ParseError(source, 0, 0, "values", "missing required key");
  const Json& rows = doc.at("values");
  if (!rows.is_array() || rows.empty()) throw ParseError(source, 0, 0, "values", "expected a non-empty array of rows");

  const std::size_t m = rows[0].is_array() ? rows[0].size() : 0;
  Instance inst;
  inst.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(m));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string field = "values[" + std::to_string(i) + "]";
    if (!rows[i].is_array()) throw ParseError(source, 0, 0, field, "expected an array");
    if (rows[i].size() != m)
      throw ParseError(source, 0, 0, field,
                       "row has " + std::to_string(rows[i].size()) + " entries, expected " + std::to_string(m));
    for (std::size_t j = 0; j < m; ++j)
      inst.values(static_cast<Index>(i), static_cast<Index>(j)) =
          read_number(rows[i][j], source, field + "[" + std::to_string(j) + "]");
  }
  if (doc.contains("supplies")) {
    const Json& s = doc.at("supplies");
    if (!s.is_array()) throw ParseError(source, 0, 0, "supplies", "expected an array");
    inst.supplies.resize(static_cast<Index>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j)
      inst.supplies(static_cast<Index>(j)) = read_number(s[j], source, "supplies[" + std::to_string(j) + "]");
  }
  inst.agent_labels = read_labels(doc, "agent_labels", source);
  inst.item_labels = read_labels(doc, "item_labels", source);
  return validate_instance(std::move(inst));
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str(), path);
}

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(number_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(number_to_json(v(k)));
  return out;
}

Json number_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json instance_to_json(const Instance& inst) {
  Json doc = Json::object();
  doc["values"] = matrix_to_json(inst.values);
  doc["supplies"] = vector_to_json(inst.supplies);
  if (!inst.agent_labels.empty()) doc["agent_labels"] = inst.agent_labels;
  if (!inst.item_labels.empty()) doc["item_labels"] = inst.item_labels;
  return doc;
}

void save_instance(const std::string& path, const Instance& inst) { write_json(path, instance_to_json(inst)); }

std::string instance_hash(const Instance& inst) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_u64(h, static_cast<std::uint64_t>(inst.n_agents()));
  hash_u64(h, static_cast<std::uint64_t>(inst.n_items()));
  for (Index i = 0; i < inst.n_agents(); ++i)
    for (Index j = 0; j < inst.n_items(); ++j) hash_u64(h, std::bit_cast<std::uint64_t>(inst.values(i, j)));
  for (Index j = 0; j < inst.supplies.size(); ++j) hash_u64(h, std::bit_cast<std::uint64_t>(inst.supplies(j)));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json report_to_json(const Report& report) {
  Json doc = Json::object();
  doc["mechanism"] = report.mechanism;
  doc["seed"] = report.seed;
  doc["probs"] = matrix_to_json(report.probs);
  doc["utilities"] = vector_to_json(report.utilities);
  doc["benchmark_utilities"] = vector_to_json(report.benchmark_utilities);
  doc["ratios"] = vector_to_json(report.ratios);
  doc["metadata"] = report.metadata;
  return doc;
}

void save_report(const std::string& path, const Report& report) { write_json(path, report_to_json(report)); }

Json lottery_to_json(const Lottery& lottery) {
  Json terms = Json::array();
  for (const auto& t : lottery.terms) terms.push_back({{"weight", t.weight}, {"matching", t.matching}});
  return terms;
}

void write_json(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(path, line, column, "", e.what());
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << "\n";
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      out << (k ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

std::string output_path(const std::string& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir + ": " + ec.message());
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace matchlab

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "divlab/adversary.hpp"
#include "divlab/linalg.hpp"
#include "divlab/qobjects.hpp"

namespace divlab::io {

std::string_view version();

/// Locale-independent, 10 significant digits; non-finite values print as
/// "inf", "-inf" or "nan".
std::string format_number(double v);

/// Reads and parses a JSON file; errors name the path.
nlohmann::json load_json_file(const std::string& path);

/// A matrix is a list of rows; entries are numbers or [re, im] pairs.
/// `field` names the location in error messages.
Matrix parse_matrix(const nlohmann::json& j, const std::string& field);
nlohmann::json matrix_to_json(const Matrix& m);

/// A state file holds a matrix, or an object with a "matrix" (or "rho") member.
Matrix parse_state(const nlohmann::json& j, const std::string& field);

/// Channel spec: {"in_dim", "out_dim", "kraus", "trace_preserving"} or one of
/// {"gad": {"gamma", "N"}}, {"replacer": {"sigma0", "in_dim"}},
/// {"identity": {"dim"}}, {"unitary": {"u"}}.
QuantumMap parse_channel(const nlohmann::json& j, const std::string& field);
nlohmann::json channel_to_json(const QuantumMap& map);

/// Strategy spec: {"maps": [channel specs], "memory_dims": [...]}.
Strategy parse_strategy(const nlohmann::json& j, const std::string& field);

using Cell = std::variant<double, std::int64_t, std::string, bool>;

/// Row-oriented table writer for CSV or JSON. Every row is flushed as soon as
/// it is written; close() completes the document.
class TableWriter {
 public:
  enum class Format { csv, json };

  TableWriter(std::ostream& out, Format format, std::string command, std::vector<std::string> columns);
  ~TableWriter();
  TableWriter(const TableWriter&) = delete;
  TableWriter& operator=(const TableWriter&) = delete;

  void row(const std::vector<Cell>& cells);
  /// Summary entries are emitted as "# key: value" lines (CSV) or a summary
  /// object (JSON) at close().
  void summary(const std::string& key, const Cell& value);
  /// Records an error that terminated the run early.
  void error(const std::string& message);
  void close();

 private:
  std::ostream& out_;
  Format format_;
  std::string command_;
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, Cell>> summary_;
  std::string error_;
  std::size_t rows_ = 0;
  bool closed_ = false;
};

std::string cell_text(const Cell& c);

}  // namespace divlab::io

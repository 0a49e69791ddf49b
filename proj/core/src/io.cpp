#include "divlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "divlab/errors.hpp"

namespace divlab::io {

using nlohmann::json;

std::string_view version() { return DIVLAB_VERSION; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "': invalid JSON: " + e.what());
  }
}

namespace {

double number_at(const json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field + ": expected a number");
  return j.get<double>();
}

std::size_t positive_int(const json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key)) throw ValidationError(field + "." + key + ": missing");
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
    throw ValidationError(field + "." + key + ": expected a positive integer");
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

const json& member(const json& obj, const char* key, const std::string& field) {
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(field + "." + key + ": missing");
  return obj.at(key);
}

}  // namespace

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ValidationError(field + ": expected a non-empty list of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].empty()) throw ValidationError(rf + ": expected a non-empty row");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw ValidationError(rf + ": ragged row (expected " + std::to_string(cols) + " entries)");
  }
  check_dim(std::max(rows, cols), field);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const json& e = j[r][c];
      const std::string ef = field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
      Complex z;
      if (e.is_number()) {
        z = Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2) {
        z = Complex(number_at(e[0], ef + "[0]"), number_at(e[1], ef + "[1]"));
      } else {
        throw ValidationError(ef + ": expected a number or [re, im]");
      }
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ValidationError(ef + ": non-finite entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = z;
    }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix parse_state(const json& j, const std::string& field) {
  Matrix m;
  if (j.is_object()) {
    if (j.contains("matrix"))
      m = parse_matrix(j.at("matrix"), field + ".matrix");
    else if (j.contains("rho"))
      m = parse_matrix(j.at("rho"), field + ".rho");
    else
      throw ValidationError(field + ": expected a matrix or an object with a \"matrix\" member");
  } else {
    m = parse_matrix(j, field);
  }
  if (!is_hermitian(m)) throw ValidationError(field + ": matrix is not Hermitian");
  return hermitian_part(m);
}

QuantumMap parse_channel(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field + ": expected a channel object");
  try {
    if (j.contains("gad")) {
      const json& g = j.at("gad");
      const std::string gf = field + ".gad";
      return gad_channel(number_at(member(g, "gamma", gf), gf + ".gamma"), number_at(member(g, "N", gf), gf + ".N"));
    }
    if (j.contains("replacer")) {
      const json& r = j.at("replacer");
      const std::string rf = field + ".replacer";
      const Matrix s0 = parse_state(member(r, "sigma0", rf), rf + ".sigma0");
      const std::size_t in = r.contains("in_dim") ? positive_int(r, "in_dim", rf) : static_cast<std::size_t>(s0.rows());
      return replacer_channel(s0, in);
    }
    if (j.contains("identity")) return identity_channel(positive_int(j.at("identity"), "dim", field + ".identity"));
    if (j.contains("unitary")) {
      const std::string uf = field + ".unitary";
      return unitary_channel(parse_matrix(member(j.at("unitary"), "u", uf), uf + ".u"));
    }
    const std::size_t in = positive_int(j, "in_dim", field);
    const std::size_t out = positive_int(j, "out_dim", field);
    const json& ks = member(j, "kraus", field);
    if (!ks.is_array() || ks.empty()) throw ValidationError(field + ".kraus: expected a non-empty list of matrices");
    std::vector<Matrix> kraus;
    for (std::size_t k = 0; k < ks.size(); ++k) {
      const std::string kf = field + ".kraus[" + std::to_string(k) + "]";
      Matrix a = parse_matrix(ks[k], kf);
      if (static_cast<std::size_t>(a.rows()) != out || static_cast<std::size_t>(a.cols()) != in)
        throw ValidationError(kf + ": expected shape out_dim x in_dim");
      kraus.push_back(std::move(a));
    }
    bool tp = true;
    if (j.contains("trace_preserving")) {
      if (!j.at("trace_preserving").is_boolean()) throw ValidationError(field + ".trace_preserving: expected a boolean");
      tp = j.at("trace_preserving").get<bool>();
    }
    return QuantumMap(in, out, std::move(kraus), tp);
  } catch (const ResourceError&) {
    throw;
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind(field, 0) == 0) throw;
    throw ValidationError(field + ": " + msg);
  }
}

json channel_to_json(const QuantumMap& map) {
  json ks = json::array();
  for (const Matrix& k : map.kraus()) ks.push_back(matrix_to_json(k));
  return json{{"in_dim", map.in_dim()},
              {"out_dim", map.out_dim()},
              {"kraus", ks},
              {"trace_preserving", map.trace_preserving()}};
}

Strategy parse_strategy(const json& j, const std::string& field) {
  const json& maps = member(j, "maps", field);
  const json& mem = member(j, "memory_dims", field);
  if (!maps.is_array() || maps.empty()) throw ValidationError(field + ".maps: expected a non-empty list");
  if (!mem.is_array() || mem.size() != maps.size())
    throw ValidationError(field + ".memory_dims: expected one entry per map");
  Strategy s;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    s.maps.push_back(parse_channel(maps[i], field + ".maps[" + std::to_string(i) + "]"));
    const json& m = mem[i];
    if (!m.is_number_integer() || m.get<std::int64_t>() <= 0)
      throw ValidationError(field + ".memory_dims[" + std::to_string(i) + "]: expected a positive integer");
    s.memory_dims.push_back(static_cast<std::size_t>(m.get<std::int64_t>()));
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  if (const std::int64_t* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const bool* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return std::get<std::string>(c);
}

namespace {

std::string json_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return "\"" + format_number(*d) + "\"";
    return format_number(*d);
  }
  if (std::holds_alternative<std::string>(c)) return json(std::get<std::string>(c)).dump();
  return cell_text(c);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

TableWriter::TableWriter(std::ostream& out, Format format, std::string command, std::vector<std::string> columns)
    : out_(out), format_(format), command_(std::move(command)), columns_(std::move(columns)) {
  if (format_ == Format::csv) {
    out_ << "# divlab " << version() << " " << command_ << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << csv_field(columns_[i]);
    out_ << "\n";
  } else {
    out_ << "{\"version\": " << json(std::string("divlab ") + std::string(version())).dump()
         << ", \"command\": " << json(command_).dump() << ", \"columns\": " << json(columns_).dump()
         << ", \"rows\": [";
  }
  out_.flush();
}

TableWriter::~TableWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void TableWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_.size()) throw ValidationError("TableWriter: row width does not match the header");
  if (format_ == Format::csv) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_field(cell_text(cells[i]));
    out_ << "\n";
  } else {
    out_ << (rows_ ? ",\n  [" : "\n  [");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? ", " : "") << json_cell(cells[i]);
    out_ << "]";
  }
  ++rows_;
  out_.flush();
}

void TableWriter::summary(const std::string& key, const Cell& value) { summary_.emplace_back(key, value); }

void TableWriter::error(const std::string& message) { error_ = message; }

void TableWriter::close() {
  if (closed_) return;
  closed_ = true;
  if (format_ == Format::csv) {
    for (const auto& [k, v] : summary_) out_ << "# " << k << ": " << cell_text(v) << "\n";
    if (!error_.empty()) out_ << "# error: " << error_ << "\n";
  } else {
    out_ << (rows_ ? "\n]" : "]") << ", \"summary\": {";
    for (std::size_t i = 0; i < summary_.size(); ++i)
      out_ << (i ? ", " : "") << json(summary_[i].first).dump() << ": " << json_cell(summary_[i].second);
    out_ << "}";
    if (!error_.empty()) out_ << ", \"error\": " << json(error_).dump();
    out_ << "}\n";
  }
  out_.flush();
}

}  // namespace divlab::io

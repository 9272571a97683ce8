#pragma once

// File formats: scalar CSV input, the SPD matrix JSON file, trace records
// (JSON lines and CSV), and JSON rendering with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "itermean/engine.hpp"
#include "itermean/errors.hpp"
#include "itermean/spd.hpp"

namespace itermean::io {

using json = nlohmann::json;

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep floats recognizable as such ("5" -> "5.0") where that is valid JSON.
  if (std::isfinite(x) && s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

/// Compact JSON text; floating-point numbers use 17 significant digits.
inline void dump(std::ostream& os, const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        os << json(it.key()).dump() << ':';
        dump(os, it.value());
      }
      os << '}';
      break;
    }
    case json::value_t::array: {
      os << '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ',';
        dump(os, j[i]);
      }
      os << ']';
      break;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isfinite(x)) {
        os << format_double(x);
      } else {
        os << "null";
      }
      break;
    }
    default:
      os << j.dump();
  }
}

inline std::string dump(const json& j) {
  std::ostringstream os;
  dump(os, j);
  return os.str();
}

/// One positive real per line; blank lines and lines starting with '#' are
/// skipped.
inline std::vector<double> read_scalar_csv(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r,");
    const std::string field = line.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size()) {
      throw ConfigError("line " + std::to_string(lineno) + ": '" + field + "' is not a number");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("line " + std::to_string(lineno) + ": value must be positive and finite");
    }
    out.push_back(v);
  }
  return out;
}

/// Parses { "dimension": d, "matrices": [[d*d row-major reals], ...] }.
/// Errors name the offending matrix index and the violated invariant.
inline std::vector<SpdMatrix> parse_matrix_file(const json& doc) {
  if (!doc.is_object()) throw ConfigError("matrix file: top level must be an object");
  if (!doc.contains("dimension") || !doc["dimension"].is_number_integer()) {
    throw ConfigError("matrix file: 'dimension' must be an integer");
  }
  const auto d = doc["dimension"].get<long long>();
  if (d < 1 || d > static_cast<long long>(kMaxSpdDimension)) {
    throw ConfigError("matrix file: 'dimension' must be in [1, 64]");
  }
  if (!doc.contains("matrices") || !doc["matrices"].is_array()) {
    throw ConfigError("matrix file: 'matrices' must be an array");
  }
  std::vector<SpdMatrix> out;
  const auto& list = doc["matrices"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "matrix file: matrices[" + std::to_string(i) + "]: ";
    const auto& m = list[i];
    if (!m.is_array() || m.size() != static_cast<std::size_t>(d * d)) {
      throw ConfigError(where + "expected " + std::to_string(d * d) + " row-major entries");
    }
    std::vector<double> entries;
    entries.reserve(m.size());
    for (const auto& v : m) {
      if (!v.is_number()) throw ConfigError(where + "entries must be numbers");
      entries.push_back(v.get<double>());
    }
    try {
      out.push_back(SpdMatrix::from_row_major(static_cast<std::size_t>(d), entries));
    } catch (const Error& e) {
      throw DomainError(where + e.what());
    }
  }
  return out;
}

inline std::vector<SpdMatrix> read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("matrix file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_matrix_file(doc);
}

inline json matrix_file_json(const std::vector<SpdMatrix>& ms) {
  json doc;
  doc["dimension"] = ms.empty() ? 0 : ms.front().dimension();
  doc["matrices"] = json::array();
  for (const auto& m : ms) doc["matrices"].push_back(m.row_major());
  return doc;
}

inline json element_json(double x) { return x; }
inline json element_json(const SpdMatrix& m) { return m.row_major(); }

inline json mapping_json(const CycleMapping& m) {
  return {{"n", m.size()}, {"cycle", m.cycle()}, {"assignment", m.assignment()}};
}

/// JSON-lines step record: {"type":"step","step":k,"values":[...],"spread":..,"rel_spread":..}.
/// Matrix values are row-major arrays and the record carries "dimension".
template <class E>
json trace_record(const IterationState<E>& state, double spread, double rel_spread) {
  json rec;
  rec["type"] = "step";
  rec["step"] = state.step;
  if constexpr (std::is_same_v<E, SpdMatrix>) {
    rec["dimension"] = state.elements.front().dimension();
  }
  json values = json::array();
  for (const auto& e : state.elements) values.push_back(element_json(e));
  rec["values"] = std::move(values);
  rec["spread"] = spread;
  rec["rel_spread"] = rel_spread;
  return rec;
}

template <class E>
void write_trace_jsonl(std::ostream& os, const json& header, const ExtensionResult<E>& r) {
  dump(os, header);
  os << '\n';
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    dump(os, trace_record(r.trace[k], r.spread_history[k], r.relative_spread_history[k]));
    os << '\n';
  }
}

/// Long-format CSV: one row per (step, index). Scalars use a `value` column,
/// matrices one `m_<row>_<col>` column per entry. Header lines start with '#'.
template <class E>
void write_trace_csv(std::ostream& os, const json& header, const ExtensionResult<E>& r) {
  os << "# " << dump(header) << '\n';
  os << "step,index,";
  std::size_t d = 0;
  if constexpr (std::is_same_v<E, SpdMatrix>) {
    d = r.trace.empty() ? 0 : r.trace.front().elements.front().dimension();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) os << "m_" << i << '_' << j << ',';
    }
  } else {
    os << "value,";
  }
  os << "spread,rel_spread\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const auto& st = r.trace[k];
    for (std::size_t i = 0; i < st.elements.size(); ++i) {
      os << st.step << ',' << i << ',';
      if constexpr (std::is_same_v<E, SpdMatrix>) {
        for (double v : st.elements[i].row_major()) os << format_double(v) << ',';
      } else {
        os << format_double(st.elements[i]) << ',';
      }
      os << format_double(r.spread_history[k]) << ',' << format_double(r.relative_spread_history[k])
         << '\n';
    }
  }
}

}  // namespace itermean::io

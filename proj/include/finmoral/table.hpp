#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "finmoral/errors.hpp"
#include "finmoral/value.hpp"

namespace finmoral {

enum class TableFormat { csv, json };

struct Table {
  std::vector<std::string> headers;
  std::vector<ValueKind> column_types;
  std::vector<std::vector<Value>> rows;
  /// Unit annotation carried by a header such as "Revenue (B)" -> "B".
  /// Metadata only: cells are never rescaled by it.
  std::vector<std::string> header_units;

  std::size_t column_count() const { return headers.size(); }
  std::size_t row_count() const { return rows.size(); }

  /// Case-insensitive header lookup.
  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t j = 0; j < headers.size(); ++j) {
      if (text::iequals(headers[j], name)) return j;
    }
    return std::nullopt;
  }

  /// Surface equality: same headers and byte-identical cells.
  friend bool operator==(const Table& a, const Table& b) {
    if (a.headers != b.headers || a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      if (a.rows[i].size() != b.rows[i].size()) return false;
      for (std::size_t j = 0; j < a.rows[i].size(); ++j) {
        if (a.rows[i][j].surface != b.rows[i][j].surface) return false;
      }
    }
    return true;
  }
};

struct Schema {
  std::string table_name = "t";
  std::vector<std::string> column_names;
  std::vector<ValueKind> column_types;

  static Schema of(const Table& t, std::string name = "t") {
    return Schema{std::move(name), t.headers, t.column_types};
  }

  friend bool operator==(const Schema&, const Schema&) = default;
};

namespace detail {

inline std::string header_unit(std::string_view header) {
  const auto h = text::trim(header);
  if (h.size() < 3 || h.back() != ')') return {};
  const auto open = h.rfind('(');
  if (open == std::string_view::npos) return {};
  std::string inner(text::trim(h.substr(open + 1, h.size() - open - 2)));
  for (char& c : inner) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  if (inner == "K" || inner == "M" || inner == "B" || inner == "%") return inner;
  return {};
}

/// Majority kind per column; ties prefer number, then date, then text.
inline ValueKind majority_kind(const std::vector<std::vector<Value>>& rows, std::size_t column) {
  std::array<std::size_t, 3> counts{};
  for (const auto& row : rows) {
    switch (row[column].kind) {
      case ValueKind::number: ++counts[0]; break;
      case ValueKind::date: ++counts[1]; break;
      case ValueKind::text: ++counts[2]; break;
    }
  }
  if (rows.empty()) return ValueKind::text;
  if (counts[0] >= counts[1] && counts[0] >= counts[2]) return ValueKind::number;
  if (counts[1] >= counts[2]) return ValueKind::date;
  return ValueKind::text;
}

}  // namespace detail

/// Builds a Table from raw header and cell strings: every cell goes through
/// parse_value, column types are majority kinds.
inline Table make_table(std::vector<std::string> headers, const std::vector<std::vector<std::string>>& raw_rows) {
  std::unordered_set<std::string> seen;
  for (const auto& h : headers) {
    if (!seen.insert(text::lower(text::trim(h))).second) {
      throw SchemaError("duplicate header \"" + h + "\"");
    }
  }
  Table t;
  t.headers = std::move(headers);
  t.rows.reserve(raw_rows.size());
  for (std::size_t i = 0; i < raw_rows.size(); ++i) {
    if (raw_rows[i].size() != t.headers.size()) {
      throw IngestError("row " + std::to_string(i) + " has " + std::to_string(raw_rows[i].size()) +
                            " cells, expected " + std::to_string(t.headers.size()),
                        i);
    }
    std::vector<Value> row;
    row.reserve(raw_rows[i].size());
    for (const auto& cell : raw_rows[i]) row.push_back(parse_value(cell));
    t.rows.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < t.headers.size(); ++j) {
    t.column_types.push_back(detail::majority_kind(t.rows, j));
    t.header_units.push_back(detail::header_unit(t.headers[j]));
  }
  return t;
}

// RFC 4180 reader. Accepts LF or CRLF record separators and an optional
// trailing line break.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  while (i < in.size()) {
    const char c = in[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < in.size() && in[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
      ++i;
    } else if (c == '\r' && i + 1 < in.size() && in[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n') {
      end_record();
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw IngestError("unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

inline Table table_from_json(const nlohmann::json& j);

inline Table load_table(std::string_view content, TableFormat format) {
  if (text::trim(content).empty()) throw IngestError("empty table source");
  if (format == TableFormat::csv) {
    auto records = parse_csv(content);
    std::vector<std::string> headers = std::move(records.front());
    records.erase(records.begin());
    return make_table(std::move(headers), records);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(std::string("invalid JSON table: ") + e.what());
  }
  return table_from_json(j);
}

inline std::string json_cell_text(const nlohmann::json& cell, std::size_t row) {
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_number()) return cell.dump();
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_null()) return {};
  throw IngestError("row " + std::to_string(row) + " contains a nested value", row);
}

inline Table table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("headers") || !j["headers"].is_array()) {
    throw IngestError("JSON table needs a \"headers\" array");
  }
  std::vector<std::string> headers;
  for (const auto& h : j["headers"]) {
    if (!h.is_string()) throw IngestError("headers must be strings");
    headers.push_back(h.get<std::string>());
  }
  std::vector<std::vector<std::string>> rows;
  if (j.contains("rows")) {
    if (!j["rows"].is_array()) throw IngestError("\"rows\" must be an array");
    for (std::size_t i = 0; i < j["rows"].size(); ++i) {
      const auto& r = j["rows"][i];
      if (!r.is_array()) throw IngestError("row " + std::to_string(i) + " is not an array", i);
      std::vector<std::string> row;
      for (const auto& cell : r) row.push_back(json_cell_text(cell, i));
      rows.push_back(std::move(row));
    }
  }
  return make_table(std::move(headers), rows);
}

inline Table load_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto ext = text::lower(path.extension().string());
  return load_table(buf.str(), ext == ".json" ? TableFormat::json : TableFormat::csv);
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void csv_record(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t j = 0; j < fields.size(); ++j) {
    if (j) out.push_back(',');
    out += csv_field(fields[j]);
  }
  out.push_back('\n');
}

/// A cell is written as a JSON number when its surface is a JSON number
/// literal that re-serializes to the same bytes.
inline bool is_canonical_json_number(const std::string& s) {
  if (s.empty()) return false;
  const char c = s.front();
  if (!(text::is_digit(c) || c == '-')) return false;
  try {
    const auto j = nlohmann::json::parse(s);
    return j.is_number() && j.dump() == s;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

}  // namespace detail

/// Minimal-quoting CSV with LF record separators.
inline std::string to_csv(const Table& t) {
  std::string out;
  detail::csv_record(out, t.headers);
  for (const auto& row : t.rows) {
    std::vector<std::string> fields;
    fields.reserve(row.size());
    for (const auto& v : row) fields.push_back(v.surface);
    detail::csv_record(out, fields);
  }
  return out;
}

inline nlohmann::json to_json_value(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) {
      if (detail::is_canonical_json_number(v.surface)) {
        r.push_back(nlohmann::json::parse(v.surface));
      } else {
        r.push_back(v.surface);
      }
    }
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"headers", t.headers}, {"rows", std::move(rows)}};
}

inline std::string to_json(const Table& t) { return to_json_value(t).dump(); }

}  // namespace finmoral

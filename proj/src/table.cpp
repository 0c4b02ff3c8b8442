#include "coq/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "coq/errors.hpp"

namespace coq {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string pipe_cell(std::string_view cell) {
  std::string out;
  out.reserve(cell.size());
  for (char c : cell) {
    if (c == '|') {
      out.push_back('/');
    } else if (c == '\n' || c == '\r') {
      // A raw newline would split the row across lines.
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string json_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

std::string strip_bom(std::string_view s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
      static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF) {
    s.remove_prefix(3);
  }
  return std::string(s);
}

Table table_from_json(std::string_view source, std::string name) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(source);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(std::string("invalid JSON table: ") + e.what());
  }

  std::vector<std::string> header;
  std::vector<Row> rows;
  if (doc.is_array()) {
    for (const auto& obj : doc) {
      if (!obj.is_object()) throw MalformedInput("JSON table array must contain objects");
      for (const auto& [key, _] : obj.items()) {
        if (std::find(header.begin(), header.end(), key) == header.end()) header.push_back(key);
      }
    }
    for (const auto& obj : doc) {
      Row row;
      row.reserve(header.size());
      for (const auto& key : header) {
        row.push_back(obj.contains(key) ? json_cell(obj.at(key)) : std::string());
      }
      rows.push_back(std::move(row));
    }
  } else if (doc.is_object() && doc.contains("header")) {
    if (!doc["header"].is_array()) throw MalformedInput("\"header\" must be an array");
    for (const auto& h : doc["header"]) header.push_back(json_cell(h));
    if (doc.contains("rows")) {
      if (!doc["rows"].is_array()) throw MalformedInput("\"rows\" must be an array");
      for (const auto& r : doc["rows"]) {
        if (!r.is_array()) throw MalformedInput("each row must be an array");
        Row row;
        for (const auto& c : r) row.push_back(json_cell(c));
        rows.push_back(std::move(row));
      }
    }
    if (name.empty() && doc.contains("name") && doc["name"].is_string()) {
      name = doc["name"].get<std::string>();
    }
  } else {
    throw MalformedInput("JSON table must be an array of objects or {\"header\", \"rows\"}");
  }
  return make_table(std::move(name), header, std::move(rows));
}

}  // namespace

std::string_view to_string(ValueType type) {
  switch (type) {
    case ValueType::kInteger:
      return "INTEGER";
    case ValueType::kReal:
      return "REAL";
    case ValueType::kText:
      return "TEXT";
  }
  return "TEXT";
}

Table::Table(std::string name, std::vector<ColumnSpec> columns, std::vector<Row> rows)
    : name_(std::move(name)), columns_(std::move(columns)), rows_(std::move(rows)) {
  if (name_.empty()) throw std::invalid_argument("table name must not be empty");
  if (columns_.empty()) throw EmptyTable("table has no columns");
  std::set<std::string> seen;
  for (const auto& col : columns_) {
    if (col.sane_name.empty()) throw std::invalid_argument("column has empty sane name");
    if (!seen.insert(ascii_lower(col.sane_name)).second) {
      throw std::invalid_argument("duplicate column name: " + col.sane_name);
    }
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != columns_.size()) {
      throw MalformedInput("row " + std::to_string(i + 1) + " has " +
                           std::to_string(rows_[i].size()) + " cells, expected " +
                           std::to_string(columns_.size()));
    }
  }
}

Table Table::with_types(const std::vector<ValueType>& types) const {
  if (types.size() != columns_.size()) throw std::invalid_argument("type count mismatch");
  auto cols = columns_;
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i].value_type = types[i];
  return Table(name_, std::move(cols), rows_);
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // CRLF handled on the '\n'.
    } else if (c == '\n' || c == '\r') {
      end_record();
    } else {
      field.push_back(c);
      if (!is_space(c)) field_started = true;
    }
  }
  if (in_quotes) throw MalformedInput("unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string sanitize_identifier(std::string_view raw) {
  std::string t = trim(raw);
  std::string out;
  bool pending_sep = false;
  for (char ch : t) {
    auto c = static_cast<unsigned char>(ch);
    bool keep = std::isalnum(c) || ch == '_' || c >= 0x80;
    if (keep) {
      if (pending_sep && !out.empty()) out.push_back('_');
      pending_sep = false;
      out.push_back(ch);
    } else {
      pending_sep = true;
    }
  }
  return out;
}

std::vector<std::string> sanitize_names(const std::vector<std::string>& raw_names) {
  std::vector<std::string> out;
  std::set<std::string> used;
  out.reserve(raw_names.size());
  for (std::size_t i = 0; i < raw_names.size(); ++i) {
    std::string base = sanitize_identifier(raw_names[i]);
    if (base.empty()) base = "column_" + std::to_string(i + 1);
    std::string name = base;
    for (int suffix = 2; used.count(ascii_lower(name)) != 0; ++suffix) {
      name = base + "_" + std::to_string(suffix);
    }
    used.insert(ascii_lower(name));
    out.push_back(std::move(name));
  }
  return out;
}

Table make_table(std::string name, const std::vector<std::string>& header, std::vector<Row> rows) {
  if (header.empty()) throw EmptyTable("table has no columns");
  std::vector<std::string> raw;
  raw.reserve(header.size());
  for (const auto& h : header) raw.push_back(trim(h));
  auto sane = sanitize_names(raw);

  std::vector<ColumnSpec> columns;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    columns.push_back(ColumnSpec{raw[i], sane[i], ValueType::kText});
  }
  for (auto& row : rows) {
    for (auto& cell : row) cell = trim(cell);
  }
  if (trim(name).empty()) name = "table";
  return Table(trim(name), std::move(columns), std::move(rows));
}

Table ingest_table(std::string_view source, TableFormat format, std::string name) {
  if (!is_valid_utf8(source)) throw MalformedInput("input is not valid UTF-8");
  std::string text = strip_bom(source);

  if (format == TableFormat::kJson) return table_from_json(text, std::move(name));

  auto records = parse_delimited(text, ',');
  while (!records.empty() && records.back().size() == 1 && trim(records.back()[0]).empty()) {
    records.pop_back();
  }
  if (records.empty()) throw EmptyTable("CSV input has no header line");
  auto header = std::move(records.front());
  if (header.size() == 1 && trim(header[0]).empty()) throw EmptyTable("CSV header is empty");

  std::vector<Row> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto& rec = records[i];
    // Blank lines are skipped unless they can be a single empty cell.
    if (header.size() > 1 && rec.size() == 1 && trim(rec[0]).empty()) continue;
    if (rec.size() != header.size()) {
      throw MalformedInput("CSV record " + std::to_string(i + 1) + " has " +
                           std::to_string(rec.size()) + " fields, expected " +
                           std::to_string(header.size()));
    }
    rows.push_back(std::move(rec));
  }
  return make_table(std::move(name), header, std::move(rows));
}

bool is_integer_literal(std::string_view cell) {
  if (cell.empty()) return false;
  std::string_view digits = cell;
  if (digits.front() == '+' || digits.front() == '-') digits.remove_prefix(1);
  if (digits.empty()) return false;
  if (!std::all_of(digits.begin(), digits.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  // Must fit the engine's 64-bit integer storage.
  std::int64_t value = 0;
  const char* first = cell.data() + (cell.front() == '+' ? 1 : 0);
  auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

bool is_decimal_literal(std::string_view cell) {
  std::size_t i = 0;
  auto digit = [&](std::size_t k) { return k < cell.size() && cell[k] >= '0' && cell[k] <= '9'; };
  if (i < cell.size() && (cell[i] == '+' || cell[i] == '-')) ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (digit(i)) ++i, ++int_digits;
  if (i < cell.size() && cell[i] == '.') {
    ++i;
    while (digit(i)) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return false;
  if (i < cell.size() && (cell[i] == 'e' || cell[i] == 'E')) {
    ++i;
    if (i < cell.size() && (cell[i] == '+' || cell[i] == '-')) ++i;
    if (!digit(i)) return false;
    while (digit(i)) ++i;
  }
  if (i != cell.size()) return false;
  return std::isfinite(std::strtod(std::string(cell).c_str(), nullptr));
}

Table infer_types(const Table& table) {
  std::vector<ValueType> types;
  types.reserve(table.column_count());
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    bool any = false, all_int = true, all_dec = true;
    for (const auto& row : table.rows()) {
      const auto& cell = row[c];
      if (cell.empty()) continue;
      any = true;
      if (all_int && !is_integer_literal(cell)) all_int = false;
      if (all_dec && !is_decimal_literal(cell)) all_dec = false;
      if (!all_dec) break;
    }
    if (!any) {
      types.push_back(ValueType::kText);
    } else if (all_int) {
      types.push_back(ValueType::kInteger);
    } else if (all_dec) {
      types.push_back(ValueType::kReal);
    } else {
      types.push_back(ValueType::kText);
    }
  }
  return table.with_types(types);
}

std::string serialize_pipe(const Table& table, const std::vector<std::size_t>& row_indices) {
  for (auto idx : row_indices) {
    if (idx >= table.row_count()) {
      throw IndexOutOfRange("row index " + std::to_string(idx) + " out of range (" +
                            std::to_string(table.row_count()) + " rows)");
    }
  }
  std::string out;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    if (c) out.push_back('|');
    out += pipe_cell(table.columns()[c].raw_name);
  }
  for (auto idx : row_indices) {
    out.push_back('\n');
    const auto& row = table.rows()[idx];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back('|');
      out += pipe_cell(row[c]);
    }
  }
  return out;
}

NLSchema build_nl_schema(const Table& table, std::size_t sample_k) {
  if (sample_k < 1) throw std::invalid_argument("sample_k must be at least 1");
  NLSchema schema;
  schema.table_name = table.name();
  for (const auto& col : table.columns()) schema.headers.emplace_back(col.sane_name, col.value_type);
  std::vector<std::size_t> head(std::min(sample_k, table.row_count()));
  for (std::size_t i = 0; i < head.size(); ++i) head[i] = i;
  schema.value_examples = serialize_pipe(table, head);
  schema.total_rows = table.row_count();
  return schema;
}

std::string render_schema(const NLSchema& schema) {
  std::string out = "Table name: " + schema.table_name + "\nHeaders (column name, value type):\n";
  for (const auto& [name, type] : schema.headers) {
    out += "(\"" + name + "\", " + std::string(to_string(type)) + ")\n";
  }
  out += "Value examples:\n" + schema.value_examples;
  return out;
}

}  // namespace coq

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace coq {

enum class ValueType { kInteger, kReal, kText };

std::string_view to_string(ValueType type);

struct ColumnSpec {
  std::string raw_name;
  std::string sane_name;
  ValueType value_type = ValueType::kText;
};

using Row = std::vector<std::string>;

// An ingested relational table. Cells are kept as trimmed strings; typing is
// recorded per column and only applied when the table is loaded into SQL.
class Table {
 public:
  Table(std::string name, std::vector<ColumnSpec> columns, std::vector<Row> rows);

  const std::string& name() const { return name_; }
  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t column_count() const { return columns_.size(); }
  std::size_t row_count() const { return rows_.size(); }

  // Copy with value types replaced. Sizes must match the column count.
  Table with_types(const std::vector<ValueType>& types) const;

 private:
  std::string name_;
  std::vector<ColumnSpec> columns_;
  std::vector<Row> rows_;
};

enum class TableFormat { kCsv, kJson };

// Parses CSV (RFC 4180 quoting) or JSON (array of objects, or an object with
// "header" and "rows"). Throws MalformedInput on ragged rows or bad UTF-8 and
// EmptyTable when no columns are present. Value types are left as TEXT.
Table ingest_table(std::string_view source, TableFormat format, std::string name);

// Builds a table from an already-split header and rows, applying the same
// trimming, sanitization and validation as ingest_table.
Table make_table(std::string name, const std::vector<std::string>& header,
                 std::vector<Row> rows);

// RFC 4180 record splitter shared by the CSV ingester and dataset converters.
std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter);

// Identifier-safe, case-insensitively unique names; duplicates get "_2", "_3"...
std::vector<std::string> sanitize_names(const std::vector<std::string>& raw_names);
std::string sanitize_identifier(std::string_view raw);

bool is_integer_literal(std::string_view cell);
bool is_decimal_literal(std::string_view cell);

// Populates value_type on every column: INTEGER if every non-empty cell is a
// base-10 integer, else REAL if every non-empty cell is a decimal number, else
// TEXT. A column with no non-empty cells is TEXT.
Table infer_types(const Table& table);

// Header line of raw column names followed by the selected rows, "|"-joined.
// A "|" inside a cell becomes "/". No trailing newline.
std::string serialize_pipe(const Table& table, const std::vector<std::size_t>& row_indices);

// Natural-language-style surrogate for the full table.
struct NLSchema {
  std::string table_name;
  std::vector<std::pair<std::string, ValueType>> headers;
  std::string value_examples;
  std::size_t total_rows = 0;
};

NLSchema build_nl_schema(const Table& table, std::size_t sample_k);

// Text block substituted for {schema} in prompts.
std::string render_schema(const NLSchema& schema);

bool is_valid_utf8(std::string_view text);

}  // namespace coq

#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coq/table.hpp"

struct sqlite3;

namespace coq {

struct ResultSet {
  std::vector<std::string> column_names;
  // NULL values are materialized as empty strings, mirroring how empty cells
  // are loaded.
  std::vector<std::vector<std::string>> rows;
  bool truncated = false;
  std::size_t total_row_count = 0;
};

enum class SqlErrorKind { kSyntax, kRuntime };

std::string_view to_string(SqlErrorKind kind);

struct SqlError {
  SqlErrorKind kind = SqlErrorKind::kSyntax;
  std::string message;
};

using ExecResult = std::variant<ResultSet, SqlError>;

inline bool succeeded(const ExecResult& r) { return std::holds_alternative<ResultSet>(r); }

constexpr std::size_t kDefaultRowLimit = 50;
constexpr std::chrono::milliseconds kDefaultQueryTimeout{5000};

// In-memory SQLite database holding one table, read-only after loading.
//
// Queries are classified as SYNTAX when the engine cannot prepare them and
// RUNTIME when they prepare but fail during execution, exceed the timeout, or
// attempt anything other than a single read-only statement.
class Sandbox {
 public:
  // Throws EngineFailure if the database cannot be created or populated.
  explicit Sandbox(const Table& table);
  ~Sandbox();

  Sandbox(const Sandbox&) = delete;
  Sandbox& operator=(const Sandbox&) = delete;

  const std::string& relation_name() const { return relation_; }

  ExecResult execute(std::string_view sql, std::size_t row_limit = kDefaultRowLimit,
                     std::chrono::milliseconds timeout = kDefaultQueryTimeout) const;

 private:
  std::string relation_;
  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

// First k rows; total_row_count is kept and truncated is set when rows were dropped.
ResultSet sample_result(const ResultSet& result, std::size_t k);

// PIPE rendering of a result for prompts, with a row-count note when the
// rows shown are not the whole result.
std::string render_result(const ResultSet& result);

// Quotes an identifier for SQLite ("" escaping).
std::string quote_identifier(std::string_view name);

// Relation name derived from a table name.
std::string relation_name_for(const Table& table);

}  // namespace coq

#include "coq/sandbox.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <memory>

#include "coq/errors.hpp"

namespace coq {

namespace {

struct StmtDeleter {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

void exec_or_throw(sqlite3* db, const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw EngineFailure("sandbox setup failed: " + msg);
  }
}

// Skips whitespace, ";" separators and SQL comments.
std::size_t skip_filler(std::string_view s, std::size_t i) {
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c) || c == ';') {
      ++i;
    } else if (s.compare(i, 2, "--") == 0) {
      auto nl = s.find('\n', i);
      i = nl == std::string_view::npos ? s.size() : nl + 1;
    } else if (s.compare(i, 2, "/*") == 0) {
      auto end = s.find("*/", i + 2);
      i = end == std::string_view::npos ? s.size() : end + 2;
    } else {
      break;
    }
  }
  return i;
}

std::string leading_keyword(std::string_view sql) {
  std::size_t i = 0;
  while (true) {
    i = skip_filler(sql, i);
    if (i < sql.size() && sql[i] == '(') {
      ++i;
      continue;
    }
    break;
  }
  std::string word;
  while (i < sql.size() && std::isalpha(static_cast<unsigned char>(sql[i]))) {
    word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(sql[i]))));
    ++i;
  }
  return word;
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
};

int progress_check(void* arg) {
  auto* d = static_cast<Deadline*>(arg);
  return std::chrono::steady_clock::now() > d->at ? 1 : 0;
}

std::string column_text(sqlite3_stmt* stmt, int i) {
  if (sqlite3_column_type(stmt, i) == SQLITE_NULL) return "";
  const auto* text = sqlite3_column_text(stmt, i);
  int len = sqlite3_column_bytes(stmt, i);
  return text ? std::string(reinterpret_cast<const char*>(text), static_cast<std::size_t>(len))
              : std::string();
}

}  // namespace

std::string_view to_string(SqlErrorKind kind) {
  return kind == SqlErrorKind::kSyntax ? "SYNTAX" : "RUNTIME";
}

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string relation_name_for(const Table& table) {
  auto name = sanitize_identifier(table.name());
  return name.empty() ? "t" : name;
}

Sandbox::Sandbox(const Table& table) : relation_(relation_name_for(table)) {
  if (sqlite3_open_v2(":memory:", &db_,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_MEMORY |
                          SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw EngineFailure("cannot open in-memory database: " + msg);
  }
  // A misspelled "column" must not silently become a string literal.
  sqlite3_db_config(db_, SQLITE_DBCONFIG_DQS_DML, 0, nullptr);
  sqlite3_db_config(db_, SQLITE_DBCONFIG_DQS_DDL, 0, nullptr);

  try {
    std::string ddl = "CREATE TABLE " + quote_identifier(relation_) + " (";
    for (std::size_t i = 0; i < table.column_count(); ++i) {
      const auto& col = table.columns()[i];
      if (i) ddl += ", ";
      ddl += quote_identifier(col.sane_name) + " " + std::string(to_string(col.value_type));
    }
    ddl += ")";
    exec_or_throw(db_, ddl);

    std::string insert = "INSERT INTO " + quote_identifier(relation_) + " VALUES (";
    for (std::size_t i = 0; i < table.column_count(); ++i) insert += i ? ", ?" : "?";
    insert += ")";

    sqlite3_stmt* raw = nullptr;
    if (sqlite3_prepare_v2(db_, insert.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
      throw EngineFailure(std::string("cannot prepare insert: ") + sqlite3_errmsg(db_));
    }
    Stmt stmt(raw);
    exec_or_throw(db_, "BEGIN");
    for (const auto& row : table.rows()) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const auto& cell = row[c];
        int idx = static_cast<int>(c) + 1;
        auto type = table.columns()[c].value_type;
        int rc;
        if (cell.empty()) {
          rc = sqlite3_bind_null(stmt.get(), idx);
        } else if (type == ValueType::kInteger) {
          long long v = 0;
          const char* first = cell.data() + (cell.front() == '+' ? 1 : 0);
          std::from_chars(first, cell.data() + cell.size(), v);
          rc = sqlite3_bind_int64(stmt.get(), idx, v);
        } else if (type == ValueType::kReal) {
          rc = sqlite3_bind_double(stmt.get(), idx, std::strtod(cell.c_str(), nullptr));
        } else {
          rc = sqlite3_bind_text(stmt.get(), idx, cell.data(), static_cast<int>(cell.size()),
                                 SQLITE_TRANSIENT);
        }
        if (rc != SQLITE_OK) throw EngineFailure(std::string("bind failed: ") + sqlite3_errmsg(db_));
      }
      if (sqlite3_step(stmt.get()) != SQLITE_DONE) {
        throw EngineFailure(std::string("insert failed: ") + sqlite3_errmsg(db_));
      }
      sqlite3_reset(stmt.get());
    }
    exec_or_throw(db_, "COMMIT");
    exec_or_throw(db_, "PRAGMA query_only = ON");
  } catch (...) {
    sqlite3_close(db_);
    db_ = nullptr;
    throw;
  }
}

Sandbox::~Sandbox() {
  if (db_) sqlite3_close(db_);
}

ExecResult Sandbox::execute(std::string_view sql, std::size_t row_limit,
                            std::chrono::milliseconds timeout) const {
  std::lock_guard lock(mu_);

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, &tail);
  Stmt stmt(raw);
  if (rc != SQLITE_OK) return SqlError{SqlErrorKind::kSyntax, sqlite3_errmsg(db_)};
  if (!stmt) return SqlError{SqlErrorKind::kSyntax, "empty query"};

  std::string_view rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
  if (skip_filler(rest, 0) != rest.size()) {
    return SqlError{SqlErrorKind::kRuntime, "only a single statement may be executed"};
  }
  auto keyword = leading_keyword(sql);
  if (!sqlite3_stmt_readonly(stmt.get()) ||
      (keyword != "SELECT" && keyword != "WITH" && keyword != "VALUES")) {
    return SqlError{SqlErrorKind::kRuntime, "attempt to write a readonly database"};
  }

  Deadline deadline{std::chrono::steady_clock::now() + timeout};
  sqlite3_progress_handler(db_, 1000, &progress_check, &deadline);

  ResultSet result;
  int ncols = sqlite3_column_count(stmt.get());
  for (int i = 0; i < ncols; ++i) {
    const char* name = sqlite3_column_name(stmt.get(), i);
    result.column_names.emplace_back(name ? name : "");
  }
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    ++result.total_row_count;
    if (result.rows.size() < row_limit) {
      std::vector<std::string> row;
      row.reserve(static_cast<std::size_t>(ncols));
      for (int i = 0; i < ncols; ++i) row.push_back(column_text(stmt.get(), i));
      result.rows.push_back(std::move(row));
    } else {
      result.truncated = true;
    }
  }
  sqlite3_progress_handler(db_, 0, nullptr, nullptr);

  if (rc != SQLITE_DONE) {
    if (rc == SQLITE_INTERRUPT) {
      return SqlError{SqlErrorKind::kRuntime,
                      "interrupted: query exceeded " + std::to_string(timeout.count()) + " ms"};
    }
    return SqlError{SqlErrorKind::kRuntime, sqlite3_errmsg(db_)};
  }
  return result;
}

ResultSet sample_result(const ResultSet& result, std::size_t k) {
  ResultSet out;
  out.column_names = result.column_names;
  out.total_row_count = result.total_row_count;
  auto n = std::min(k, result.rows.size());
  out.rows.assign(result.rows.begin(), result.rows.begin() + static_cast<std::ptrdiff_t>(n));
  out.truncated = result.truncated || n < result.rows.size();
  return out;
}

std::string render_result(const ResultSet& result) {
  std::string out;
  auto cell = [](const std::string& s) {
    std::string c = s;
    std::replace(c.begin(), c.end(), '|', '/');
    std::replace(c.begin(), c.end(), '\n', ' ');
    return c;
  };
  for (std::size_t i = 0; i < result.column_names.size(); ++i) {
    if (i) out.push_back('|');
    out += cell(result.column_names[i]);
  }
  for (const auto& row : result.rows) {
    out.push_back('\n');
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back('|');
      out += cell(row[i]);
    }
  }
  if (result.rows.size() != result.total_row_count) {
    out += "\n(" + std::to_string(result.rows.size()) + " of " +
           std::to_string(result.total_row_count) + " rows shown)";
  } else if (result.rows.empty()) {
    out += "\n(no rows)";
  }
  return out;
}

}  // namespace coq

#include "adversarial.hpp"

#include <random>
#include <set>
#include <stdexcept>

#include "coq/backends.hpp"

namespace coq::testing {

namespace {

std::string q(const std::string& ident) { return quote_identifier(ident); }

std::string random_case(const std::string& s, std::mt19937& rng) {
  std::string out = s;
  if (rng() % 2) {
    for (auto& c : out) {
      if (rng() % 3 == 0) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

std::string decorate(const std::string& sql, std::mt19937& rng) {
  switch (rng() % 5) {
    case 0:
      return "  " + sql;
    case 1:
      return "/* x */ " + sql;
    case 2:
      return "-- note\n" + sql;
    case 3:
      return sql + " ;";
    default:
      return sql;
  }
}

}  // namespace

std::vector<AdversarialQuery> adversarial_queries(const std::string& rel, const std::string& col,
                                                  std::size_t count, unsigned seed) {
  std::mt19937 rng(seed);
  const auto R = q(rel), C = q(col);

  // Statements the engine accepts but the sandbox must refuse at run time.
  std::vector<std::string> refused = {
      "INSERT INTO " + R + " (" + C + ") VALUES ('x')",
      "INSERT INTO " + R + " SELECT * FROM " + R,
      "REPLACE INTO " + R + " (" + C + ") VALUES ('y')",
      "UPDATE " + R + " SET " + C + " = 'z'",
      "UPDATE " + R + " SET " + C + " = NULL WHERE 1 = 1",
      "DELETE FROM " + R,
      "DELETE FROM " + R + " WHERE " + C + " IS NOT NULL",
      "DROP TABLE " + R,
      "DROP TABLE IF EXISTS " + R,
      "ALTER TABLE " + R + " RENAME TO hijacked",
      "ALTER TABLE " + R + " ADD COLUMN extra TEXT",
      "CREATE TABLE shadow (a TEXT)",
      "CREATE TABLE shadow AS SELECT * FROM " + R,
      "CREATE INDEX idx_shadow ON " + R + " (" + C + ")",
      "CREATE VIEW v_shadow AS SELECT * FROM " + R,
      "CREATE TRIGGER trg AFTER INSERT ON " + R + " BEGIN DELETE FROM " + R + "; END",
      "PRAGMA query_only = OFF",
      "PRAGMA writable_schema = ON",
      "PRAGMA table_info(" + R + ")",
      "ATTACH DATABASE ':memory:' AS aux",
      "DETACH DATABASE main",
      "BEGIN",
      "BEGIN IMMEDIATE",
      "COMMIT",
      "ROLLBACK",
      "SAVEPOINT sp",
      "VACUUM",
      "ANALYZE",
      "REINDEX",
      "EXPLAIN SELECT * FROM " + R,
      "EXPLAIN DELETE FROM " + R,
      "WITH c AS (SELECT 1) DELETE FROM " + R,
      "WITH c AS (SELECT 1) INSERT INTO " + R + " (" + C + ") SELECT * FROM c",
      "WITH c AS (SELECT 1) UPDATE " + R + " SET " + C + " = 'w'",
      "SELECT * FROM " + R + "; DELETE FROM " + R,
      "SELECT 1; DROP TABLE " + R,
      "SELECT 1; SELECT 2",
      "SELECT " + C + " FROM " + R + "; UPDATE " + R + " SET " + C + " = 'q'",
      "SELECT 1; PRAGMA query_only = OFF; DELETE FROM " + R,
      "SELECT 1; -- trailing\nINSERT INTO " + R + " (" + C + ") VALUES ('x')",
      "SELECT 1; BEGIN; DELETE FROM " + R + "; COMMIT",
      "SELECT 1;;DELETE FROM " + R,
  };
  // Text the engine cannot prepare.
  std::vector<std::string> unparsable = {
      "SELEC * FROM " + R,
      "DROP TABLE",
      "DELETE " + R,
      "INSERT INTO " + R + " VALUES",
      "UPDATE SET " + C + " = 1",
      "DROP TABLE no_such_table",
      "DELETE FROM no_such_table",
      "INSERT INTO no_such_table VALUES (1)",
      "UPDATE " + R + " SET no_such_column = 1",
      "'; DROP TABLE " + R + "; --",
      "\"; DELETE FROM " + R + "; --",
      "SELECT * FROM " + R + " WHERE",
      "SELECT * FROM " + R + " WHERE " + C + " = 'a' OR",
      "SELECT FROM " + R,
      "CREATE TABLE",
      "ATTACH",
      "PRAGMA",
      "SELECT * FROM no_such_table",
      "SELECT no_such_column FROM " + R,
      "SELECT (1",
      "1; DROP TABLE " + R,
      "DELETE FROM " + R + " WHERE",
      "ALTER TABLE no_such_table RENAME TO t2",
      "CREATE INDEX ON " + R,
  };

  std::vector<AdversarialQuery> out;
  std::set<std::string> seen;
  auto add = [&](std::string sql, SqlErrorKind kind) {
    if (seen.insert(sql).second) out.push_back({std::move(sql), kind});
  };
  for (const auto& s : refused) add(s, SqlErrorKind::kRuntime);
  for (const auto& s : unparsable) add(s, SqlErrorKind::kSyntax);

  std::size_t guard = 0;
  while (out.size() < count) {
    if (++guard > count * 100) throw std::logic_error("cannot generate enough distinct queries");
    bool pick_refused = rng() % 3 != 0;
    const auto& pool = pick_refused ? refused : unparsable;
    auto base = pool[rng() % pool.size()];
    auto sql = decorate(random_case(base, rng), rng);
    // Keyword case changes do not alter the class; trailing ";" is filler.
    add(sql, pick_refused ? SqlErrorKind::kRuntime : SqlErrorKind::kSyntax);
  }
  out.resize(count);
  return out;
}

RelationFingerprint fingerprint(const Sandbox& sandbox) {
  auto result = sandbox.execute("SELECT * FROM " + q(sandbox.relation_name()), 1000000);
  if (!succeeded(result)) throw std::runtime_error("fingerprint query failed");
  const auto& rs = std::get<ResultSet>(result);
  std::string material;
  for (const auto& row : rs.rows) {
    for (const auto& cell : row) material += cell + '\x1f';
    material += '\x1e';
  }
  return {rs.total_row_count, sha256_hex(material)};
}

}  // namespace coq::testing

#include "coq/sql_chain.hpp"

#include <algorithm>
#include <stdexcept>

#include "coq/errors.hpp"
#include "coq/sql_text.hpp"

namespace coq {

namespace {

using sql_text::Token;
using sql_text::TokenKind;

bool has_word(const std::vector<Token>& tokens, std::string_view word) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const Token& t) { return t.kind == TokenKind::kWord && t.norm == word; });
}

bool has_order_by(const std::vector<Token>& tokens) {
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].kind == TokenKind::kWord && tokens[i].norm == "ORDER" &&
        tokens[i + 1].kind == TokenKind::kWord && tokens[i + 1].norm == "BY") {
      return true;
    }
  }
  return false;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

Role generation_role(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::kSelectFrom:
      return Role::kClauseSelectFrom;
    case ClauseKind::kWhere:
      return Role::kClauseWhere;
    case ClauseKind::kWithAs:
      return Role::kClauseWithAs;
    case ClauseKind::kAggregate:
      return Role::kClauseAgg;
    case ClauseKind::kOrderBy:
      return Role::kClauseOrderBy;
  }
  throw std::logic_error("unknown clause kind");
}

std::string shape_message(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::kSelectFrom:
      return "The query must be a single SELECT statement over the given table.";
    case ClauseKind::kWhere:
      return "The query text outside the WHERE clause was changed or no WHERE clause was added. "
             "Keep the provided query intact and only insert the WHERE clause.";
    case ClauseKind::kWithAs:
      return "The query must start with WITH and its final SELECT must keep every column selected "
             "by the provided query.";
    case ClauseKind::kAggregate:
      return "The query must keep its FROM and WHERE parts and use exactly one aggregate function "
             "(COUNT, AVG, MAX, MIN or SUM), not nested.";
    case ClauseKind::kOrderBy:
      return "The query text outside the ORDER BY clause was changed or no ORDER BY clause was "
             "added. Keep the provided query intact and only add the ORDER BY clause.";
  }
  return "The query changed more than the requested clause.";
}

struct Check {
  bool ok = false;
  std::optional<SqlError> error;
  std::optional<std::string> shape;

  std::string message() const {
    if (error) return error->message;
    if (shape) return *shape;
    return {};
  }
};

Check check_candidate(const AgentContext& ctx, const std::string& prev, const std::string& candidate,
                      ClauseKind kind) {
  auto result = ctx.execute(candidate);
  if (auto* err = std::get_if<SqlError>(&result)) return Check{false, *err, std::nullopt};
  if (!diff_step(prev, candidate, kind)) return Check{false, std::nullopt, shape_message(kind)};
  return Check{true, std::nullopt, std::nullopt};
}

std::optional<std::string> try_parse_sql(const std::string& response) {
  try {
    return parse_fenced_sql(response);
  } catch (const NoSqlFound&) {
    return std::nullopt;
  }
}

const SqlError kNoSql{SqlErrorKind::kSyntax, "no SQL query found in the response"};

struct Attempt {
  bool ok = false;
  std::string sql;             // accepted query when ok
  std::string candidate;       // first candidate (may be empty if unparsable)
  std::string corrected;       // candidate after correction
  bool correction_used = false;
  std::size_t failed = 0;
  Check first_check;
  Check final_check;
};

// Generates a candidate for `kind`, validates it against `prev`, and makes
// one correction call if needed. BudgetExhausted propagates; `partial`
// receives what was known at that point.
Attempt generate_validated(AgentContext& ctx, const SubQuestion& subq, ClauseKind kind,
                           const std::string& prev, const std::string& prompt_sql, Attempt& partial) {
  Attempt& a = partial;
  auto ex = ctx.gateway.complete(generation_role(kind), {{"schema", ctx.schema_text},
                                                         {"question", subq.text},
                                                         {"sql", prompt_sql}});
  auto cand = try_parse_sql(ex.response);
  a.candidate = cand.value_or("");
  a.first_check = cand ? check_candidate(ctx, prev, *cand, kind) : Check{false, kNoSql, std::nullopt};
  if (a.first_check.ok) {
    a.ok = true;
    a.sql = *cand;
    a.final_check = a.first_check;
    return a;
  }

  a.correction_used = true;
  a.failed = 1;
  auto fix = ctx.gateway.complete(Role::kCorrect, {{"schema", ctx.schema_text},
                                                  {"question", subq.text},
                                                  {"sql", cand.value_or(prompt_sql)},
                                                  {"error", a.first_check.message()},
                                                  {"clause", std::string(clause_label(kind))}});
  auto corrected = try_parse_sql(fix.response);
  a.corrected = corrected.value_or("");
  a.final_check = corrected ? check_candidate(ctx, prev, *corrected, kind) : Check{false, kNoSql, std::nullopt};
  if (a.final_check.ok) {
    a.ok = true;
    a.sql = *corrected;
  } else {
    a.failed = 2;
  }
  return a;
}

}  // namespace

std::string_view to_string(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::kSelectFrom:
      return "SELECT_FROM";
    case ClauseKind::kWhere:
      return "WHERE";
    case ClauseKind::kWithAs:
      return "WITH_AS";
    case ClauseKind::kAggregate:
      return "AGGREGATE";
    case ClauseKind::kOrderBy:
      return "ORDER_BY";
  }
  return "UNKNOWN";
}

ClauseKind clause_kind_from_string(std::string_view name) {
  for (auto k : kAllClauseKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown clause kind: " + std::string(name));
}

std::string_view clause_label(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::kSelectFrom:
      return "SELECT";
    case ClauseKind::kWhere:
      return "WHERE";
    case ClauseKind::kWithAs:
      return "WITH AS";
    case ClauseKind::kAggregate:
      return "aggregate function";
    case ClauseKind::kOrderBy:
      return "ORDER BY";
  }
  return "";
}

void QueryChain::append(ClauseStep step) {
  if (!step.validated) throw std::logic_error("only validated steps may join a chain");
  if (steps_.empty() && step.kind != ClauseKind::kSelectFrom) {
    throw std::logic_error("a chain must start with SELECT_FROM");
  }
  if (applied_.count(step.kind)) {
    throw std::logic_error("clause kind " + std::string(to_string(step.kind)) + " already applied");
  }
  if (step.correction_used && !step.error_before_correction && !step.shape_violation) {
    throw std::logic_error("a corrected step must record what it corrected");
  }
  applied_.insert(step.kind);
  steps_.push_back(std::move(step));
}

const std::string& QueryChain::current_sql() const {
  if (steps_.empty()) throw std::logic_error("empty chain has no current query");
  return steps_.back().sql_after;
}

std::string select_from_skeleton(const std::string& relation) {
  return "SELECT () FROM " + quote_identifier(relation);
}

QueryChain init_chain(const SubQuestion& subq, AgentContext& ctx) {
  auto skeleton = select_from_skeleton(ctx.sandbox.relation_name());
  Attempt attempt;
  generate_validated(ctx, subq, ClauseKind::kSelectFrom, skeleton, skeleton, attempt);

  QueryChain chain;
  if (attempt.ok) {
    ClauseStep step{ClauseKind::kSelectFrom, attempt.sql, true, attempt.correction_used,
                    std::nullopt, std::nullopt, attempt.failed};
    if (attempt.correction_used) {
      step.error_before_correction = attempt.first_check.error;
      step.shape_violation = attempt.first_check.shape;
    }
    chain.append(std::move(step));
    return chain;
  }

  auto fallback = "SELECT * FROM " + quote_identifier(ctx.sandbox.relation_name());
  if (succeeded(ctx.execute(fallback))) {
    chain.append(ClauseStep{ClauseKind::kSelectFrom, fallback, true, true, attempt.first_check.error,
                            attempt.first_check.shape, attempt.failed});
  }
  return chain;
}

ExtendOutcome extend_chain(const QueryChain& chain, ClauseKind kind, const SubQuestion& subq,
                           AgentContext& ctx) {
  if (kind == ClauseKind::kSelectFrom) throw std::invalid_argument("SELECT_FROM only starts a chain");
  if (chain.empty()) throw std::invalid_argument("cannot extend an empty chain");
  if (chain.applied_kinds().count(kind)) {
    throw std::invalid_argument("clause kind " + std::string(to_string(kind)) + " already applied");
  }

  const auto& prev = chain.current_sql();
  auto prompt_sql = kind == ClauseKind::kWhere ? prev + " WHERE ()" : prev;

  ExtendOutcome out{chain, false, std::nullopt, false};
  Attempt attempt;
  try {
    generate_validated(ctx, subq, kind, prev, prompt_sql, attempt);
  } catch (const BudgetExhausted&) {
    out.budget_exhausted = true;
    if (!attempt.candidate.empty() || attempt.first_check.error || attempt.first_check.shape) {
      out.rejected = RejectedStep{kind, attempt.candidate, "", "call budget exhausted before correction", 1};
    }
    return out;
  }

  if (!attempt.ok) {
    out.rejected = RejectedStep{kind, attempt.candidate, attempt.corrected,
                                attempt.final_check.message(), attempt.failed};
    return out;
  }
  ClauseStep step{kind, attempt.sql, true, attempt.correction_used, std::nullopt, std::nullopt,
                  attempt.failed};
  if (attempt.correction_used) {
    step.error_before_correction = attempt.first_check.error;
    step.shape_violation = attempt.first_check.shape;
  }
  out.chain.append(std::move(step));
  out.extended = true;
  return out;
}

bool diff_step(std::string_view prev_sql, std::string_view next_sql, ClauseKind kind) {
  auto prev = sql_text::tokenize(prev_sql);
  auto next = sql_text::tokenize(next_sql);
  if (next.empty()) return false;

  switch (kind) {
    case ClauseKind::kSelectFrom:
      return next.front().kind == TokenKind::kWord && next.front().norm == "SELECT";

    case ClauseKind::kWhere:
    case ClauseKind::kOrderBy: {
      std::vector<Token> added;
      bool kept = sql_text::contains_run(next, prev, &added) ||
                  sql_text::single_insertion(prev, next, &added);
      if (!kept || added.empty()) return false;
      return kind == ClauseKind::kWhere ? has_word(added, "WHERE") : has_order_by(added);
    }

    case ClauseKind::kWithAs: {
      if (next.front().kind != TokenKind::kWord || next.front().norm != "WITH") return false;
      auto before = sql_text::output_names(prev);
      auto after = sql_text::output_names(next);
      if (after.empty()) return false;
      if (std::find(before.begin(), before.end(), "*") != before.end()) return true;
      if (std::find(after.begin(), after.end(), "*") != after.end()) return true;
      for (const auto& name : before) {
        bool kept = std::any_of(after.begin(), after.end(),
                                [&](const std::string& a) { return upper(a) == upper(name); });
        if (!kept) return false;
      }
      return true;
    }

    case ClauseKind::kAggregate: {
      auto p = sql_text::split_final_select(prev);
      auto n = sql_text::split_final_select(next);
      if (!p.found || !n.found) return false;
      if (!sql_text::tokens_equal(p.head, n.head)) return false;
      if (!sql_text::tokens_equal(p.tail, n.tail) && !sql_text::single_insertion(p.tail, n.tail)) {
        return false;
      }
      auto use = sql_text::find_aggregates(n.list);
      if (use.functions.empty() || use.nested) return false;
      return std::all_of(use.functions.begin(), use.functions.end(),
                         [&](const std::string& f) { return f == use.functions.front(); });
    }
  }
  return false;
}

}  // namespace coq

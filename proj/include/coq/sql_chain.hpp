#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "coq/context.hpp"
#include "coq/sandbox.hpp"
#include "coq/splitter.hpp"

namespace coq {

enum class ClauseKind { kSelectFrom, kWhere, kWithAs, kAggregate, kOrderBy };

inline constexpr ClauseKind kAllClauseKinds[] = {ClauseKind::kSelectFrom, ClauseKind::kWhere,
                                                 ClauseKind::kWithAs, ClauseKind::kAggregate,
                                                 ClauseKind::kOrderBy};

std::string_view to_string(ClauseKind kind);
ClauseKind clause_kind_from_string(std::string_view name);  // throws std::invalid_argument

// Clause name as it reads inside the correction prompt ("an error occurred in
// the WHERE clause").
std::string_view clause_label(ClauseKind kind);

struct ClauseStep {
  ClauseKind kind = ClauseKind::kSelectFrom;
  std::string sql_after;
  bool validated = false;
  bool correction_used = false;
  // What sent the step to correction: an engine error, or a candidate that
  // changed more than its clause.
  std::optional<SqlError> error_before_correction;
  std::optional<std::string> shape_violation;
  std::size_t failed_candidates = 0;  // candidates rejected before this one held
};

// Ordered validated states of one sub-question's query. The first step is
// always SELECT_FROM and each kind appears at most once.
class QueryChain {
 public:
  QueryChain() = default;

  // Throws std::logic_error when the step would break a chain invariant.
  void append(ClauseStep step);

  const std::vector<ClauseStep>& steps() const { return steps_; }
  const std::set<ClauseKind>& applied_kinds() const { return applied_; }
  bool empty() const { return steps_.empty(); }
  const std::string& current_sql() const;

 private:
  std::vector<ClauseStep> steps_;
  std::set<ClauseKind> applied_;
};

// A clause extension that failed validation and correction.
struct RejectedStep {
  ClauseKind kind = ClauseKind::kWhere;
  std::string candidate_sql;
  std::string corrected_sql;
  std::string reason;
  std::size_t failed_candidates = 0;
};

// Incomplete SELECT-FROM query the generator fills in.
std::string select_from_skeleton(const std::string& relation);

// Starts a chain: one CLAUSE_SELECT_FROM call, one correction on failure, and
// a SELECT * fallback when both fail. The chain is empty only if even the
// fallback cannot execute. BudgetExhausted propagates.
QueryChain init_chain(const SubQuestion& subq, AgentContext& ctx);

struct ExtendOutcome {
  QueryChain chain;
  bool extended = false;
  std::optional<RejectedStep> rejected;
  bool budget_exhausted = false;
};

// Adds one clause of `kind`. The candidate must execute and pass diff_step;
// otherwise one CORRECT call is made, and if that also fails the input chain
// is returned unchanged. Budget exhaustion also leaves the chain unchanged.
ExtendOutcome extend_chain(const QueryChain& chain, ClauseKind kind, const SubQuestion& subq,
                           AgentContext& ctx);

// Whether `next` differs from `prev` only in the way `kind` allows:
//   WHERE, ORDER_BY  prev survives intact and the added tokens hold the keyword
//   WITH_AS          next starts with WITH and its final SELECT keeps prev's columns
//   AGGREGATE        text around the select list survives and the list uses
//                    exactly one of COUNT/AVG/MAX/MIN/SUM, not nested
//   SELECT_FROM      next is a SELECT (a chain has no predecessor for it)
bool diff_step(std::string_view prev_sql, std::string_view next_sql, ClauseKind kind);

}  // namespace coq

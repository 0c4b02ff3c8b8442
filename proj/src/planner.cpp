#include "coq/planner.hpp"

#include <stdexcept>

#include "coq/errors.hpp"

namespace coq {

namespace {

Role need_role(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::kWhere:
      return Role::kPlanWhereNeeded;
    case ClauseKind::kWithAs:
      return Role::kPlanWithAsNeeded;
    case ClauseKind::kAggregate:
      return Role::kPlanAggNeeded;
    case ClauseKind::kOrderBy:
      return Role::kPlanOrderByNeeded;
    case ClauseKind::kSelectFrom:
      break;
  }
  throw std::logic_error("SELECT_FROM is never a planner candidate");
}

bool says_yes(const std::string& response) {
  try {
    return parse_yes_no(response);
  } catch (const NoDecisionFound&) {
    return false;
  }
}

}  // namespace

std::string_view to_string(Verdict verdict) { return verdict == Verdict::kStop ? "STOP" : "ADD"; }

PlannerDecision decide(const SubQuestion& subq, const QueryChain& chain, const ResultSet& sample,
                       const std::set<ClauseKind>& considered, AgentContext& ctx) {
  if (chain.empty()) throw std::invalid_argument("planner needs a validated query");
  PlannerDecision d;
  d.subquestion_index = subq.index;

  Bindings bindings{{"schema", ctx.schema_text},
                    {"question", subq.text},
                    {"sql", chain.current_sql()},
                    {"result", render_result(sample)},
                    {"row_count", std::to_string(ctx.table.row_count())}};
  try {
    auto suff = ctx.gateway.complete(Role::kPlanSufficient, bindings);
    d.rationale_text = suff.response;
    if (says_yes(suff.response)) return d;

    for (auto kind : kCandidateOrder) {
      if (considered.count(kind) || chain.applied_kinds().count(kind)) continue;
      auto need = ctx.gateway.complete(need_role(kind), bindings);
      if (says_yes(need.response)) {
        d.verdict = Verdict::kAdd;
        d.kind = kind;
        d.rationale_text = need.response;
        return d;
      }
      d.declined.push_back(kind);
    }
  } catch (const BudgetExhausted&) {
    d.budget_exhausted = true;
  }
  return d;
}

}  // namespace coq

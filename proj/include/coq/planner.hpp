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
#include "coq/sql_chain.hpp"

namespace coq {

enum class Verdict { kStop, kAdd };

std::string_view to_string(Verdict verdict);

struct PlannerDecision {
  Verdict verdict = Verdict::kStop;
  std::optional<ClauseKind> kind;  // set iff verdict is kAdd
  std::string rationale_text;      // response that settled the decision
  std::size_t subquestion_index = 0;
  bool budget_exhausted = false;
  std::vector<ClauseKind> declined;  // kinds answered No in this round
};

// Clause kinds the planner may propose, in the order they are offered.
inline constexpr ClauseKind kCandidateOrder[] = {ClauseKind::kWhere, ClauseKind::kWithAs,
                                                 ClauseKind::kAggregate, ClauseKind::kOrderBy};

// One planning round on the current query and its sampled result.
//
// Asks PLAN_SUFFICIENT first; Yes stops. Otherwise each candidate kind not in
// `considered` and not already applied gets its need-this-clause question,
// and the first Yes is proposed. Callers add every kind they act on to
// `considered` along with `declined`, so a kind is offered at most once per
// chain. Running out of
// budget stops; an unreadable decision counts as No.
PlannerDecision decide(const SubQuestion& subq, const QueryChain& chain, const ResultSet& sample,
                       const std::set<ClauseKind>& considered, AgentContext& ctx);

}  // namespace coq

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "coq/context.hpp"
#include "coq/sandbox.hpp"
#include "coq/splitter.hpp"

namespace coq {

struct SubAnswer {
  std::size_t subquestion_index = 0;
  std::string text;
  std::string source_sql;
  std::string source_result_digest;  // SHA-256 of the rendered result
  bool low_confidence = false;       // the result had no rows
  bool marker_missing = false;       // no "Answer:" marker; whole response kept
  bool degraded = false;             // built without an LLM call
};

struct FinalAnswer {
  std::string text;
  std::vector<SubAnswer> subanswers;
  bool shortcut = false;  // promoted a single short sub-answer without a call
};

// One SUB_ANSWER call on the chain's final query and its result.
// BudgetExhausted and backend errors propagate.
SubAnswer answer_sub(const SubQuestion& subq, const std::string& sql, const ResultSet& result,
                     AgentContext& ctx);

// Sub-answer made from the result alone when no call is left: the first row's
// cells joined by ", ". nullopt when there is no row to use.
std::optional<SubAnswer> degraded_sub_answer(const SubQuestion& subq, const std::string& sql,
                                             const ResultSet& result);

// Single line of at most five words.
bool is_short_span(const std::string& text);

// Combines sub-answers (one per sub-question, each index exactly once) with a
// FINAL_ANSWER call. A single short sub-answer is promoted without a call
// unless `always_call` is set. Throws std::invalid_argument on a coverage
// mismatch; BudgetExhausted propagates.
FinalAnswer aggregate_final(const std::string& question, const std::vector<SubQuestion>& subqs,
                            std::vector<SubAnswer> subanswers, Gateway& gateway, bool always_call);

// Final answer assembled without a call: sub-answer texts joined by "; ".
FinalAnswer join_subanswers(std::vector<SubAnswer> subanswers);

}  // namespace coq

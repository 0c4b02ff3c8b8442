#pragma once

// Rule-based stand-in for a chat model. It reads the role and the [Input]
// section of each prompt and answers from a per-question plan, so scripted
// runs exercise the real prompts end to end.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coq/backends.hpp"
#include "coq/table.hpp"

namespace coq::testing {

struct SubPlan {
  std::string text;
  std::string select;     // select list for SELECT_FROM
  std::string where;      // condition; empty when no WHERE is wanted
  std::string aggregate;  // replacement select list; empty when none
  std::string order_by;   // ORDER BY body; empty when none
  std::string answer;
  // When set, the first WHERE candidate; the correction then yields `where`.
  std::string broken_where;
};

struct QuestionPlan {
  std::string question;
  std::vector<SubPlan> subs;  // a single entry equal to the question means "not decomposed"
  std::string final_answer;
};

// Text of the line "<label>" in the [Input] section, or the block that
// follows "<label>\n" up to the next blank line.
std::string input_field(const std::string& prompt, const std::string& label);
std::string input_block(const std::string& prompt, const std::string& label);

class SimLlm {
 public:
  // Returning a value replaces the planned response for that request.
  using Override = std::function<std::optional<std::string>(const LlmRequest&)>;

  explicit SimLlm(std::vector<QuestionPlan> plans) : plans_(std::move(plans)) {}

  void set_override(Override o) { override_ = std::move(o); }

  std::string respond(const LlmRequest& request) const;

  // ScriptedBackend bound to this simulator; the simulator must outlive it.
  ScriptedBackend backend(std::string id = "sim") const;

 private:
  const QuestionPlan* find_question(const std::string& text) const;
  const SubPlan* find_sub(const std::string& text) const;

  std::vector<QuestionPlan> plans_;
  Override override_;
};

std::string sql_response(const std::string& sql);
std::string decision_response(bool yes, const std::string& why = "Checked the query result.");
std::string answer_response(const std::string& answer);

// Case-study table: Name, 2001, 2002, n_win_loss over three tournaments.
Table santoro_table();
constexpr const char* kSantoroQuestion = "Did Fabrice Santoro win more at the Australian Open or Wimbledon?";
QuestionPlan santoro_plan();

}  // namespace coq::testing

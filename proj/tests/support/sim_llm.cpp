#include "sim_llm.hpp"

#include <stdexcept>

#include "coq/errors.hpp"

namespace coq::testing {

namespace {

std::string input_section(const std::string& prompt) {
  auto pos = prompt.rfind("[Input]\n");
  return pos == std::string::npos ? prompt : prompt.substr(pos + 8);
}

bool contains(const std::string& hay, const std::string& needle) {
  return !needle.empty() && hay.find(needle) != std::string::npos;
}

std::string replace_select_list(const std::string& sql, const std::string& list) {
  auto from = sql.find(" FROM ");
  if (sql.rfind("SELECT ", 0) != 0 || from == std::string::npos) return sql;
  return "SELECT " + list + sql.substr(from);
}

std::string subquestion_block(const std::vector<std::string>& subs) {
  std::string out = "```python\nsubquestions = [\n";
  for (const auto& s : subs) out += "    \"" + s + "\",\n";
  return out + "]\n```";
}

}  // namespace

std::string input_field(const std::string& prompt, const std::string& label) {
  auto input = input_section(prompt);
  auto pos = input.rfind("\n" + label);
  if (pos == std::string::npos) {
    if (input.rfind(label, 0) != 0) return {};
    pos = 0;
  } else {
    ++pos;
  }
  auto start = pos + label.size();
  auto end = input.find('\n', start);
  return input.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::string input_block(const std::string& prompt, const std::string& label) {
  auto input = input_section(prompt);
  auto pos = input.find(label + "\n");
  if (pos == std::string::npos) return {};
  auto start = pos + label.size() + 1;
  auto end = input.find("\n\n", start);
  auto block = input.substr(start, end == std::string::npos ? std::string::npos : end - start);
  while (!block.empty() && block.back() == '\n') block.pop_back();
  return block;
}

std::string sql_response(const std::string& sql) {
  return "Analysis:\n**Build the query step by step.**\nSQL:\n```sql\n" + sql + "\n```";
}

std::string decision_response(bool yes, const std::string& why) {
  return "Analysis:\n**" + why + "**\nDecision:\n" + (yes ? "Yes" : "No");
}

std::string answer_response(const std::string& answer) {
  return "Analysis:\n**Read the answer off the result.**\nAnswer:\n" + answer;
}

const QuestionPlan* SimLlm::find_question(const std::string& text) const {
  for (const auto& p : plans_) {
    if (p.question == text) return &p;
  }
  return nullptr;
}

const SubPlan* SimLlm::find_sub(const std::string& text) const {
  for (const auto& p : plans_) {
    for (const auto& s : p.subs) {
      if (s.text == text) return &s;
    }
  }
  return nullptr;
}

std::string SimLlm::respond(const LlmRequest& req) const {
  if (override_) {
    if (auto r = override_(req)) return *r;
  }
  const auto& prompt = req.prompt;

  if (req.role == Role::kDecompose) {
    auto q = input_field(prompt, "Question: ");
    std::vector<std::string> subs;
    if (const auto* plan = find_question(q)) {
      for (const auto& s : plan->subs) subs.push_back(s.text);
    } else {
      subs.push_back(q);
    }
    return "Analysis:\n**Split into independent parts.**\nSubquestions:\n" + subquestion_block(subs);
  }
  if (req.role == Role::kFinalAnswer) {
    const auto* plan = find_question(input_field(prompt, "Original question: "));
    if (!plan) throw BackendUnavailable("simulator has no plan for the final answer");
    return answer_response(plan->final_answer);
  }

  auto q = input_field(prompt, "Question: ");
  const auto* sub = find_sub(q);
  if (!sub) throw BackendUnavailable("simulator has no plan for question: " + q);

  switch (req.role) {
    case Role::kClauseSelectFrom: {
      auto skeleton = input_block(prompt, "Incomplete SQLite query:");
      auto pos = skeleton.find("()");
      return sql_response(skeleton.substr(0, pos) + sub->select + skeleton.substr(pos + 2));
    }
    case Role::kClauseWhere: {
      auto base = input_block(prompt, "Incomplete SQLite query:");
      auto pos = base.rfind(" WHERE ()");
      auto prefix = base.substr(0, pos);
      auto cond = sub->broken_where.empty() ? sub->where : sub->broken_where;
      return sql_response(prefix + " WHERE " + cond);
    }
    case Role::kClauseAgg:
      return sql_response(replace_select_list(input_block(prompt, "Basic SQLite query:"), sub->aggregate));
    case Role::kClauseOrderBy:
      return sql_response(input_block(prompt, "Basic SQLite query:") + " ORDER BY " + sub->order_by);
    case Role::kClauseWithAs:
      return sql_response("WITH base AS (" + input_block(prompt, "Basic SQLite query:") +
                          ") SELECT * FROM base");
    case Role::kCorrect: {
      auto bad = input_block(prompt, "Incorrect SQLite query:");
      auto pos = bad.find(" WHERE ");
      if (pos != std::string::npos && !sub->where.empty()) {
        return sql_response(bad.substr(0, pos) + " WHERE " + sub->where);
      }
      return sql_response(bad);
    }
    case Role::kPlanSufficient: {
      auto sql = input_block(prompt, "SQLite query:");
      bool done = (sub->where.empty() || contains(sql, " WHERE ")) &&
                  (sub->aggregate.empty() || contains(sql, sub->aggregate)) &&
                  (sub->order_by.empty() || contains(sql, " ORDER BY "));
      return decision_response(done);
    }
    case Role::kPlanWhereNeeded:
      return decision_response(!sub->where.empty());
    case Role::kPlanWithAsNeeded:
      return decision_response(false);
    case Role::kPlanAggNeeded:
      return decision_response(!sub->aggregate.empty() &&
                               !contains(input_block(prompt, "Current SQLite query:"), sub->aggregate));
    case Role::kPlanOrderByNeeded:
      return decision_response(!sub->order_by.empty() &&
                               !contains(input_block(prompt, "Current SQLite query:"), " ORDER BY "));
    case Role::kSubAnswer:
      return answer_response(sub->answer);
    default:
      break;
  }
  throw BackendUnavailable("simulator cannot answer role " + std::string(to_string(req.role)));
}

ScriptedBackend SimLlm::backend(std::string id) const {
  return ScriptedBackend([this](const LlmRequest& r) { return respond(r); }, std::move(id));
}

Table santoro_table() {
  return infer_types(make_table("santoro", {"Name", "2001", "2002", "n_win_loss"},
                                {{"Australian Open", "2R", "3R", "22-18"},
                                 {"French Open", "2R", "2R", "17-20"},
                                 {"Wimbledon", "2R", "1R", "11-14"}}));
}

QuestionPlan santoro_plan() {
  SubPlan sub;
  sub.text = kSantoroQuestion;
  sub.select = "\"Name\", \"n_win_loss\"";
  sub.answer = "Australian Open";
  return QuestionPlan{kSantoroQuestion, {sub}, "Australian Open"};
}

}  // namespace coq::testing

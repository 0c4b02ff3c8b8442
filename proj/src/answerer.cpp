#include "coq/answerer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "coq/backends.hpp"

namespace coq {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string render_subanswers(const std::vector<SubQuestion>& subqs, const std::vector<SubAnswer>& answers) {
  std::string out;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto& a = answers[i];
    if (i) out += "\n";
    out += "Subquestion " + std::to_string(a.subquestion_index + 1) + ": " +
           subqs[a.subquestion_index].text + "\n";
    out += "Subanswer " + std::to_string(a.subquestion_index + 1) + ": " + a.text + "\n";
  }
  return out;
}

}  // namespace

SubAnswer answer_sub(const SubQuestion& subq, const std::string& sql, const ResultSet& result,
                     AgentContext& ctx) {
  auto rendered = render_result(result);
  auto ex = ctx.gateway.complete(Role::kSubAnswer, {{"schema", ctx.schema_text},
                                                   {"question", subq.text},
                                                   {"sql", sql},
                                                   {"result", rendered}});
  SubAnswer a;
  a.subquestion_index = subq.index;
  a.source_sql = sql;
  a.source_result_digest = sha256_hex(rendered);
  a.low_confidence = result.rows.empty();
  auto text = parse_answer(ex.response);
  if (text) {
    a.text = *text;
  } else {
    a.marker_missing = true;
    a.text = trim(ex.response);
  }
  return a;
}

std::optional<SubAnswer> degraded_sub_answer(const SubQuestion& subq, const std::string& sql,
                                             const ResultSet& result) {
  if (result.rows.empty()) return std::nullopt;
  SubAnswer a;
  a.subquestion_index = subq.index;
  a.source_sql = sql;
  a.source_result_digest = sha256_hex(render_result(result));
  a.degraded = true;
  for (const auto& cell : result.rows.front()) {
    if (!a.text.empty()) a.text += ", ";
    a.text += cell;
  }
  if (trim(a.text).empty()) return std::nullopt;
  return a;
}

bool is_short_span(const std::string& text) {
  auto t = trim(text);
  if (t.empty() || t.find('\n') != std::string::npos) return false;
  std::istringstream in(t);
  std::string word;
  std::size_t n = 0;
  while (in >> word) ++n;
  return n <= 5;
}

FinalAnswer aggregate_final(const std::string& question, const std::vector<SubQuestion>& subqs,
                            std::vector<SubAnswer> subanswers, Gateway& gateway, bool always_call) {
  if (subanswers.empty()) throw std::invalid_argument("no sub-answers to aggregate");
  if (subanswers.size() != subqs.size()) {
    throw std::invalid_argument("expected " + std::to_string(subqs.size()) + " sub-answers, got " +
                                std::to_string(subanswers.size()));
  }
  std::vector<bool> seen(subqs.size(), false);
  for (const auto& a : subanswers) {
    if (a.subquestion_index >= subqs.size() || seen[a.subquestion_index]) {
      throw std::invalid_argument("sub-answer index " + std::to_string(a.subquestion_index) +
                                  " is out of range or repeated");
    }
    seen[a.subquestion_index] = true;
  }
  std::sort(subanswers.begin(), subanswers.end(),
            [](const SubAnswer& x, const SubAnswer& y) { return x.subquestion_index < y.subquestion_index; });

  FinalAnswer out;
  if (subanswers.size() == 1 && !always_call && is_short_span(subanswers.front().text)) {
    out.text = trim(subanswers.front().text);
    out.shortcut = true;
    out.subanswers = std::move(subanswers);
    return out;
  }
  auto ex = gateway.complete(Role::kFinalAnswer, {{"question", question},
                                                 {"subanswers", render_subanswers(subqs, subanswers)}});
  out.text = parse_answer(ex.response).value_or(trim(ex.response));
  out.subanswers = std::move(subanswers);
  return out;
}

FinalAnswer join_subanswers(std::vector<SubAnswer> subanswers) {
  FinalAnswer out;
  for (const auto& a : subanswers) {
    if (!out.text.empty()) out.text += "; ";
    out.text += a.text;
  }
  out.subanswers = std::move(subanswers);
  return out;
}

}  // namespace coq

#include "coq/splitter.hpp"

#include <stdexcept>

namespace coq {

std::vector<SubQuestion> decompose(const std::string& question, const NLSchema& schema,
                                   Gateway& gateway, std::size_t max_subquestions) {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw std::invalid_argument("question must not be empty");
  }
  auto exchange = gateway.complete(Role::kDecompose,
                                   {{"schema", render_schema(schema)}, {"question", question}});
  auto texts = parse_subquestion_list(exchange.response, question);
  if (texts.size() > max_subquestions) texts.resize(max_subquestions);

  std::vector<SubQuestion> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(SubQuestion{texts[i], i, question});
  return out;
}

std::vector<SubQuestion> undivided(const std::string& question) {
  return {SubQuestion{question, 0, question}};
}

}  // namespace coq

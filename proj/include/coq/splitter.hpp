#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "coq/llm.hpp"
#include "coq/table.hpp"

namespace coq {

struct SubQuestion {
  std::string text;
  std::size_t index = 0;
  std::string parent_question;
};

// One DECOMPOSE call. Sub-questions are independent of each other; at most
// `max_subquestions` are kept, in the order given. Budget and backend errors
// propagate.
std::vector<SubQuestion> decompose(const std::string& question, const NLSchema& schema,
                                   Gateway& gateway, std::size_t max_subquestions);

// The question as its own single sub-question, without any LLM call.
std::vector<SubQuestion> undivided(const std::string& question);

}  // namespace coq

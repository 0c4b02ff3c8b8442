#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coq/prompts.hpp"

namespace coq {

struct LlmExchange {
  Role role;
  std::string prompt;
  std::string response;
  std::string backend_id;
  std::size_t sequence_no = 0;
};

constexpr std::size_t kDefaultCallBudget = 22;

struct CallBudget {
  std::size_t max_calls = kDefaultCallBudget;
  std::size_t used = 0;

  bool exhausted() const { return used >= max_calls; }
  std::size_t remaining() const { return exhausted() ? 0 : max_calls - used; }
};

struct DecodingOptions {
  double temperature = 0.0;
  double top_p = 1.0;
};

struct LlmRequest {
  Role role;
  std::string prompt;
  DecodingOptions decoding;
};

// Something that turns a prompt into a completion. Implementations must be
// safe to call from several threads at once.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual std::string id() const = 0;
};

// Per-question view of a shared backend. Owns the call budget and the
// exchange trace for one run; every call goes through complete().
class Gateway {
 public:
  Gateway(LlmBackend& backend, const PromptCatalog& catalog, std::size_t max_calls,
          DecodingOptions decoding = {});

  // Renders the role's template with `bindings`, spends one call and records
  // the exchange. Throws BudgetExhausted before contacting the backend when
  // no calls remain; backend errors propagate without consuming budget.
  LlmExchange complete(Role role, const Bindings& bindings);

  CallBudget budget() const;
  std::vector<LlmExchange> trace() const;
  std::size_t calls_made() const;

  const PromptCatalog& catalog() const { return catalog_; }

 private:
  LlmBackend& backend_;
  const PromptCatalog& catalog_;
  DecodingOptions decoding_;
  mutable std::mutex mu_;
  CallBudget budget_;
  std::vector<LlmExchange> trace_;
};

// Content of the last ```sql fenced block, trimmed. Without any fence, a
// response with exactly one SELECT/WITH line yields that line. Throws NoSqlFound.
std::string parse_fenced_sql(std::string_view response);

// Decision after the last "Decision:" marker, or the last standalone yes/no
// token when there is no marker. Throws NoDecisionFound.
bool parse_yes_no(std::string_view response);

// Strings of the `subquestions = [...]` literal inside a fenced block. Falls
// back to {original_question} on any parse failure or an empty list.
std::vector<std::string> parse_subquestion_list(std::string_view response,
                                                const std::string& original_question);

// Text after the last "Answer:" marker; nullopt when the marker is missing.
std::optional<std::string> parse_answer(std::string_view response);

}  // namespace coq

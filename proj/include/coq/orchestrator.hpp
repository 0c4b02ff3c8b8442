#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coq/answerer.hpp"
#include "coq/config.hpp"
#include "coq/llm.hpp"
#include "coq/planner.hpp"
#include "coq/sandbox.hpp"
#include "coq/splitter.hpp"
#include "coq/sql_chain.hpp"
#include "coq/table.hpp"

namespace coq {

enum class RunStatus { kClean, kPartial, kFailed };

std::string_view to_string(RunStatus status);
RunStatus run_status_from_string(std::string_view name);

struct RunRecord {
  std::string id;
  std::string question;
  std::string table_id;
  std::vector<SubQuestion> subquestions;
  std::vector<QueryChain> chains;                   // one per sub-question
  std::vector<std::vector<RejectedStep>> rejected;  // one list per sub-question
  std::vector<LlmExchange> exchanges;
  std::vector<PlannerDecision> decisions;
  std::optional<FinalAnswer> final_answer;
  std::size_t call_count = 0;
  std::size_t budget = 0;
  // True when sub-question i ended without any validated query.
  std::vector<bool> invalid_flags;
  // Candidate queries that failed validation, per sub-question.
  std::vector<std::size_t> raw_step_failures;
  bool budget_exhausted = false;
  RunStatus status = RunStatus::kClean;
  std::string error;
  std::int64_t wall_time_ms = 0;
};

using SandboxFactory = std::function<std::unique_ptr<Sandbox>(const Table&)>;

struct RunHooks {
  SandboxFactory make_sandbox;  // defaults to a plain Sandbox
};

// Answers one question: schema, decomposition, one query chain per
// sub-question grown until the planner stops, sub-answers, final answer.
// Never throws for run-time failures; they end up in status and error.
RunRecord run_question(const Table& table, const std::string& question, LlmBackend& backend,
                       const PromptCatalog& catalog, const RunConfig& config, const RunHooks& hooks = {});

struct BatchItem {
  std::string id;
  const Table* table = nullptr;
  std::string question;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const RunRecord& record)>;

// Runs every item with up to `parallelism` workers. Records come back in
// item order. `progress` is called once per finished run, one call at a time.
std::vector<RunRecord> run_batch(const std::vector<BatchItem>& items, LlmBackend& backend,
                                 const PromptCatalog& catalog, const RunConfig& config,
                                 std::size_t parallelism, const ProgressFn& progress = {},
                                 const RunHooks& hooks = {});

// Canonical form: every field except wall time, keys sorted.
nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);
std::string canonical_record(const RunRecord& record);

// One line of records.jsonl: {"envelope":{"wall_time_ms":N},"record":{...}}.
std::string record_to_jsonl_line(const RunRecord& record);
RunRecord record_from_jsonl_line(std::string_view line);

}  // namespace coq

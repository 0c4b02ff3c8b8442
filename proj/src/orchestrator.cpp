#include "coq/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "coq/backends.hpp"
#include "coq/context.hpp"
#include "coq/errors.hpp"

namespace coq {

namespace {

using nlohmann::json;

struct SubRun {
  QueryChain chain;
  std::vector<RejectedStep> rejected;
  std::optional<ResultSet> result;  // of the chain's final query
};

// Grows one chain until the planner stops. Sets `exhausted` when the budget
// runs out; the chain built so far is kept.
SubRun build_chain(const SubQuestion& subq, AgentContext& ctx, std::vector<PlannerDecision>& decisions,
                   bool& exhausted) {
  SubRun run;
  if (exhausted) return run;
  try {
    run.chain = init_chain(subq, ctx);
  } catch (const BudgetExhausted&) {
    exhausted = true;
    return run;
  }

  std::set<ClauseKind> considered;
  while (!run.chain.empty()) {
    auto executed = ctx.execute(run.chain.current_sql());
    if (auto* err = std::get_if<SqlError>(&executed)) {
      throw EngineFailure("validated query stopped executing: " + err->message);
    }
    run.result = std::get<ResultSet>(executed);
    if (exhausted) break;

    auto d = decide(subq, run.chain, sample_result(*run.result, ctx.config.sample_k), considered, ctx);
    considered.insert(d.declined.begin(), d.declined.end());
    decisions.push_back(d);
    if (d.budget_exhausted) exhausted = true;
    if (d.verdict == Verdict::kStop) break;

    considered.insert(*d.kind);
    auto out = extend_chain(run.chain, *d.kind, subq, ctx);
    if (out.rejected) run.rejected.push_back(*out.rejected);
    run.chain = std::move(out.chain);
    if (out.budget_exhausted) exhausted = true;
  }
  return run;
}

std::size_t count_failures(const QueryChain& chain, const std::vector<RejectedStep>& rejected) {
  std::size_t n = 0;
  for (const auto& s : chain.steps()) n += s.failed_candidates;
  for (const auto& r : rejected) n += r.failed_candidates;
  return n;
}

void fill_outcome(RunRecord& r) {
  if (!r.error.empty() || !r.final_answer) {
    r.status = RunStatus::kFailed;
    if (r.error.empty()) r.error = "no final answer";
  } else {
    r.status = r.budget_exhausted ? RunStatus::kPartial : RunStatus::kClean;
  }
}

}  // namespace

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kClean:
      return "clean";
    case RunStatus::kPartial:
      return "partial";
    case RunStatus::kFailed:
      return "failed";
  }
  return "failed";
}

RunStatus run_status_from_string(std::string_view name) {
  if (name == "clean") return RunStatus::kClean;
  if (name == "partial") return RunStatus::kPartial;
  if (name == "failed") return RunStatus::kFailed;
  throw std::invalid_argument("unknown run status: " + std::string(name));
}

RunRecord run_question(const Table& table, const std::string& question, LlmBackend& backend,
                       const PromptCatalog& catalog, const RunConfig& config, const RunHooks& hooks) {
  auto started = std::chrono::steady_clock::now();
  RunRecord r;
  r.question = question;
  r.table_id = table.name();
  r.budget = config.budget;
  Gateway gateway(backend, catalog, config.budget, config.decoding);

  try {
    auto schema = build_nl_schema(table, config.sample_k);
    auto sandbox = hooks.make_sandbox ? hooks.make_sandbox(table) : std::make_unique<Sandbox>(table);
    AgentContext ctx(table, schema, gateway, *sandbox, config);

    try {
      r.subquestions = decompose(question, schema, gateway, config.max_subquestions);
    } catch (const BudgetExhausted&) {
      r.budget_exhausted = true;
      r.subquestions = undivided(question);
    }

    std::vector<SubAnswer> answers;
    for (const auto& subq : r.subquestions) {
      auto sub = build_chain(subq, ctx, r.decisions, r.budget_exhausted);
      auto sql = sub.chain.empty() ? std::string() : sub.chain.current_sql();
      auto result = sub.result.value_or(ResultSet{});

      std::optional<SubAnswer> answer;
      if (!r.budget_exhausted) {
        try {
          answer = answer_sub(subq, sql, result, ctx);
        } catch (const BudgetExhausted&) {
          r.budget_exhausted = true;
        }
      }
      if (!answer) answer = degraded_sub_answer(subq, sql, result);
      if (answer) answers.push_back(*answer);

      r.raw_step_failures.push_back(count_failures(sub.chain, sub.rejected));
      r.invalid_flags.push_back(sub.chain.empty());
      r.chains.push_back(std::move(sub.chain));
      r.rejected.push_back(std::move(sub.rejected));
    }

    if (answers.size() == r.subquestions.size()) {
      try {
        r.final_answer = aggregate_final(question, r.subquestions, answers, gateway, config.strict_paper_mode);
      } catch (const BudgetExhausted&) {
        r.budget_exhausted = true;
        r.final_answer = join_subanswers(answers);
      }
    } else if (!answers.empty()) {
      r.final_answer = join_subanswers(answers);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }

  r.exchanges = gateway.trace();
  r.call_count = r.exchanges.size();
  // Sub-questions never reached count as invalid.
  while (r.invalid_flags.size() < r.subquestions.size()) {
    r.invalid_flags.push_back(true);
    r.raw_step_failures.push_back(0);
    r.chains.emplace_back();
    r.rejected.emplace_back();
  }
  fill_outcome(r);
  r.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
  return r;
}

std::vector<RunRecord> run_batch(const std::vector<BatchItem>& items, LlmBackend& backend,
                                 const PromptCatalog& catalog, const RunConfig& config,
                                 std::size_t parallelism, const ProgressFn& progress,
                                 const RunHooks& hooks) {
  std::vector<RunRecord> records(items.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mu;
  std::size_t done = 0;

  auto worker = [&] {
    for (auto i = next++; i < items.size(); i = next++) {
      const auto& item = items[i];
      RunRecord rec;
      if (!item.table) {
        rec.question = item.question;
        rec.error = "missing table";
        rec.status = RunStatus::kFailed;
      } else {
        rec = run_question(*item.table, item.question, backend, catalog, config, hooks);
      }
      rec.id = item.id;
      records[i] = std::move(rec);
      std::lock_guard lock(progress_mu);
      ++done;
      if (progress) progress(done, items.size(), records[i]);
    }
  };

  auto workers = std::max<std::size_t>(1, std::min(parallelism, items.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> read_optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

SqlErrorKind sql_error_kind_from_string(const std::string& s) {
  if (s == "SYNTAX") return SqlErrorKind::kSyntax;
  if (s == "RUNTIME") return SqlErrorKind::kRuntime;
  throw std::invalid_argument("unknown SQL error kind: " + s);
}

json step_to_json(const ClauseStep& s) {
  json err = nullptr;
  if (s.error_before_correction) {
    err = {{"kind", std::string(to_string(s.error_before_correction->kind))},
           {"message", s.error_before_correction->message}};
  }
  return {{"kind", std::string(to_string(s.kind))},
          {"sql", s.sql_after},
          {"validated", s.validated},
          {"correction_used", s.correction_used},
          {"error_before_correction", err},
          {"shape_violation", optional_string(s.shape_violation)},
          {"failed_candidates", s.failed_candidates}};
}

ClauseStep step_from_json(const json& j) {
  ClauseStep s;
  s.kind = clause_kind_from_string(j.at("kind").get<std::string>());
  s.sql_after = j.at("sql").get<std::string>();
  s.validated = j.at("validated").get<bool>();
  s.correction_used = j.at("correction_used").get<bool>();
  const auto& err = j.at("error_before_correction");
  if (!err.is_null()) {
    s.error_before_correction =
        SqlError{sql_error_kind_from_string(err.at("kind").get<std::string>()), err.at("message").get<std::string>()};
  }
  s.shape_violation = read_optional_string(j, "shape_violation");
  s.failed_candidates = j.value("failed_candidates", std::size_t{0});
  return s;
}

json subanswer_to_json(const SubAnswer& a) {
  return {{"subquestion_index", a.subquestion_index},
          {"text", a.text},
          {"source_sql", a.source_sql},
          {"source_result_digest", a.source_result_digest},
          {"low_confidence", a.low_confidence},
          {"marker_missing", a.marker_missing},
          {"degraded", a.degraded}};
}

SubAnswer subanswer_from_json(const json& j) {
  SubAnswer a;
  a.subquestion_index = j.at("subquestion_index").get<std::size_t>();
  a.text = j.at("text").get<std::string>();
  a.source_sql = j.at("source_sql").get<std::string>();
  a.source_result_digest = j.at("source_result_digest").get<std::string>();
  a.low_confidence = j.value("low_confidence", false);
  a.marker_missing = j.value("marker_missing", false);
  a.degraded = j.value("degraded", false);
  return a;
}

}  // namespace

json record_to_json(const RunRecord& r) {
  json subqs = json::array();
  for (const auto& s : r.subquestions) subqs.push_back({{"index", s.index}, {"text", s.text}});

  json chains = json::array();
  for (const auto& c : r.chains) {
    json steps = json::array();
    for (const auto& s : c.steps()) steps.push_back(step_to_json(s));
    chains.push_back(std::move(steps));
  }

  json rejected = json::array();
  for (const auto& list : r.rejected) {
    json items = json::array();
    for (const auto& rs : list) {
      items.push_back({{"kind", std::string(to_string(rs.kind))},
                       {"candidate_sql", rs.candidate_sql},
                       {"corrected_sql", rs.corrected_sql},
                       {"reason", rs.reason},
                       {"failed_candidates", rs.failed_candidates}});
    }
    rejected.push_back(std::move(items));
  }

  json decisions = json::array();
  for (const auto& d : r.decisions) {
    json declined = json::array();
    for (auto k : d.declined) declined.push_back(std::string(to_string(k)));
    decisions.push_back({{"subquestion_index", d.subquestion_index},
                         {"verdict", std::string(to_string(d.verdict))},
                         {"kind", d.kind ? json(std::string(to_string(*d.kind))) : json(nullptr)},
                         {"declined", declined},
                         {"budget_exhausted", d.budget_exhausted},
                         {"rationale_text", d.rationale_text}});
  }

  json exchanges = json::array();
  for (const auto& e : r.exchanges) exchanges.push_back(exchange_to_json(e));

  json final_answer = nullptr;
  if (r.final_answer) {
    json subs = json::array();
    for (const auto& a : r.final_answer->subanswers) subs.push_back(subanswer_to_json(a));
    final_answer = {{"text", r.final_answer->text}, {"shortcut", r.final_answer->shortcut}, {"subanswers", subs}};
  }

  json flags = json::array();
  for (bool f : r.invalid_flags) flags.push_back(f);

  return {{"id", r.id},
          {"question", r.question},
          {"table_id", r.table_id},
          {"subquestions", subqs},
          {"chains", chains},
          {"rejected", rejected},
          {"decisions", decisions},
          {"exchanges", exchanges},
          {"final_answer", final_answer},
          {"call_count", r.call_count},
          {"budget", r.budget},
          {"invalid_flags", flags},
          {"raw_step_failures", r.raw_step_failures},
          {"budget_exhausted", r.budget_exhausted},
          {"status", std::string(to_string(r.status))},
          {"error", r.error}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.id = j.value("id", std::string());
  r.question = j.at("question").get<std::string>();
  r.table_id = j.value("table_id", std::string());
  for (const auto& s : j.at("subquestions")) {
    r.subquestions.push_back(SubQuestion{s.at("text").get<std::string>(), s.at("index").get<std::size_t>(), r.question});
  }
  for (const auto& steps : j.at("chains")) {
    QueryChain chain;
    for (const auto& s : steps) chain.append(step_from_json(s));
    r.chains.push_back(std::move(chain));
  }
  for (const auto& list : j.at("rejected")) {
    std::vector<RejectedStep> items;
    for (const auto& rs : list) {
      items.push_back(RejectedStep{clause_kind_from_string(rs.at("kind").get<std::string>()),
                                   rs.at("candidate_sql").get<std::string>(),
                                   rs.at("corrected_sql").get<std::string>(), rs.at("reason").get<std::string>(),
                                   rs.value("failed_candidates", std::size_t{0})});
    }
    r.rejected.push_back(std::move(items));
  }
  for (const auto& d : j.at("decisions")) {
    PlannerDecision pd;
    pd.subquestion_index = d.at("subquestion_index").get<std::size_t>();
    pd.verdict = d.at("verdict").get<std::string>() == "ADD" ? Verdict::kAdd : Verdict::kStop;
    if (!d.at("kind").is_null()) pd.kind = clause_kind_from_string(d.at("kind").get<std::string>());
    for (const auto& k : d.at("declined")) pd.declined.push_back(clause_kind_from_string(k.get<std::string>()));
    pd.budget_exhausted = d.at("budget_exhausted").get<bool>();
    pd.rationale_text = d.at("rationale_text").get<std::string>();
    r.decisions.push_back(std::move(pd));
  }
  for (const auto& e : j.at("exchanges")) r.exchanges.push_back(exchange_from_json(e));
  const auto& fa = j.at("final_answer");
  if (!fa.is_null()) {
    FinalAnswer f;
    f.text = fa.at("text").get<std::string>();
    f.shortcut = fa.at("shortcut").get<bool>();
    for (const auto& a : fa.at("subanswers")) f.subanswers.push_back(subanswer_from_json(a));
    r.final_answer = std::move(f);
  }
  r.call_count = j.at("call_count").get<std::size_t>();
  r.budget = j.value("budget", std::size_t{0});
  for (const auto& f : j.at("invalid_flags")) r.invalid_flags.push_back(f.get<bool>());
  r.raw_step_failures = j.value("raw_step_failures", std::vector<std::size_t>{});
  r.budget_exhausted = j.value("budget_exhausted", false);
  r.status = run_status_from_string(j.at("status").get<std::string>());
  r.error = j.value("error", std::string());
  return r;
}

namespace {

// Model output is not guaranteed to be valid UTF-8.
std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace

std::string canonical_record(const RunRecord& record) { return dump(record_to_json(record)); }

std::string record_to_jsonl_line(const RunRecord& record) {
  json line{{"envelope", {{"wall_time_ms", record.wall_time_ms}}}, {"record", record_to_json(record)}};
  return dump(line);
}

RunRecord record_from_jsonl_line(std::string_view line) {
  auto j = json::parse(line);
  auto r = record_from_json(j.at("record"));
  r.wall_time_ms = j.at("envelope").value("wall_time_ms", std::int64_t{0});
  return r;
}

}  // namespace coq

#include "fixtures.hpp"

#include <fstream>

#include "coq/backends.hpp"
#include "coq/orchestrator.hpp"
#include "coq/runtime.hpp"
#include "sim_llm.hpp"
#include "synthetic.hpp"

namespace coq::testing {

namespace {

namespace fs = std::filesystem;

std::string csv_cell(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.column_count(); ++i) out += (i ? "," : "") + csv_cell(t.columns()[i].raw_name);
  out += "\n";
  for (const auto& row : t.rows()) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
    out += "\n";
  }
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

RunConfig config_for(bool strict) {
  RunConfig c;
  c.strict_paper_mode = strict;
  return c;
}

// Runs each question with the simulator and appends the exchanges.
void record_runs(const fs::path& out, const std::vector<QuestionPlan>& plans, const Table& table,
                 const std::vector<std::string>& questions, bool both_modes) {
  SimLlm sim(plans);
  auto backend = sim.backend();
  auto catalog = PromptCatalog::builtin();
  fs::remove(out);
  for (const auto& q : questions) {
    for (bool strict : both_modes ? std::vector<bool>{false, true} : std::vector<bool>{false}) {
      auto r = run_question(table, q, backend, catalog, config_for(strict));
      if (r.status != RunStatus::kClean) throw std::runtime_error("fixture run failed: " + r.error);
      append_exchanges(out, r.exchanges);
    }
  }
}

nlohmann::json rule(const char* role, const std::string& response, const std::string& contains = "") {
  nlohmann::json j{{"role", role}, {"response", response}};
  if (!contains.empty()) j["contains"] = contains;
  return j;
}

}  // namespace

const std::vector<std::string>& fixture_files() {
  static const std::vector<std::string> kFiles{
      "santoro.csv",         "santoro_dataset.jsonl", "santoro_replay.jsonl",     "santoro_rules.json",
      "league.csv",          "league_replay.jsonl",   "synthetic20.jsonl",        "synthetic20_replay.jsonl"};
  return kFiles;
}

void write_fixtures(const fs::path& dir) {
  fs::create_directories(dir);

  // Tables are reloaded from the written files so prompts match what the CLI sees.
  write_text(dir / "santoro.csv", to_csv(santoro_table()));
  auto santoro = load_table_file(dir / "santoro.csv");
  record_runs(dir / "santoro_replay.jsonl", {santoro_plan()}, santoro, {kSantoroQuestion}, true);
  EvalExample santoro_example{"santoro", santoro, kSantoroQuestion, {"Australian Open"}, TaskKind::kQa};
  write_dataset(dir / "santoro_dataset.jsonl", {santoro_example});

  auto plan = santoro_plan();
  nlohmann::json rules = nlohmann::json::array(
      {rule("DECOMPOSE", "Subquestions:\n```python\nsubquestions = [\n    \"" + std::string(kSantoroQuestion) +
                             "\",\n]\n```"),
       rule("CLAUSE_SELECT_FROM", sql_response("SELECT " + plan.subs[0].select + " FROM \"santoro\"")),
       rule("PLAN_SUFFICIENT", decision_response(true)), rule("SUB_ANSWER", answer_response("Australian Open")),
       rule("FINAL_ANSWER", answer_response("Australian Open"))});
  write_text(dir / "santoro_rules.json", rules.dump(2) + "\n");

  write_text(dir / "league.csv", to_csv(league_table()));
  auto league = load_table_file(dir / "league.csv");
  record_runs(dir / "league_replay.jsonl", {league_plan()}, league, {kLeagueQuestion}, true);

  auto cases = synthetic_cases(kSyntheticFixtureSize, kSyntheticFixtureSeed);
  write_dataset(dir / "synthetic20.jsonl", examples_of(cases));
  auto loaded = load_dataset(dir / "synthetic20.jsonl").examples;
  SimLlm sim(plans_of(cases));
  auto backend = sim.backend();
  auto catalog = PromptCatalog::builtin();
  fs::remove(dir / "synthetic20_replay.jsonl");
  for (const auto& e : loaded) {
    auto r = run_question(e.table, e.question, backend, catalog, config_for(false));
    if (r.status != RunStatus::kClean) throw std::runtime_error("fixture run failed: " + e.id + ": " + r.error);
    append_exchanges(dir / "synthetic20_replay.jsonl", r.exchanges);
  }
}

}  // namespace coq::testing

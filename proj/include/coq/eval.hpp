#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coq/orchestrator.hpp"
#include "coq/table.hpp"

namespace coq {

enum class TaskKind { kQa, kTabFact };

struct EvalExample {
  std::string id;
  Table table;
  std::string question;
  std::vector<std::string> gold_answers;
  TaskKind task = TaskKind::kQa;
};

struct LoadedDataset {
  std::vector<EvalExample> examples;
  std::vector<std::string> warnings;  // one per skipped line
};

// Fraction of skipped lines above which loading fails.
constexpr double kMaxMalformedFraction = 0.10;

// JSON-lines dataset: {"id", "table": {"name", "header", "rows"}, "question",
// "answers", optional "task": "tabfact"}. Bad lines are skipped with a
// warning; more than 10% bad lines throws MalformedDataset.
LoadedDataset load_dataset(const std::filesystem::path& path);
LoadedDataset parse_dataset(std::string_view text);

nlohmann::json example_to_json(const EvalExample& example);
void write_dataset(const std::filesystem::path& path, const std::vector<EvalExample>& examples);

// WikiTableQuestions TSV (id, utterance, context, targetValue). Table paths in
// the context column are resolved against the TSV's directory, then its parent.
std::vector<EvalExample> convert_wikitq(const std::filesystem::path& tsv_path,
                                        std::vector<std::string>* warnings = nullptr);

// Undoes the TSV escapes \n, \p (for "|") and \\.
std::string unescape_wikitq(std::string_view field);

// TabFact statements file ({"<csv name>": [[statements], [labels], caption]})
// with '#'-delimited tables in `csv_dir`. Label 1 becomes "yes", 0 "no".
std::vector<EvalExample> convert_tabfact(const std::filesystem::path& statements_path,
                                         const std::filesystem::path& csv_dir,
                                         std::vector<std::string>* warnings = nullptr);

// Lowercase, trimmed, single-spaced, without a trailing ".".
std::string normalize_answer(std::string_view text);

// Maps a free-text verdict to "yes"/"no" by keyword; returns the normalized
// input when no keyword appears.
std::string map_tabfact_verdict(std::string_view text);

// Denotation match against any gold variant. Parts split on "|" or ", " are
// compared as multisets; numbers match within relative tolerance 1e-6.
bool score_answer(std::string_view predicted, const std::vector<std::string>& gold,
                  TaskKind task = TaskKind::kQa);

// Sub-questions flagged invalid over all sub-questions; 0 when there are none.
double compute_invalid_rate(const std::vector<RunRecord>& records);

constexpr std::size_t kHistogramBuckets = 5;
inline constexpr const char* kHistogramLabels[kHistogramBuckets] = {"<=5", "6-10", "11-20", "21-30",
                                                                    ">30"};
std::size_t histogram_bucket(std::size_t calls);

struct CallStats {
  double mean = 0.0;
  double median = 0.0;
  std::size_t max = 0;
  std::array<std::size_t, kHistogramBuckets> histogram{};
};

CallStats compute_call_stats(const std::vector<std::size_t>& call_counts);

struct ExampleScore {
  std::string id;
  bool correct = false;
  bool invalid = false;  // some sub-question ended without a valid query
  std::size_t calls = 0;
};

constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  std::size_t examples = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::size_t subquestions = 0;
  std::size_t invalid_subquestions = 0;
  double invalid_sql_rate = 0.0;
  std::size_t raw_step_failures = 0;
  CallStats call_stats;
  std::vector<ExampleScore> per_example;
};

// Throws IdMismatch unless records and examples pair up by id in order.
EvalReport report(const std::vector<RunRecord>& records, const std::vector<EvalExample>& examples);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

// "accuracy=X invalid=Y mean_calls=Z"
std::string summary_line(const EvalReport& report);

}  // namespace coq

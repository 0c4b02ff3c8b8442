#include "coq/eval.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "coq/errors.hpp"

namespace fs = std::filesystem;

namespace coq {
namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "coq_eval_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

struct MatchCase {
  const char* predicted;
  const char* gold;
  bool match;
};

// Hand-checked pairs.
const MatchCase kMatchCases[] = {
    {"Australian Open", "australian open", true},
    {"  Australian   Open. ", "Australian Open", true},
    {"Wimbledon", "Australian Open", false},
    {"1,234", "1234", true},
    {"1,234.50", "1234.5", true},
    {"3", "3.0", true},
    {"3", "3.0000001", true},
    {"3", "3.001", false},
    {"0", "0.0", true},
    {"-2", "2", false},
    {"1e3", "1000", true},
    {"a|b", "b|a", true},
    {"a, b", "b|a", true},
    {"a, b", "a", false},
    {"a|a|b", "a|b|b", false},
    {"1,2", "12", false},
    {"10|20", "20.0|10", true},
    {"New York, NY", "new york|ny", true},
    {"", "", false},
    {"no", "No.", true},
};

TEST(Scoring, HandCheckedPairs) {
  for (const auto& c : kMatchCases) {
    EXPECT_EQ(score_answer(c.predicted, {c.gold}), c.match) << c.predicted << " vs " << c.gold;
  }
}

TEST(Scoring, SymmetricOnHandCheckedPairs) {
  for (const auto& c : kMatchCases) {
    EXPECT_EQ(score_answer(c.predicted, {c.gold}), score_answer(c.gold, {c.predicted}))
        << c.predicted << " vs " << c.gold;
  }
}

TEST(Scoring, AnyGoldVariantCounts) {
  EXPECT_TRUE(score_answer("USA", {"United States", "usa"}));
  EXPECT_FALSE(score_answer("USA", {}));
  EXPECT_FALSE(score_answer("", {"x"}));
}

TEST(Scoring, NormalizationProperties) {
  std::mt19937 rng(5);
  const std::string alphabet = "aB3 .,|xZ\t";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int n = rng() % 12; n > 0; --n) s.push_back(alphabet[rng() % alphabet.size()]);
    auto once = normalize_answer(s);
    EXPECT_EQ(normalize_answer(once), once) << s;
    EXPECT_EQ(once.find("  "), std::string::npos);
    if (!once.empty()) {
      EXPECT_NE(once.back(), '.');
      EXPECT_NE(once.front(), ' ');
    }
    if (!once.empty()) EXPECT_TRUE(score_answer(s, {once})) << s;
  }
}

TEST(TabFact, VerdictKeywords) {
  EXPECT_EQ(map_tabfact_verdict("Yes, the statement is supported."), "yes");
  EXPECT_EQ(map_tabfact_verdict("The statement is not true"), "no");
  EXPECT_EQ(map_tabfact_verdict("REFUTED"), "no");
  EXPECT_EQ(map_tabfact_verdict("not refuted"), "yes");
  EXPECT_EQ(map_tabfact_verdict("42"), "42");
  EXPECT_TRUE(score_answer("Entailed", {"yes"}, TaskKind::kTabFact));
  EXPECT_FALSE(score_answer("False", {"yes"}, TaskKind::kTabFact));
}

RunRecord record(std::string id, std::string answer, std::vector<bool> invalid, std::size_t calls,
                 std::vector<std::size_t> failures = {}) {
  RunRecord r;
  r.id = std::move(id);
  if (!answer.empty()) r.final_answer = FinalAnswer{answer, {}, false};
  r.invalid_flags = std::move(invalid);
  r.call_count = calls;
  r.raw_step_failures = std::move(failures);
  return r;
}

EvalExample example(std::string id, std::string gold) {
  return EvalExample{std::move(id), make_table("t", {"a"}, {{"1"}}), "q?", {std::move(gold)}, TaskKind::kQa};
}

TEST(InvalidRate, CountsSubQuestions) {
  EXPECT_EQ(compute_invalid_rate({}), 0.0);
  EXPECT_EQ(compute_invalid_rate({record("a", "", {}, 0)}), 0.0);
  EXPECT_DOUBLE_EQ(compute_invalid_rate({record("a", "", {true, false}, 0), record("b", "", {false}, 0)}),
                   1.0 / 3.0);
  EXPECT_DOUBLE_EQ(compute_invalid_rate({record("a", "", {true}, 0), record("b", "", {true, true}, 0)}), 1.0);
}

TEST(CallStats, BucketsAndMedian) {
  EXPECT_EQ(histogram_bucket(0), 0u);
  EXPECT_EQ(histogram_bucket(5), 0u);
  EXPECT_EQ(histogram_bucket(6), 1u);
  EXPECT_EQ(histogram_bucket(10), 1u);
  EXPECT_EQ(histogram_bucket(11), 2u);
  EXPECT_EQ(histogram_bucket(20), 2u);
  EXPECT_EQ(histogram_bucket(21), 3u);
  EXPECT_EQ(histogram_bucket(30), 3u);
  EXPECT_EQ(histogram_bucket(31), 4u);

  auto s = compute_call_stats({4, 14, 5, 22});
  EXPECT_DOUBLE_EQ(s.mean, 11.25);
  EXPECT_DOUBLE_EQ(s.median, 9.5);
  EXPECT_EQ(s.max, 22u);
  EXPECT_EQ(s.histogram, (std::array<std::size_t, kHistogramBuckets>{2, 0, 1, 1, 0}));
  EXPECT_DOUBLE_EQ(compute_call_stats({7, 3, 9}).median, 7.0);
  EXPECT_EQ(compute_call_stats({}).max, 0u);
}

TEST(Report, AggregatesRecords) {
  std::vector<EvalExample> ex{example("a", "Paris"), example("b", "3"), example("c", "x")};
  std::vector<RunRecord> rs{record("a", "paris", {false, false}, 10, {1, 0}), record("b", "4", {true}, 5, {2}),
                            record("c", "", {true}, 22, {0})};
  auto rep = report(rs, ex);
  EXPECT_EQ(rep.examples, 3u);
  EXPECT_EQ(rep.correct, 1u);
  EXPECT_DOUBLE_EQ(rep.accuracy, 1.0 / 3.0);
  EXPECT_EQ(rep.subquestions, 4u);
  EXPECT_EQ(rep.invalid_subquestions, 2u);
  EXPECT_DOUBLE_EQ(rep.invalid_sql_rate, 0.5);
  EXPECT_EQ(rep.raw_step_failures, 3u);
  EXPECT_EQ(rep.call_stats.max, 22u);
  ASSERT_EQ(rep.per_example.size(), 3u);
  EXPECT_TRUE(rep.per_example[1].invalid);

  auto j = report_to_json(rep);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["call_stats"]["histogram"]["<=5"], 1);
  EXPECT_EQ(j["call_stats"]["histogram"]["21-30"], 1);
  EXPECT_EQ(summary_line(rep), "accuracy=0.3333 invalid=0.5000 mean_calls=12.33");
  EXPECT_NE(report_to_text(rep).find("0.3333"), std::string::npos);
}

TEST(Report, EmptyIsZero) {
  auto rep = report({}, {});
  EXPECT_EQ(rep.accuracy, 0.0);
  EXPECT_EQ(rep.invalid_sql_rate, 0.0);
  EXPECT_EQ(summary_line(rep), "accuracy=0.0000 invalid=0.0000 mean_calls=0.00");
}

TEST(Report, IdsMustPairUp) {
  EXPECT_THROW(report({record("a", "", {}, 0)}, {}), IdMismatch);
  EXPECT_THROW(report({record("b", "", {}, 0), record("a", "", {}, 0)}, {example("a", "1"), example("b", "2")}),
               IdMismatch);
}

std::string dataset_line(const std::string& id) {
  return R"({"id":")" + id +
         R"(","table":{"name":"t","header":["a","b"],"rows":[["1","x"],["2","y"]]},"question":"q?","answers":["1"]})";
}

TEST(Dataset, LoadsValidLines) {
  auto ds = parse_dataset(dataset_line("e1") + "\n\n" + dataset_line("e2") + "\n");
  ASSERT_EQ(ds.examples.size(), 2u);
  EXPECT_EQ(ds.examples[1].id, "e2");
  EXPECT_EQ(ds.examples[0].table.row_count(), 2u);
  EXPECT_TRUE(ds.warnings.empty());
}

TEST(Dataset, SkipsFewBadLinesWithWarning) {
  std::string text;
  for (int i = 0; i < 10; ++i) text += dataset_line("e" + std::to_string(i)) + "\n";
  text += "{broken\n";
  auto ds = parse_dataset(text);
  EXPECT_EQ(ds.examples.size(), 10u);
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("line 11"), std::string::npos);
}

TEST(Dataset, TooManyBadLinesFail) {
  std::string text;
  for (int i = 0; i < 8; ++i) text += dataset_line("e" + std::to_string(i)) + "\n";
  text += "{broken\n{\"id\":\"no-table\"}\n";
  EXPECT_THROW(parse_dataset(text), MalformedDataset);
}

TEST(Dataset, EmptyIsFine) {
  auto ds = parse_dataset("");
  EXPECT_TRUE(ds.examples.empty());
}

TEST(Dataset, WriteThenLoad) {
  auto dir = scratch_dir("roundtrip");
  auto ds = parse_dataset(dataset_line("e1") + "\n");
  ds.examples[0].task = TaskKind::kTabFact;
  write_dataset(dir / "d.jsonl", ds.examples);
  auto back = load_dataset(dir / "d.jsonl");
  ASSERT_EQ(back.examples.size(), 1u);
  EXPECT_EQ(back.examples[0].task, TaskKind::kTabFact);
  EXPECT_EQ(example_to_json(back.examples[0]), example_to_json(ds.examples[0]));
}

TEST(Convert, WikiTqTsv) {
  auto dir = scratch_dir("wikitq");
  write(dir / "csv" / "203-csv" / "1.csv", "Year,City\n2001,Paris\n2002,\"Rome, IT\"\n");
  write(dir / "data" / "training.tsv",
        "id\tutterance\tcontext\ttargetValue\n"
        "nt-0\twhich city in 2001?\tcsv/203-csv/1.csv\tParis\n"
        "nt-1\tlist both\tcsv/203-csv/1.csv\tParis|Rome, IT\n"
        "nt-2\tescaped\\nquestion\tcsv/203-csv/1.csv\ta\\pb\n"
        "nt-3\tmissing table\tcsv/203-csv/9.csv\tx\n");
  std::vector<std::string> warnings;
  auto examples = convert_wikitq(dir / "data" / "training.tsv", &warnings);
  ASSERT_EQ(examples.size(), 3u);
  EXPECT_EQ(examples[0].id, "nt-0");
  EXPECT_EQ(examples[0].table.name(), "table_1");
  EXPECT_EQ(examples[0].table.row_count(), 2u);
  EXPECT_EQ(examples[0].gold_answers, std::vector<std::string>{"Paris"});
  EXPECT_EQ(examples[1].gold_answers, std::vector<std::string>{"Paris|Rome, IT"});
  EXPECT_EQ(examples[2].question, "escaped\nquestion");
  EXPECT_EQ(examples[2].gold_answers, std::vector<std::string>{"a|b"});
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_TRUE(score_answer("Rome, IT|Paris", examples[1].gold_answers));
}

TEST(Convert, WikiTqEscapes) {
  EXPECT_EQ(unescape_wikitq(R"(a\nb\pc\\d)"), "a\nb|c\\d");
  EXPECT_EQ(unescape_wikitq(R"(trailing\)"), "trailing\\");
}

TEST(Convert, TabFact) {
  auto dir = scratch_dir("tabfact");
  write(dir / "all_csv" / "2-1.html.csv", "team#wins\nreds#3\nblues#5\n");
  write(dir / "statements.json",
        R"({"2-1.html.csv": [["blues won 5", "reds won 5"], [1, 0], "league"],
            "missing.csv": [["x"], [1], "c"]})");
  std::vector<std::string> warnings;
  auto examples = convert_tabfact(dir / "statements.json", dir / "all_csv", &warnings);
  ASSERT_EQ(examples.size(), 2u);
  EXPECT_EQ(examples[0].id, "2-1.html-0");
  EXPECT_EQ(examples[0].task, TaskKind::kTabFact);
  EXPECT_EQ(examples[0].gold_answers, std::vector<std::string>{"yes"});
  EXPECT_EQ(examples[1].gold_answers, std::vector<std::string>{"no"});
  EXPECT_EQ(examples[0].table.row_count(), 2u);
  EXPECT_EQ(warnings.size(), 1u);
}

}  // namespace
}  // namespace coq

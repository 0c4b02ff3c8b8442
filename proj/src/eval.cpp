#include "coq/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "coq/errors.hpp"

namespace coq {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedDataset("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

EvalExample example_from_json(const json& j) {
  auto id = j.at("id").get<std::string>();
  const auto& t = j.at("table");
  auto name = t.value("name", std::string());
  if (name.empty()) name = "table_" + id;
  auto header = t.at("header").get<std::vector<std::string>>();
  auto rows = t.at("rows").get<std::vector<Row>>();
  auto question = j.at("question").get<std::string>();
  if (trim(question).empty()) throw MalformedDataset("example " + id + " has an empty question");
  auto answers = j.at("answers").get<std::vector<std::string>>();
  if (answers.empty()) throw MalformedDataset("example " + id + " has no gold answer");
  auto task = j.value("task", std::string("qa")) == "tabfact" ? TaskKind::kTabFact : TaskKind::kQa;
  return EvalExample{id, infer_types(make_table(name, header, std::move(rows))), question,
                     std::move(answers), task};
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// "1,234,567.5" -> "1234567.5"; anything else unchanged.
std::string strip_digit_grouping(const std::string& s) {
  static const std::regex kGrouped(R"([+-]?\d{1,3}(,\d{3})+(\.\d+)?)");
  if (!std::regex_match(s, kGrouped)) return s;
  std::string out;
  for (char c : s) {
    if (c != ',') out.push_back(c);
  }
  return out;
}

std::optional<double> as_number(const std::string& part) {
  auto s = strip_digit_grouping(part);
  if (s.empty()) return std::nullopt;
  static const std::regex kNumber(R"([+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)");
  if (!std::regex_match(s, kNumber)) return std::nullopt;
  double v = std::strtod(s.c_str(), nullptr);
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

bool parts_equal(const std::string& a, const std::string& b) {
  if (a == b) return true;
  auto x = as_number(a), y = as_number(b);
  if (!x || !y) return false;
  double scale = std::max(std::fabs(*x), std::fabs(*y));
  return std::fabs(*x - *y) <= 1e-6 * scale;
}

std::vector<std::string> answer_parts(const std::string& normalized) {
  std::vector<std::string> parts;
  std::string cur;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    char c = normalized[i];
    if (c == '|' || (c == ',' && i + 1 < normalized.size() && normalized[i + 1] == ' ')) {
      parts.push_back(normalize_answer(cur));
      cur.clear();
      if (c == ',') ++i;
      continue;
    }
    cur.push_back(c);
  }
  parts.push_back(normalize_answer(cur));
  return parts;
}

bool multiset_match(std::vector<std::string> pred, std::vector<std::string> gold) {
  if (pred.size() != gold.size()) return false;
  std::vector<bool> used(gold.size(), false);
  for (const auto& p : pred) {
    bool found = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (!used[i] && parts_equal(p, gold[i])) {
        used[i] = found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::fixed << std::setprecision(precision) << v;
  return out.str();
}

}  // namespace

LoadedDataset parse_dataset(std::string_view text) {
  LoadedDataset out;
  std::size_t lines = 0;
  std::size_t lineno = 0;
  for (const auto& line : split_lines(text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++lines;
    try {
      out.examples.push_back(example_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      out.warnings.push_back("line " + std::to_string(lineno) + ": skipped: " + e.what());
    }
  }
  if (lines > 0 && static_cast<double>(out.warnings.size()) > kMaxMalformedFraction * lines) {
    throw MalformedDataset(std::to_string(out.warnings.size()) + " of " + std::to_string(lines) +
                           " examples are malformed; first: " + out.warnings.front());
  }
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

json example_to_json(const EvalExample& e) {
  std::vector<std::string> header;
  for (const auto& c : e.table.columns()) header.push_back(c.raw_name);
  json j{{"id", e.id},
         {"table", {{"name", e.table.name()}, {"header", header}, {"rows", e.table.rows()}}},
         {"question", e.question},
         {"answers", e.gold_answers}};
  if (e.task == TaskKind::kTabFact) j["task"] = "tabfact";
  return j;
}

void write_dataset(const std::filesystem::path& path, const std::vector<EvalExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : examples) {
    out << example_to_json(e).dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

std::string unescape_wikitq(std::string_view field) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) {
      char n = field[i + 1];
      if (n == 'n') {
        out.push_back('\n');
        ++i;
        continue;
      }
      if (n == 'p') {
        out.push_back('|');
        ++i;
        continue;
      }
      if (n == '\\') {
        out.push_back('\\');
        ++i;
        continue;
      }
    }
    out.push_back(field[i]);
  }
  return out;
}

std::vector<EvalExample> convert_wikitq(const std::filesystem::path& tsv_path,
                                        std::vector<std::string>* warnings) {
  auto lines = split_lines(read_file(tsv_path));
  auto dir = tsv_path.parent_path();
  std::vector<EvalExample> out;
  std::map<std::string, Table> cache;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    auto fields = split_on(lines[n], '\t');
    try {
      if (fields.size() < 4) throw MalformedDataset("expected 4 tab-separated fields");
      const auto& context = fields[2];
      auto it = cache.find(context);
      if (it == cache.end()) {
        auto path = dir / context;
        if (!std::filesystem::exists(path)) path = dir.parent_path() / context;
        auto name = std::filesystem::path(context).stem().string();
        auto table = infer_types(ingest_table(read_file(path), TableFormat::kCsv, "table_" + name));
        it = cache.emplace(context, std::move(table)).first;
      }
      std::vector<std::string> answers;
      for (const auto& a : split_on(fields[3], '|')) answers.push_back(unescape_wikitq(a));
      if (answers.empty() || (answers.size() == 1 && answers[0].empty())) {
        throw MalformedDataset("no target value");
      }
      // Multiple target values form one multi-part gold answer.
      std::string gold;
      for (std::size_t i = 0; i < answers.size(); ++i) gold += (i ? "|" : "") + answers[i];
      out.push_back(EvalExample{fields[0], it->second, unescape_wikitq(fields[1]), {gold}, TaskKind::kQa});
    } catch (const std::exception& e) {
      if (warnings) warnings->push_back("line " + std::to_string(n + 1) + ": skipped: " + e.what());
    }
  }
  return out;
}

std::vector<EvalExample> convert_tabfact(const std::filesystem::path& statements_path,
                                         const std::filesystem::path& csv_dir,
                                         std::vector<std::string>* warnings) {
  auto doc = json::parse(read_file(statements_path));
  std::vector<EvalExample> out;
  for (const auto& [csv_name, entry] : doc.items()) {
    try {
      auto statements = entry.at(0).get<std::vector<std::string>>();
      auto labels = entry.at(1).get<std::vector<int>>();
      if (statements.size() != labels.size()) throw MalformedDataset("statement and label counts differ");
      auto records = parse_delimited(read_file(csv_dir / csv_name), '#');
      if (records.empty()) throw MalformedDataset("empty table");
      auto header = records.front();
      std::vector<Row> rows(records.begin() + 1, records.end());
      auto stem = std::filesystem::path(csv_name).stem().string();
      auto table = infer_types(make_table("table_" + stem, header, std::move(rows)));
      for (std::size_t i = 0; i < statements.size(); ++i) {
        out.push_back(EvalExample{stem + "-" + std::to_string(i), table, statements[i],
                                  {labels[i] == 1 ? "yes" : "no"}, TaskKind::kTabFact});
      }
    } catch (const std::exception& e) {
      if (warnings) warnings->push_back(csv_name + ": skipped: " + e.what());
    }
  }
  return out;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && out.back() == '.') {
    out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
  }
  return out;
}

std::string map_tabfact_verdict(std::string_view text) {
  static const std::set<std::string> kYes = {"yes", "true", "entailed", "entails", "entail",
                                             "supported", "correct", "right"};
  static const std::set<std::string> kNo = {"no", "false", "refuted", "refutes", "refute",
                                            "unsupported", "incorrect", "wrong"};
  auto norm = normalize_answer(text);
  std::vector<std::string> words;
  std::string cur;
  for (char c : norm) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  for (std::size_t i = 0; i < words.size(); ++i) {
    bool negated = i > 0 && words[i - 1] == "not";
    if (kYes.count(words[i])) return negated ? "no" : "yes";
    if (kNo.count(words[i])) return negated ? "yes" : "no";
  }
  return norm;
}

bool score_answer(std::string_view predicted, const std::vector<std::string>& gold, TaskKind task) {
  auto pred = task == TaskKind::kTabFact ? map_tabfact_verdict(predicted) : normalize_answer(predicted);
  if (pred.empty()) return false;
  auto pred_parts = answer_parts(pred);
  for (const auto& g : gold) {
    auto norm = task == TaskKind::kTabFact ? map_tabfact_verdict(g) : normalize_answer(g);
    if (norm.empty()) continue;
    if (norm == pred || multiset_match(pred_parts, answer_parts(norm))) return true;
  }
  return false;
}

double compute_invalid_rate(const std::vector<RunRecord>& records) {
  std::size_t total = 0, invalid = 0;
  for (const auto& r : records) {
    total += r.invalid_flags.size();
    invalid += static_cast<std::size_t>(std::count(r.invalid_flags.begin(), r.invalid_flags.end(), true));
  }
  return total == 0 ? 0.0 : static_cast<double>(invalid) / static_cast<double>(total);
}

std::size_t histogram_bucket(std::size_t calls) {
  if (calls <= 5) return 0;
  if (calls <= 10) return 1;
  if (calls <= 20) return 2;
  if (calls <= 30) return 3;
  return 4;
}

CallStats compute_call_stats(const std::vector<std::size_t>& call_counts) {
  CallStats s;
  if (call_counts.empty()) return s;
  auto sorted = call_counts;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0;
  for (auto c : sorted) {
    sum += static_cast<double>(c);
    ++s.histogram[histogram_bucket(c)];
  }
  s.mean = sum / static_cast<double>(sorted.size());
  auto n = sorted.size();
  s.median = n % 2 ? static_cast<double>(sorted[n / 2])
                   : (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2])) / 2.0;
  s.max = sorted.back();
  return s;
}

EvalReport report(const std::vector<RunRecord>& records, const std::vector<EvalExample>& examples) {
  if (records.size() != examples.size()) {
    throw IdMismatch(std::to_string(records.size()) + " records for " + std::to_string(examples.size()) +
                     " examples");
  }
  EvalReport rep;
  rep.examples = examples.size();
  std::vector<std::size_t> calls;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& e = examples[i];
    if (r.id != e.id) throw IdMismatch("record " + std::to_string(i) + " has id '" + r.id + "', expected '" + e.id + "'");
    ExampleScore s;
    s.id = e.id;
    s.correct = r.final_answer && score_answer(r.final_answer->text, e.gold_answers, e.task);
    s.invalid = std::count(r.invalid_flags.begin(), r.invalid_flags.end(), true) > 0;
    s.calls = r.call_count;
    rep.correct += s.correct;
    rep.subquestions += r.invalid_flags.size();
    rep.invalid_subquestions +=
        static_cast<std::size_t>(std::count(r.invalid_flags.begin(), r.invalid_flags.end(), true));
    for (auto f : r.raw_step_failures) rep.raw_step_failures += f;
    calls.push_back(r.call_count);
    rep.per_example.push_back(std::move(s));
  }
  rep.accuracy = rep.examples ? static_cast<double>(rep.correct) / static_cast<double>(rep.examples) : 0.0;
  rep.invalid_sql_rate = compute_invalid_rate(records);
  rep.call_stats = compute_call_stats(calls);
  return rep;
}

json report_to_json(const EvalReport& r) {
  json histogram = json::object();
  for (std::size_t b = 0; b < kHistogramBuckets; ++b) histogram[kHistogramLabels[b]] = r.call_stats.histogram[b];
  json per = json::array();
  for (const auto& s : r.per_example) {
    per.push_back({{"id", s.id}, {"correct", s.correct}, {"invalid", s.invalid}, {"calls", s.calls}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"examples", r.examples},
          {"correct", r.correct},
          {"accuracy", r.accuracy},
          {"subquestions", r.subquestions},
          {"invalid_subquestions", r.invalid_subquestions},
          {"invalid_sql_rate", r.invalid_sql_rate},
          {"raw_step_failures", r.raw_step_failures},
          {"call_stats",
           {{"mean", r.call_stats.mean},
            {"median", r.call_stats.median},
            {"max", r.call_stats.max},
            {"histogram", histogram}}},
          {"per_example", per}};
}

std::string report_to_text(const EvalReport& r) {
  std::ostringstream out;
  out << "examples            " << r.examples << "\n";
  out << "accuracy            " << fmt(r.accuracy) << "  (" << r.correct << "/" << r.examples << ")\n";
  out << "invalid_sql_rate    " << fmt(r.invalid_sql_rate) << "  (" << r.invalid_subquestions << "/"
      << r.subquestions << " sub-questions)\n";
  out << "raw step failures   " << r.raw_step_failures << "\n";
  out << "calls mean/median/max  " << fmt(r.call_stats.mean, 2) << " / " << fmt(r.call_stats.median, 1)
      << " / " << r.call_stats.max << "\n";
  out << "\ncalls   runs\n";
  for (std::size_t b = 0; b < kHistogramBuckets; ++b) {
    out << std::left << std::setw(8) << kHistogramLabels[b] << r.call_stats.histogram[b] << "\n";
  }
  return out.str();
}

std::string summary_line(const EvalReport& r) {
  return "accuracy=" + fmt(r.accuracy) + " invalid=" + fmt(r.invalid_sql_rate) +
         " mean_calls=" + fmt(r.call_stats.mean, 2);
}

}  // namespace coq

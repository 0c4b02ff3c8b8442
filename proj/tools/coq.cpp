// coq: command-line driver for single runs, batch evaluation, recording and
// reporting.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coq/backends.hpp"
#include "coq/config.hpp"
#include "coq/errors.hpp"
#include "coq/eval.hpp"
#include "coq/orchestrator.hpp"
#include "coq/runtime.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailed = 2;
constexpr int kExitPartial = 3;

// Config flags shared by every subcommand; set flags override the file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool strict = false;
  CLI::Option* strict_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "TOML-style config file");
    for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
             {"--backend", "backend"},
             {"--model", "model"},
             {"--base-url", "base_url"},
             {"--budget", "budget"},
             {"--sample-k", "sample_k"},
             {"--row-limit", "row_limit"},
             {"--max-subquestions", "max_subquestions"},
             {"--parallelism", "parallelism"},
             {"--fixtures", "fixtures"},
             {"--script", "script"},
             {"--templates-dir", "templates_dir"},
             {"--fewshot-dir", "fewshot_dir"},
             {"--out", "output_dir"}}) {
      options[key] = app->add_option(flag, values[key]);
    }
    strict_opt = app->add_flag("--strict", strict, "always make the final-answer call");
  }

  coq::RunConfig resolve() {
    coq::RunConfig config;
    if (!config_path.empty()) config = coq::load_config_file(config_path, config);
    for (const auto& [key, opt] : options) {
      if (opt->count()) coq::apply_setting(config, key, values[key]);
    }
    if (strict_opt->count()) config.strict_paper_mode = strict;
    config.validate();
    return config;
  }
};

int exit_for(const std::vector<coq::RunRecord>& records) {
  bool partial = false;
  for (const auto& r : records) {
    if (r.status == coq::RunStatus::kFailed) return kExitFailed;
    if (r.status == coq::RunStatus::kPartial) partial = true;
  }
  return partial ? kExitPartial : kExitClean;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw coq::ConfigError("cannot write " + path.string());
  out << text;
}

void write_records(const fs::path& path, const std::vector<coq::RunRecord>& records) {
  std::string text;
  for (const auto& r : records) text += coq::record_to_jsonl_line(r) + "\n";
  write_text(path, text);
}

std::vector<coq::RunRecord> read_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw coq::ConfigError("cannot read records " + path.string());
  std::vector<coq::RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(coq::record_from_jsonl_line(line));
  }
  return records;
}

void write_report(const fs::path& dir, const coq::EvalReport& rep) {
  write_text(dir / "report.json", coq::report_to_json(rep).dump(2) + "\n");
  write_text(dir / "report.txt", coq::report_to_text(rep));
}

std::vector<coq::BatchItem> batch_items(const std::vector<coq::EvalExample>& examples) {
  std::vector<coq::BatchItem> items;
  for (const auto& e : examples) items.push_back(coq::BatchItem{e.id, &e.table, e.question});
  return items;
}

// Runs a dataset, optionally appending every finished question's exchanges
// to `record_path` as it completes.
int evaluate(const coq::RunConfig& config, const fs::path& dataset_path, const fs::path& record_path) {
  auto dataset = coq::load_dataset(dataset_path);
  for (const auto& w : dataset.warnings) std::cerr << "warning: " << w << "\n";
  auto backend = coq::make_backend(config);
  auto catalog = coq::make_catalog(config);
  fs::create_directories(config.output_dir);

  std::mutex io;
  auto progress = [&](std::size_t done, std::size_t total, const coq::RunRecord& r) {
    if (!record_path.empty()) coq::append_exchanges(record_path, r.exchanges);
    std::lock_guard lock(io);
    std::cerr << "[" << done << "/" << total << "] " << r.id << " " << coq::to_string(r.status) << "\n";
  };
  auto records = coq::run_batch(batch_items(dataset.examples), *backend, catalog, config,
                                config.parallelism, progress);
  write_records(config.output_dir / "records.jsonl", records);
  auto rep = coq::report(records, dataset.examples);
  write_report(config.output_dir, rep);
  std::cout << coq::summary_line(rep) << "\n";
  return exit_for(records);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chain-of-query table question answering"};
  app.require_subcommand(1);

  ConfigFlags run_flags, eval_flags, record_flags;

  std::string table_path, question, record_out;
  auto* run = app.add_subcommand("run", "answer one question about one table");
  run->add_option("--table", table_path, "CSV or JSON table")->required();
  run->add_option("--question", question, "question text")->required();
  run->add_option("--record", record_out, "append the run's exchanges to this file");
  run_flags.attach(run);

  std::string dataset_path, eval_record;
  auto* eval = app.add_subcommand("eval", "run and score a JSON-lines dataset");
  eval->add_option("--dataset", dataset_path, "JSON-lines dataset")->required();
  eval->add_option("--record", eval_record, "append exchanges to this file");
  eval_flags.attach(eval);

  std::string record_dataset, fixtures_out;
  auto* record = app.add_subcommand("record", "run a dataset and save every exchange for replay");
  record->add_option("--dataset", record_dataset, "JSON-lines dataset")->required();
  record->add_option("--fixtures-out", fixtures_out, "recordings file to append to")->required();
  record_flags.attach(record);

  std::string records_path, report_dataset, report_out = ".";
  auto* report = app.add_subcommand("report", "score an existing records file");
  report->add_option("--records", records_path, "records.jsonl")->required();
  report->add_option("--dataset", report_dataset, "dataset the records came from")->required();
  report->add_option("--out", report_out, "directory for report.json and report.txt");

  std::string convert_format, convert_input, convert_csv_dir, convert_out;
  auto* convert = app.add_subcommand("convert", "convert a benchmark file to the dataset format");
  convert->add_option("--format", convert_format, "wikitq or tabfact")
      ->required()
      ->check(CLI::IsMember({"wikitq", "tabfact"}));
  convert->add_option("--input", convert_input, "WikiTQ TSV or TabFact statements JSON")->required();
  convert->add_option("--csv-dir", convert_csv_dir, "TabFact table directory");
  convert->add_option("--out", convert_out, "output JSON-lines file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitClean : kExitConfig;
  }

  try {
    if (*run) {
      auto config = run_flags.resolve();
      if (!fs::exists(table_path)) throw coq::ConfigError("table file not found: " + table_path);
      auto table = coq::load_table_file(table_path);
      auto backend = coq::make_backend(config);
      auto catalog = coq::make_catalog(config);
      auto rec = coq::run_question(table, question, *backend, catalog, config);
      rec.id = table.name();
      if (!record_out.empty()) coq::append_exchanges(record_out, rec.exchanges);
      fs::create_directories(config.output_dir);
      write_records(config.output_dir / "records.jsonl", {rec});
      std::cout << (rec.final_answer ? rec.final_answer->text : std::string()) << "\n";
      std::cout << "calls=" << rec.call_count << " status=" << coq::to_string(rec.status) << "\n";
      if (!rec.error.empty()) std::cerr << "error: " << rec.error << "\n";
      return exit_for({rec});
    }
    if (*eval) return evaluate(eval_flags.resolve(), dataset_path, eval_record);
    if (*record) {
      auto config = record_flags.resolve();
      if (record_flags.options["backend"]->count() == 0) config.backend = coq::BackendKind::kLive;
      if (config.backend == coq::BackendKind::kLive) {
        const char* key = std::getenv(coq::kApiKeyVariable);
        if (!key || !*key) throw coq::ConfigError(std::string(coq::kApiKeyVariable) + " is not set");
      }
      int code = evaluate(config, record_dataset, fixtures_out);
      return code;
    }
    if (*report) {
      auto records = read_records(records_path);
      auto dataset = coq::load_dataset(report_dataset);
      for (const auto& w : dataset.warnings) std::cerr << "warning: " << w << "\n";
      auto rep = coq::report(records, dataset.examples);
      fs::create_directories(report_out);
      write_report(report_out, rep);
      std::cout << coq::summary_line(rep) << "\n";
      return kExitClean;
    }
    if (*convert) {
      std::vector<std::string> warnings;
      auto examples = convert_format == "wikitq"
                          ? coq::convert_wikitq(convert_input, &warnings)
                          : coq::convert_tabfact(convert_input, convert_csv_dir, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      coq::write_dataset(convert_out, examples);
      std::cout << examples.size() << " examples written\n";
      return kExitClean;
    }
  } catch (const coq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const coq::MalformedDataset& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitClean;
}

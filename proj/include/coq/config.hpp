#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "coq/llm.hpp"
#include "coq/sandbox.hpp"

namespace coq {

enum class BackendKind { kLive, kReplay, kScripted };

std::string_view to_string(BackendKind kind);

// The one configuration schema for runs, batches and the CLI. Defaults here
// are the defaults everywhere.
struct RunConfig {
  BackendKind backend = BackendKind::kReplay;
  std::string model = "gpt-3.5-turbo";
  std::string base_url = "https://api.openai.com/v1";
  std::size_t budget = kDefaultCallBudget;
  std::size_t sample_k = 3;
  std::size_t row_limit = kDefaultRowLimit;
  std::size_t max_subquestions = 4;
  std::size_t parallelism = 1;
  // Always issue the final-answer call, even for a single short sub-answer.
  bool strict_paper_mode = false;
  DecodingOptions decoding;
  std::chrono::milliseconds query_timeout = kDefaultQueryTimeout;
  std::size_t fewshot_per_role = kDefaultFewshotPerRole;

  std::filesystem::path templates_dir;
  std::filesystem::path fewshot_dir;
  std::filesystem::path fixtures_path;  // recordings for the replay backend
  std::filesystem::path script_path;    // rules for the scripted backend
  std::filesystem::path output_dir = ".";

  // Throws ConfigError. A run needs at least 5 calls for the shortest path.
  void validate() const;
};

constexpr std::size_t kMinimumBudget = 5;

// Applies one "key = value" setting. Throws ConfigError on unknown keys or
// unparsable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

// Reads a TOML-style file of "key = value" lines ("#" comments, optional
// quotes, [section] headers ignored) on top of `base`.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

}  // namespace coq

#pragma once

#include <filesystem>
#include <memory>

#include "coq/config.hpp"
#include "coq/llm.hpp"
#include "coq/prompts.hpp"
#include "coq/table.hpp"

namespace coq {

constexpr const char* kApiKeyVariable = "COQ_API_KEY";

// Backend selected by the config. Throws ConfigError when the live backend
// has no API key in the environment, or a replay/scripted run has no file.
std::unique_ptr<LlmBackend> make_backend(const RunConfig& config);

// Built-in templates, with the config's template and few-shot overrides.
PromptCatalog make_catalog(const RunConfig& config);

// Reads a CSV or JSON (by extension) table file named after its stem, with
// column types inferred. Throws ConfigError when the file is unreadable.
Table load_table_file(const std::filesystem::path& path);

}  // namespace coq

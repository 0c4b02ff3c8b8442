#include "coq/runtime.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coq/backends.hpp"
#include "coq/errors.hpp"

namespace coq {

std::unique_ptr<LlmBackend> make_backend(const RunConfig& config) {
  switch (config.backend) {
    case BackendKind::kLive: {
      const char* key = std::getenv(kApiKeyVariable);
      if (!key || !*key) throw ConfigError(std::string(kApiKeyVariable) + " is not set");
      LiveBackendConfig live;
      live.base_url = config.base_url;
      live.model = config.model;
      live.api_key = key;
      return std::make_unique<LiveBackend>(live);
    }
    case BackendKind::kReplay:
      if (config.fixtures_path.empty()) throw ConfigError("the replay backend needs a fixtures file");
      if (!std::filesystem::exists(config.fixtures_path)) {
        throw ConfigError("fixtures file not found: " + config.fixtures_path.string());
      }
      return std::make_unique<ReplayBackend>(ReplayBackend::from_file(config.fixtures_path));
    case BackendKind::kScripted:
      if (config.script_path.empty()) throw ConfigError("the scripted backend needs a script file");
      if (!std::filesystem::exists(config.script_path)) {
        throw ConfigError("script file not found: " + config.script_path.string());
      }
      return std::make_unique<ScriptedBackend>(ScriptedBackend::from_rules_file(config.script_path));
  }
  throw ConfigError("unknown backend");
}

PromptCatalog make_catalog(const RunConfig& config) {
  auto catalog = config.templates_dir.empty() ? PromptCatalog::builtin()
                                              : PromptCatalog::from_directory(config.templates_dir);
  if (!config.fewshot_dir.empty()) catalog.load_fewshot(config.fewshot_dir, config.fewshot_per_role);
  return catalog;
}

Table load_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read table file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto format = path.extension() == ".json" ? TableFormat::kJson : TableFormat::kCsv;
  return infer_types(ingest_table(ss.str(), format, path.stem().string()));
}

}  // namespace coq

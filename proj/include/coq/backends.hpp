#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "coq/llm.hpp"

namespace coq {

std::string sha256_hex(std::string_view data);

// Hex SHA-256 over the role tag and the prompt with whitespace runs collapsed.
std::string replay_key(Role role, std::string_view prompt);

nlohmann::json exchange_to_json(const LlmExchange& exchange);
LlmExchange exchange_from_json(const nlohmann::json& j);

// One exchange per line.
void append_exchanges(const std::filesystem::path& path, const std::vector<LlmExchange>& exchanges);
std::vector<LlmExchange> read_exchanges(const std::filesystem::path& path);

// Responses produced by a function; used by tests and fixture generation.
class ScriptedBackend : public LlmBackend {
 public:
  using Responder = std::function<std::string(const LlmRequest&)>;

  explicit ScriptedBackend(Responder responder, std::string id = "scripted");

  // Rules file: JSON array of {"role", "contains" (optional), "response"}.
  // The first rule whose role matches and whose "contains" text occurs in the
  // prompt wins.
  static ScriptedBackend from_rules_file(const std::filesystem::path& path);

  std::string complete(const LlmRequest& request) override;
  std::string id() const override { return id_; }

 private:
  Responder responder_;
  std::string id_;
};

// Serves recorded responses keyed by replay_key(). Throws ReplayMiss for
// unknown prompts.
class ReplayBackend : public LlmBackend {
 public:
  explicit ReplayBackend(const std::vector<LlmExchange>& recordings);
  static ReplayBackend from_file(const std::filesystem::path& path);

  std::string complete(const LlmRequest& request) override;
  std::string id() const override { return "replay"; }
  std::size_t size() const { return responses_.size(); }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

struct LiveBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
};

// OpenAI-compatible chat-completion endpoint: POST <base_url>/chat/completions.
// Transport failures, 429 and 5xx responses are retried with exponential
// backoff; malformed bodies and other statuses fail immediately.
class LiveBackend : public LlmBackend {
 public:
  explicit LiveBackend(LiveBackendConfig config);

  std::string complete(const LlmRequest& request) override;
  std::string id() const override { return "live:" + config_.model; }

 private:
  LiveBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace coq

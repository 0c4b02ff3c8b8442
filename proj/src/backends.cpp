#include "coq/backends.hpp"

#include <openssl/evp.h>

#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "coq/errors.hpp"

namespace coq {

namespace {

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string replay_key(Role role, std::string_view prompt) {
  std::string material(to_string(role));
  material.push_back('\n');
  material += collapse_whitespace(prompt);
  return sha256_hex(material);
}

nlohmann::json exchange_to_json(const LlmExchange& exchange) {
  return nlohmann::json{{"role", std::string(to_string(exchange.role))},
                        {"prompt", exchange.prompt},
                        {"response", exchange.response},
                        {"backend_id", exchange.backend_id},
                        {"sequence_no", exchange.sequence_no}};
}

LlmExchange exchange_from_json(const nlohmann::json& j) {
  LlmExchange e;
  e.role = role_from_string(j.at("role").get<std::string>());
  e.prompt = j.at("prompt").get<std::string>();
  e.response = j.at("response").get<std::string>();
  e.backend_id = j.value("backend_id", std::string());
  e.sequence_no = j.value("sequence_no", std::size_t{0});
  return e;
}

void append_exchanges(const std::filesystem::path& path, const std::vector<LlmExchange>& exchanges) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for appending");
  for (const auto& e : exchanges) {
    out << exchange_to_json(e).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
  out.flush();
}

std::vector<LlmExchange> read_exchanges(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read recordings " + path.string());
  std::vector<LlmExchange> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(exchange_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      // A recording cut off mid-write leaves one partial last line.
      if (in.peek() == EOF) break;
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ScriptedBackend::ScriptedBackend(Responder responder, std::string id)
    : responder_(std::move(responder)), id_(std::move(id)) {}

ScriptedBackend ScriptedBackend::from_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read script " + path.string());
  auto doc = nlohmann::json::parse(in);
  struct Rule {
    Role role;
    std::string contains;
    std::string response;
  };
  std::vector<Rule> rules;
  for (const auto& r : doc) {
    rules.push_back(Rule{role_from_string(r.at("role").get<std::string>()),
                         r.value("contains", std::string()), r.at("response").get<std::string>()});
  }
  return ScriptedBackend([rules = std::move(rules)](const LlmRequest& req) -> std::string {
    for (const auto& rule : rules) {
      if (rule.role == req.role && req.prompt.find(rule.contains) != std::string::npos) {
        return rule.response;
      }
    }
    throw BackendUnavailable("no scripted rule for role " + std::string(to_string(req.role)));
  });
}

std::string ScriptedBackend::complete(const LlmRequest& request) { return responder_(request); }

ReplayBackend::ReplayBackend(const std::vector<LlmExchange>& recordings) {
  for (const auto& e : recordings) responses_.emplace(replay_key(e.role, e.prompt), e.response);
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
  return ReplayBackend(read_exchanges(path));
}

std::string ReplayBackend::complete(const LlmRequest& request) {
  auto it = responses_.find(replay_key(request.role, request.prompt));
  if (it == responses_.end()) {
    throw ReplayMiss("no recording for " + std::string(to_string(request.role)) + " prompt");
  }
  return it->second;
}

LiveBackend::LiveBackend(LiveBackendConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string LiveBackend::complete(const LlmRequest& request) {
  nlohmann::json body{
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.decoding.temperature},
      {"top_p", request.decoding.top_p},
  };
  auto payload = body.dump();

  httplib::Client client(scheme_host_port_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  client.set_connection_timeout(std::max<long long>(1, secs));
  client.set_read_timeout(std::max<long long>(1, secs));
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      auto doc = nlohmann::json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw BackendUnavailable(std::string("malformed completion body: ") + e.what());
    }
  }
  throw BackendUnavailable(last_error + " after " + std::to_string(config_.max_retries) + " retries");
}

}  // namespace coq

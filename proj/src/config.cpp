#include "coq/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "coq/errors.hpp"

namespace coq {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    double v = std::stod(std::string(value), &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kLive:
      return "live";
    case BackendKind::kReplay:
      return "replay";
    case BackendKind::kScripted:
      return "scripted";
  }
  return "replay";
}

void RunConfig::validate() const {
  if (budget < kMinimumBudget) {
    throw ConfigError("budget must be at least " + std::to_string(kMinimumBudget) + ", got " +
                      std::to_string(budget));
  }
  if (sample_k < 1) throw ConfigError("sample_k must be at least 1");
  if (row_limit < 1) throw ConfigError("row_limit must be at least 1");
  if (max_subquestions < 1) throw ConfigError("max_subquestions must be at least 1");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (decoding.temperature < 0.0) throw ConfigError("temperature must be non-negative");
  if (decoding.top_p <= 0.0 || decoding.top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "backend") {
    if (value == "live") c.backend = BackendKind::kLive;
    else if (value == "replay") c.backend = BackendKind::kReplay;
    else if (value == "scripted") c.backend = BackendKind::kScripted;
    else throw ConfigError("backend: expected live, replay or scripted, got '" + std::string(value) + "'");
  } else if (key == "model") {
    c.model = value;
  } else if (key == "base_url") {
    c.base_url = value;
  } else if (key == "budget") {
    c.budget = parse_count(key, value);
  } else if (key == "sample_k") {
    c.sample_k = parse_count(key, value);
  } else if (key == "row_limit") {
    c.row_limit = parse_count(key, value);
  } else if (key == "max_subquestions") {
    c.max_subquestions = parse_count(key, value);
  } else if (key == "parallelism") {
    c.parallelism = parse_count(key, value);
  } else if (key == "strict_paper_mode") {
    c.strict_paper_mode = parse_bool(key, value);
  } else if (key == "temperature") {
    c.decoding.temperature = parse_real(key, value);
  } else if (key == "top_p") {
    c.decoding.top_p = parse_real(key, value);
  } else if (key == "query_timeout_ms") {
    c.query_timeout = std::chrono::milliseconds(parse_count(key, value));
  } else if (key == "fewshot_per_role") {
    c.fewshot_per_role = parse_count(key, value);
  } else if (key == "templates_dir") {
    c.templates_dir = std::string(value);
  } else if (key == "fewshot_dir") {
    c.fewshot_dir = std::string(value);
  } else if (key == "fixtures") {
    c.fixtures_path = std::string(value);
  } else if (key == "script") {
    c.script_path = std::string(value);
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  } else {
    throw ConfigError("unknown setting '" + std::string(key) + "'");
  }
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // A '#' inside a quoted value is kept.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    auto text = trim(line);
    if (text.empty() || text.front() == '[') continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    auto key = trim(std::string_view(text).substr(0, eq));
    auto value = trim(std::string_view(text).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    try {
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

}  // namespace coq

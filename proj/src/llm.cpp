#include "coq/llm.hpp"

#include <cctype>

#include "coq/errors.hpp"

namespace coq {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct FencedBlock {
  std::string lang;
  std::string body;
};

std::vector<FencedBlock> fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    auto nl = text.find('\n', open + 3);
    if (nl == std::string_view::npos) break;
    FencedBlock block{lower(trim(text.substr(open + 3, nl - open - 3))), {}};
    auto close = text.find("```", nl + 1);
    if (close == std::string_view::npos) {
      block.body = std::string(text.substr(nl + 1));
      blocks.push_back(std::move(block));
      break;
    }
    block.body = std::string(text.substr(nl + 1, close - nl - 1));
    blocks.push_back(std::move(block));
    pos = close + 3;
  }
  return blocks;
}

bool starts_with_keyword(std::string_view line, std::string_view kw) {
  if (line.size() < kw.size()) return false;
  for (std::size_t i = 0; i < kw.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(line[i])) != kw[i]) return false;
  }
  return line.size() == kw.size() || !std::isalnum(static_cast<unsigned char>(line[kw.size()]));
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Parses a python list of string literals starting at text[i] == '['.
bool parse_string_list(std::string_view text, std::size_t i, std::vector<std::string>& out) {
  ++i;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == ']') {
      return true;
    } else if (c == '"' || c == '\'') {
      char quote = c;
      std::string value;
      ++i;
      bool closed = false;
      while (i < text.size()) {
        char d = text[i];
        if (d == '\\' && i + 1 < text.size()) {
          char e = text[i + 1];
          switch (e) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case '\\': value.push_back('\\'); break;
            case '\'': value.push_back('\''); break;
            case '"': value.push_back('"'); break;
            default:
              value.push_back('\\');
              value.push_back(e);
          }
          i += 2;
        } else if (d == quote) {
          ++i;
          closed = true;
          break;
        } else if (d == '\n') {
          return false;
        } else {
          value.push_back(d);
          ++i;
        }
      }
      if (!closed) return false;
      out.push_back(std::move(value));
    } else {
      return false;
    }
  }
  return false;
}

}  // namespace

Gateway::Gateway(LlmBackend& backend, const PromptCatalog& catalog, std::size_t max_calls,
                 DecodingOptions decoding)
    : backend_(backend), catalog_(catalog), decoding_(decoding) {
  budget_.max_calls = max_calls;
}

LlmExchange Gateway::complete(Role role, const Bindings& bindings) {
  LlmRequest request{role, catalog_.render(role, bindings), decoding_};
  {
    std::lock_guard lock(mu_);
    if (budget_.exhausted()) {
      throw BudgetExhausted("call budget of " + std::to_string(budget_.max_calls) + " exhausted");
    }
    ++budget_.used;
  }
  std::string response;
  try {
    response = backend_.complete(request);
    if (trim(response).empty()) throw BackendUnavailable("backend returned an empty response");
  } catch (...) {
    std::lock_guard lock(mu_);
    --budget_.used;
    throw;
  }
  std::lock_guard lock(mu_);
  LlmExchange exchange{role, std::move(request.prompt), std::move(response), backend_.id(),
                       trace_.size() + 1};
  trace_.push_back(exchange);
  return exchange;
}

CallBudget Gateway::budget() const {
  std::lock_guard lock(mu_);
  return budget_;
}

std::vector<LlmExchange> Gateway::trace() const {
  std::lock_guard lock(mu_);
  return trace_;
}

std::size_t Gateway::calls_made() const {
  std::lock_guard lock(mu_);
  return trace_.size();
}

std::string parse_fenced_sql(std::string_view response) {
  auto blocks = fenced_blocks(response);
  if (!blocks.empty()) {
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      if (it->lang != "sql" && it->lang != "sqlite") continue;
      auto body = trim(it->body);
      if (!body.empty()) return body;
    }
    throw NoSqlFound("no ```sql block in response");
  }
  std::string found;
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto nl = response.find('\n', pos);
    auto line = trim(response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (starts_with_keyword(line, "SELECT") || starts_with_keyword(line, "WITH")) {
      ++count;
      found = line;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (count == 1) return found;
  throw NoSqlFound(count == 0 ? "no SQL statement in response" : "ambiguous unfenced SQL in response");
}

bool parse_yes_no(std::string_view response) {
  auto low = lower(response);
  auto marker = low.rfind("decision:");
  if (marker != std::string::npos) {
    for (const auto& w : words(std::string_view(low).substr(marker + 9))) {
      if (w == "yes") return true;
      if (w == "no") return false;
    }
    throw NoDecisionFound("no yes/no after the Decision: marker");
  }
  auto ws = words(low);
  for (auto it = ws.rbegin(); it != ws.rend(); ++it) {
    if (*it == "yes") return true;
    if (*it == "no") return false;
  }
  throw NoDecisionFound("no yes/no decision in response");
}

std::vector<std::string> parse_subquestion_list(std::string_view response,
                                                const std::string& original_question) {
  for (const auto& block : fenced_blocks(response)) {
    auto at = block.body.find("subquestions");
    if (at == std::string::npos) continue;
    auto eq = block.body.find('=', at);
    auto open = block.body.find('[', at);
    if (eq == std::string::npos || open == std::string::npos || open < eq) continue;
    std::vector<std::string> raw;
    if (!parse_string_list(block.body, open, raw)) break;
    std::vector<std::string> out;
    for (auto& s : raw) {
      auto t = trim(s);
      if (!t.empty()) out.push_back(std::move(t));
    }
    if (out.empty()) break;
    return out;
  }
  return {original_question};
}

std::optional<std::string> parse_answer(std::string_view response) {
  auto low = lower(response);
  auto marker = low.rfind("answer:");
  if (marker == std::string::npos) return std::nullopt;
  auto text = trim(response.substr(marker + 7));
  if (text.size() >= 4 && text.rfind("**", 0) == 0 && text.compare(text.size() - 2, 2, "**") == 0) {
    text = trim(std::string_view(text).substr(2, text.size() - 4));
  }
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']' &&
      text.find(']') == text.size() - 1) {
    text = trim(std::string_view(text).substr(1, text.size() - 2));
  }
  if (text.empty()) return std::nullopt;
  return text;
}

}  // namespace coq

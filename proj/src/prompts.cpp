#include "coq/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coq {

namespace detail {
struct EmbeddedPrompt {
  const char* role;
  const char* text;
};
extern const EmbeddedPrompt kEmbeddedPrompts[];
extern const std::size_t kEmbeddedPromptCount;
}  // namespace detail

namespace {

constexpr std::pair<Role, std::string_view> kRoleNames[] = {
    {Role::kDecompose, "DECOMPOSE"},
    {Role::kClauseSelectFrom, "CLAUSE_SELECT_FROM"},
    {Role::kClauseWhere, "CLAUSE_WHERE"},
    {Role::kClauseWithAs, "CLAUSE_WITH_AS"},
    {Role::kClauseAgg, "CLAUSE_AGG"},
    {Role::kClauseOrderBy, "CLAUSE_ORDER_BY"},
    {Role::kPlanSufficient, "PLAN_SUFFICIENT"},
    {Role::kPlanWhereNeeded, "PLAN_WHERE_NEEDED"},
    {Role::kPlanWithAsNeeded, "PLAN_WITH_AS_NEEDED"},
    {Role::kPlanAggNeeded, "PLAN_AGG_NEEDED"},
    {Role::kPlanOrderByNeeded, "PLAN_ORDER_BY_NEEDED"},
    {Role::kCorrect, "CORRECT"},
    {Role::kSubAnswer, "SUB_ANSWER"},
    {Role::kFinalAnswer, "FINAL_ANSWER"},
};

std::string trim_blank_lines(const std::string& s) {
  auto b = s.find_first_not_of("\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls on_name for every "{name}" and on_text for the text between them.
template <typename OnText, typename OnName>
void scan_placeholders(std::string_view text, OnText on_text, OnName on_name) {
  std::size_t i = 0, literal = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_placeholder_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        on_text(text.substr(literal, i - literal));
        on_name(std::string(text.substr(i + 1, j - i - 1)));
        i = literal = j + 1;
        continue;
      }
    }
    ++i;
  }
  on_text(text.substr(literal));
}

std::string substitute(std::string_view text, const Bindings& bindings) {
  std::string out;
  scan_placeholders(
      text, [&](std::string_view lit) { out.append(lit); },
      [&](const std::string& name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw std::invalid_argument("unbound prompt placeholder {" + name + "}");
        out += it->second;
      });
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Role role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "UNKNOWN";
}

Role role_from_string(std::string_view name) {
  for (const auto& [r, n] : kRoleNames) {
    if (n == name) return r;
  }
  throw std::invalid_argument("unknown role: " + std::string(name));
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  for (const auto* section : {&instruction, &constraints, &response_format, &input}) {
    scan_placeholders(
        *section, [](std::string_view) {},
        [&](const std::string& name) {
          if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        });
  }
  return names;
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::string out = "[Instruction]\n" + substitute(instruction, bindings) + "\n";
  if (!constraints.empty()) out += "\n[Constraints]\n" + substitute(constraints, bindings) + "\n";
  out += "\n[Response format]\n" + substitute(response_format, bindings) + "\n";
  if (!fewshot.empty()) {
    out += "\n[Examples]\n";
    for (std::size_t i = 0; i < fewshot.size(); ++i) {
      if (i) out += "\n";
      out += fewshot[i] + "\n";
    }
  }
  if (!input.empty()) out += "\n[Input]\n" + substitute(input, bindings) + "\n";
  return out;
}

PromptTemplate parse_template(Role role, std::string_view text) {
  PromptTemplate tpl;
  tpl.role = role;
  std::string* current = nullptr;
  std::string buffer;
  auto flush = [&] {
    if (current) *current = trim_blank_lines(buffer);
    buffer.clear();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string* next = nullptr;
    if (line == "[Instruction]") next = &tpl.instruction;
    else if (line == "[Constraints]") next = &tpl.constraints;
    else if (line == "[Response format]") next = &tpl.response_format;
    else if (line == "[Input]") next = &tpl.input;
    if (next) {
      flush();
      current = next;
      continue;
    }
    buffer += line;
    buffer += '\n';
  }
  flush();
  if (tpl.instruction.empty()) {
    throw std::invalid_argument("template for " + std::string(to_string(role)) + " has no [Instruction]");
  }
  if (tpl.response_format.empty()) {
    throw std::invalid_argument("template for " + std::string(to_string(role)) +
                                " has no [Response format]");
  }
  return tpl;
}

PromptCatalog PromptCatalog::builtin() {
  PromptCatalog catalog;
  for (std::size_t i = 0; i < detail::kEmbeddedPromptCount; ++i) {
    const auto& p = detail::kEmbeddedPrompts[i];
    auto role = role_from_string(p.role);
    catalog.templates_[role] = parse_template(role, p.text);
  }
  for (auto role : kAllRoles) {
    if (!catalog.templates_.count(role)) {
      throw std::logic_error("no built-in template for " + std::string(to_string(role)));
    }
  }
  return catalog;
}

PromptCatalog PromptCatalog::from_directory(const std::filesystem::path& dir) {
  auto catalog = builtin();
  for (auto role : kAllRoles) {
    auto path = dir / (std::string(to_string(role)) + ".txt");
    if (std::filesystem::exists(path)) catalog.templates_[role] = parse_template(role, read_file(path));
  }
  return catalog;
}

void PromptCatalog::load_fewshot(const std::filesystem::path& dir, std::size_t per_role) {
  for (auto role : kAllRoles) {
    auto path = dir / (std::string(to_string(role)) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::istringstream in(read_file(path));
    std::vector<std::string> examples(1);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line == "---") {
        examples.emplace_back();
      } else {
        examples.back() += line + "\n";
      }
    }
    auto& shots = templates_.at(role).fewshot;
    shots.clear();
    for (auto& ex : examples) {
      auto t = trim_blank_lines(ex);
      if (!t.empty() && shots.size() < per_role) shots.push_back(std::move(t));
    }
  }
}

const PromptTemplate& PromptCatalog::at(Role role) const {
  auto it = templates_.find(role);
  if (it == templates_.end()) throw std::out_of_range("no template for " + std::string(to_string(role)));
  return it->second;
}

}  // namespace coq

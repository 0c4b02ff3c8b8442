#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace coq {

enum class Role {
  kDecompose,
  kClauseSelectFrom,
  kClauseWhere,
  kClauseWithAs,
  kClauseAgg,
  kClauseOrderBy,
  kPlanSufficient,
  kPlanWhereNeeded,
  kPlanWithAsNeeded,
  kPlanAggNeeded,
  kPlanOrderByNeeded,
  kCorrect,
  kSubAnswer,
  kFinalAnswer,
};

inline constexpr Role kAllRoles[] = {
    Role::kDecompose,        Role::kClauseSelectFrom, Role::kClauseWhere,
    Role::kClauseWithAs,     Role::kClauseAgg,        Role::kClauseOrderBy,
    Role::kPlanSufficient,   Role::kPlanWhereNeeded,  Role::kPlanWithAsNeeded,
    Role::kPlanAggNeeded,    Role::kPlanOrderByNeeded, Role::kCorrect,
    Role::kSubAnswer,        Role::kFinalAnswer,
};

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);  // throws std::invalid_argument

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
  Role role = Role::kDecompose;
  std::string instruction;
  std::string constraints;      // may be empty
  std::string response_format;
  std::string input;            // task data section with placeholders
  std::vector<std::string> fewshot;

  // Placeholder names used anywhere in the template, e.g. "schema".
  std::vector<std::string> placeholders() const;

  // Throws std::invalid_argument when a placeholder is unbound.
  std::string render(const Bindings& bindings) const;
};

// Parses the sectioned template text: "[Instruction]", "[Constraints]",
// "[Response format]" and "[Input]" headers on their own lines.
PromptTemplate parse_template(Role role, std::string_view text);

class PromptCatalog {
 public:
  // Templates compiled into the binary from the prompts/ directory.
  static PromptCatalog builtin();

  // Built-in templates, overridden by any <ROLE>.txt found in `dir`.
  static PromptCatalog from_directory(const std::filesystem::path& dir);

  // Adds up to `per_role` few-shot examples from <ROLE>.txt files in `dir`.
  // Examples within a file are separated by lines containing only "---".
  void load_fewshot(const std::filesystem::path& dir, std::size_t per_role);

  const PromptTemplate& at(Role role) const;
  std::string render(Role role, const Bindings& bindings) const { return at(role).render(bindings); }

 private:
  std::map<Role, PromptTemplate> templates_;
};

constexpr std::size_t kDefaultFewshotPerRole = 2;

}  // namespace coq

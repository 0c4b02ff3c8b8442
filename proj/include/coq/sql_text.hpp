#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Lexical helpers for comparing successive SQL states. These are not a
// parser: the engine decides validity, these only check provenance.
namespace coq::sql_text {

enum class TokenKind { kWord, kQuotedIdent, kString, kNumber, kPunct };

struct Token {
  TokenKind kind;
  std::string text;  // as written
  std::string norm;  // uppercase for bare words; identifier body for quoted identifiers
  int depth = 0;     // parenthesis depth before the token
};

// Comments dropped; trailing ";" tokens removed.
std::vector<Token> tokenize(std::string_view sql);

// Tokens joined by single spaces.
std::string normalize(std::string_view sql);

bool tokens_equal(const std::vector<Token>& a, const std::vector<Token>& b);

// True if `outer` contains `inner` as a contiguous run. `inserted` receives
// the tokens outside the run.
bool contains_run(const std::vector<Token>& outer, const std::vector<Token>& inner,
                  std::vector<Token>* inserted = nullptr);

// True if `longer` equals `shorter` with one contiguous block of tokens
// inserted at some position. `inserted` receives that block.
bool single_insertion(const std::vector<Token>& shorter, const std::vector<Token>& longer,
                      std::vector<Token>* inserted = nullptr);

// Position of the last SELECT at parenthesis depth 0, or npos.
std::size_t final_select(const std::vector<Token>& tokens);

struct SelectParts {
  std::vector<Token> head;  // before the final top-level SELECT
  std::vector<Token> list;  // select list, DISTINCT/ALL excluded
  std::vector<Token> tail;  // from the top-level FROM onward
  bool found = false;
};

SelectParts split_final_select(const std::vector<Token>& tokens);

// Output column names of the final select list. "*" appears as "*".
std::vector<std::string> output_names(const std::vector<Token>& tokens);

struct AggregateUse {
  std::vector<std::string> functions;  // every COUNT/AVG/MAX/MIN/SUM call, in order
  bool nested = false;
};

AggregateUse find_aggregates(const std::vector<Token>& list);

}  // namespace coq::sql_text

#include "coq/sql_text.hpp"

#include <algorithm>
#include <cctype>

namespace coq::sql_text {

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool same(const Token& a, const Token& b) {
  auto identish = [](TokenKind k) { return k == TokenKind::kWord || k == TokenKind::kQuotedIdent; };
  if (identish(a.kind) && identish(b.kind)) return a.norm == b.norm;
  return a.kind == b.kind && a.norm == b.norm;
}

bool is_word(const Token& t, std::string_view w) { return t.kind == TokenKind::kWord && t.norm == w; }

}  // namespace

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  int depth = 0;
  std::size_t i = 0;
  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end, std::string norm) {
    out.push_back(Token{kind, std::string(s.substr(begin, end - begin)), std::move(norm), depth});
  };
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (s.compare(i, 2, "--") == 0) {
      auto nl = s.find('\n', i);
      i = nl == std::string_view::npos ? s.size() : nl + 1;
    } else if (s.compare(i, 2, "/*") == 0) {
      auto end = s.find("*/", i + 2);
      i = end == std::string_view::npos ? s.size() : end + 2;
    } else if (c == '\'' || c == '"' || c == '`' || c == '[') {
      char close = c == '[' ? ']' : static_cast<char>(c);
      std::size_t j = i + 1;
      std::string body;
      while (j < s.size()) {
        if (s[j] == close) {
          if (close != ']' && j + 1 < s.size() && s[j + 1] == close) {
            body.push_back(close);
            j += 2;
            continue;
          }
          break;
        }
        body.push_back(s[j]);
        ++j;
      }
      std::size_t end = std::min(j + 1, s.size());
      if (c == '\'') {
        push(TokenKind::kString, i, end, body);
      } else {
        push(TokenKind::kQuotedIdent, i, end, upper(body));
      }
      i = end;
    } else if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && ident_char(static_cast<unsigned char>(s[j]))) ++j;
      push(TokenKind::kWord, i, j, upper(s.substr(i, j - i)));
      i = j;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < s.size() &&
                                   std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.')) {
        if ((s[j] == 'e' || s[j] == 'E') && j + 1 < s.size() && (s[j + 1] == '+' || s[j + 1] == '-')) {
          ++j;
        }
        ++j;
      }
      push(TokenKind::kNumber, i, j, upper(s.substr(i, j - i)));
      i = j;
    } else {
      static constexpr std::string_view kTwo[] = {"<=", ">=", "<>", "!=", "==", "||", "<<", ">>"};
      std::size_t len = 1;
      for (auto op : kTwo) {
        if (s.compare(i, 2, op) == 0) len = 2;
      }
      if (c == ')') --depth;
      push(TokenKind::kPunct, i, i + len, std::string(s.substr(i, len)));
      if (c == '(') ++depth;
      i += len;
    }
  }
  while (!out.empty() && out.back().kind == TokenKind::kPunct && out.back().text == ";") out.pop_back();
  return out;
}

std::string normalize(std::string_view sql) {
  std::string out;
  for (const auto& t : tokenize(sql)) {
    if (!out.empty()) out.push_back(' ');
    out += t.text;
  }
  return out;
}

bool tokens_equal(const std::vector<Token>& a, const std::vector<Token>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same);
}

bool contains_run(const std::vector<Token>& outer, const std::vector<Token>& inner,
                  std::vector<Token>* inserted) {
  if (inner.size() > outer.size()) return false;
  auto it = std::search(outer.begin(), outer.end(), inner.begin(), inner.end(), same);
  if (it == outer.end() && !inner.empty()) return false;
  if (inserted) {
    inserted->assign(outer.begin(), it);
    inserted->insert(inserted->end(), it + static_cast<std::ptrdiff_t>(inner.size()), outer.end());
  }
  return true;
}

bool single_insertion(const std::vector<Token>& shorter, const std::vector<Token>& longer,
                      std::vector<Token>* inserted) {
  if (shorter.size() > longer.size()) return false;
  std::size_t prefix = 0;
  while (prefix < shorter.size() && same(shorter[prefix], longer[prefix])) ++prefix;
  std::size_t suffix = 0;
  while (suffix < shorter.size() - prefix &&
         same(shorter[shorter.size() - 1 - suffix], longer[longer.size() - 1 - suffix])) {
    ++suffix;
  }
  if (prefix + suffix != shorter.size()) return false;
  if (inserted) {
    inserted->assign(longer.begin() + static_cast<std::ptrdiff_t>(prefix),
                     longer.end() - static_cast<std::ptrdiff_t>(suffix));
  }
  return true;
}

std::size_t final_select(const std::vector<Token>& tokens) {
  for (std::size_t i = tokens.size(); i-- > 0;) {
    if (tokens[i].depth == 0 && is_word(tokens[i], "SELECT")) return i;
  }
  return std::string::npos;
}

SelectParts split_final_select(const std::vector<Token>& tokens) {
  SelectParts parts;
  auto sel = final_select(tokens);
  if (sel == std::string::npos) return parts;
  parts.found = true;
  parts.head.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(sel));
  std::size_t i = sel + 1;
  if (i < tokens.size() && (is_word(tokens[i], "DISTINCT") || is_word(tokens[i], "ALL"))) ++i;
  std::size_t from = i;
  while (from < tokens.size() && !(tokens[from].depth == 0 && is_word(tokens[from], "FROM"))) {
    ++from;
  }
  parts.list.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(from));
  parts.tail.assign(tokens.begin() + static_cast<std::ptrdiff_t>(from), tokens.end());
  return parts;
}

std::vector<std::string> output_names(const std::vector<Token>& tokens) {
  auto parts = split_final_select(tokens);
  std::vector<std::string> names;
  if (!parts.found || parts.list.empty()) return names;
  int base = parts.list.front().depth;

  std::vector<std::vector<Token>> items(1);
  for (const auto& t : parts.list) {
    if (t.depth == base && t.kind == TokenKind::kPunct && t.text == ",") {
      items.emplace_back();
    } else {
      items.back().push_back(t);
    }
  }
  for (const auto& item : items) {
    if (item.empty()) continue;
    const auto& last = item.back();
    if (last.kind == TokenKind::kPunct && last.text == "*") {
      names.emplace_back("*");
      continue;
    }
    bool has_alias = item.size() >= 2 && (last.kind == TokenKind::kWord || last.kind == TokenKind::kQuotedIdent);
    if (has_alias) {
      const auto& prev = item[item.size() - 2];
      // "x AS y", "x y" and qualified "c.y" all name the column y.
      bool bare_alias = prev.kind != TokenKind::kPunct || prev.text == ")";
      has_alias = is_word(prev, "AS") || bare_alias || prev.text == ".";
    }
    if (item.size() == 1 || has_alias) {
      if (last.kind == TokenKind::kQuotedIdent) {
        names.push_back(last.text.substr(1, last.text.size() - 2));
      } else {
        names.push_back(last.text);
      }
      continue;
    }
    std::string expr;
    for (const auto& t : item) expr += t.text;
    names.push_back(expr);
  }
  return names;
}

AggregateUse find_aggregates(const std::vector<Token>& list) {
  static constexpr std::string_view kAggregates[] = {"COUNT", "AVG", "MAX", "MIN", "SUM"};
  AggregateUse use;
  std::vector<int> open_depths;  // depth inside each enclosing aggregate call
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& t = list[i];
    while (!open_depths.empty() && t.depth < open_depths.back()) open_depths.pop_back();
    bool call = t.kind == TokenKind::kWord && i + 1 < list.size() && list[i + 1].text == "(" &&
                std::find(std::begin(kAggregates), std::end(kAggregates), t.norm) != std::end(kAggregates);
    if (!call) continue;
    if (!open_depths.empty()) use.nested = true;
    use.functions.push_back(t.norm);
    open_depths.push_back(t.depth + 1);
    ++i;  // the call's own "(" sits outside its arguments
  }
  return use;
}

}  // namespace coq::sql_text

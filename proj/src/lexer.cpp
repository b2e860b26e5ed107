#include <array>
#include <cctype>

#include "chorcc/frontend.hpp"

namespace chorcc {

namespace {

constexpr std::array<std::string_view, 8> kBackslashKeywords = {
    "\\endpoint", "\\chor", "\\msg", "\\sender", "\\receiver", "\\forall", "\\result",
    "\\confined"};

// Longest first so that maximal munch falls out of a linear scan.
constexpr std::array<std::string_view, 33> kPuncts = {
    "==>", "**", "&&", "||", "==", "!=", "<=", ">=", ":=", "->", "..",
    "\\",  "(",  ")",  "{",  "}",  "[",  "]",  ";",  ",",  ".",  ":",
    "=",   "<",  ">",  "+",  "-",  "*",  "/",  "%",  "!",  "|",  "@"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::vector<Token> lex(const SourceFile& src, std::vector<Diagnostic>& diags) {
  std::vector<Token> out;
  const std::string& s = src.text;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Loc loc = src.loc_of(i);
    if (s.compare(i, 3, "//!") == 0) {
      auto end = s.find('\n', i);
      if (end == std::string::npos) end = s.size();
      out.push_back({Token::Kind::Pragma, s.substr(i + 3, end - i - 3), loc});
      i = end;
      continue;
    }
    if (s.compare(i, 2, "//") == 0) {
      auto end = s.find('\n', i);
      i = end == std::string::npos ? s.size() : end;
      continue;
    }
    if (s.compare(i, 2, "/*") == 0) {
      auto end = s.find("*/", i + 2);
      if (end == std::string::npos) {
        diags.push_back({Severity::Error, RuleId::Lex, "unterminated block comment", loc, loc});
        break;
      }
      i = end + 2;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.push_back({Token::Kind::Ident, s.substr(i, j - i), loc});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::Kind::Number, s.substr(i, j - i), loc});
      i = j;
      continue;
    }
    if (c == '\\' && i + 1 < s.size() && ident_start(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && ident_char(s[j])) ++j;
      std::string word = s.substr(i, j - i);
      bool known = false;
      for (auto k : kBackslashKeywords) known = known || k == word;
      if (!known)
        diags.push_back({Severity::Error, RuleId::Lex, "unknown keyword '" + word + "'", loc,
                         src.loc_of(j)});
      else
        out.push_back({Token::Kind::Keyword, word, loc});
      i = j;
      continue;
    }
    bool matched = false;
    for (auto p : kPuncts) {
      if (s.compare(i, p.size(), p) == 0) {
        out.push_back({Token::Kind::Punct, std::string(p), loc});
        i += p.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      diags.push_back({Severity::Error, RuleId::Lex,
                       std::string("unexpected character '") + c + "'", loc, loc});
      ++i;
    }
  }
  out.push_back({Token::Kind::End, "", src.loc_of(s.size())});
  return out;
}

}  // namespace chorcc

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chorcc/ast.hpp"
#include "chorcc/diagnostic.hpp"

namespace chorcc {

struct Token {
  enum class Kind { Ident, Number, Keyword, Punct, Pragma, End };
  Kind kind = Kind::End;
  std::string text;  // backslash keywords keep their backslash
  Loc loc;
};

/// Lexes a whole file. Lexical errors are appended to `diags`; the offending
/// character is skipped.
std::vector<Token> lex(const SourceFile& src, std::vector<Diagnostic>& diags);

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

ParseResult parse(const SourceFile& src);

/// Parses a standalone expression; throws std::invalid_argument on error.
/// Calls are left unresolved (predicates stay `Call`).
ExprPtr parse_expression(std::string_view text);

/// Marks predicate applications and heap-reading function calls.
void resolve_calls(Program& p);

std::string pretty(const Program& p);
std::string pretty(const ExprPtr& e);
std::string pretty(const Target& t);
std::string pretty(const Type& t);
std::string pretty(const Stmt& s, int indent = 0);
std::string pretty(const Block& b, int indent = 0);
std::string pretty(const ChorStmt& s, int indent = 0);

}  // namespace chorcc

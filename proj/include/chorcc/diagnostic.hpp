#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "chorcc/ast.hpp"

namespace chorcc {

struct SourceFile {
  std::string path;
  std::string text;
  std::vector<std::size_t> line_starts;

  static SourceFile from_string(std::string text, std::string path = "<input>");
  /// Throws std::runtime_error if the file cannot be read.
  static SourceFile load(const std::string& path);

  Loc loc_of(std::size_t offset) const;
  std::size_t offset_of(Loc loc) const;
};

enum class Severity { Error, Warning };

/// Closed set of diagnostic rule ids.
enum class RuleId {
  Lex,
  Syntax,
  MissingChoreography,
  DuplicateChoreography,
  DuplicateName,
  Unresolved,
  EndpointPositivity,    // endpoint expressions only in positive positions
  ChorPlacement,         // \chor only inside contracts, asserts and invariants
  PlaceholderPlacement,  // \msg, \sender, \receiver only in channel invariants
  BinderScope,           // family binders fresh and in scope
  PurityLevel,           // E / H / R levels respected
  ConditionShape,        // choreographic conditions are &&-lists of \endpoint
  Participation,         // branch participants occur in the condition
  AssignableLocation,
  SourceInhaleExhale,
  QuantifiedPermission,
};

const char* rule_name(RuleId id);

struct Diagnostic {
  Severity severity = Severity::Error;
  RuleId rule = RuleId::Syntax;
  std::string message;
  Loc begin;
  Loc end;
};

bool has_errors(const std::vector<Diagnostic>& diags);
std::string format(const Diagnostic& d, const std::string& path = "");

}  // namespace chorcc

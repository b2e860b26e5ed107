#include "chorcc/diagnostic.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace chorcc {

SourceFile SourceFile::from_string(std::string text, std::string path) {
  SourceFile f;
  f.path = std::move(path);
  f.text = std::move(text);
  f.line_starts.push_back(0);
  for (std::size_t i = 0; i < f.text.size(); ++i)
    if (f.text[i] == '\n') f.line_starts.push_back(i + 1);
  return f;
}

SourceFile SourceFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path);
}

Loc SourceFile::loc_of(std::size_t offset) const {
  offset = std::min(offset, text.size());
  auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
  auto line = static_cast<int>(it - line_starts.begin());
  return {line, static_cast<int>(offset - line_starts[line - 1]) + 1};
}

std::size_t SourceFile::offset_of(Loc loc) const {
  if (loc.line <= 0) return 0;
  auto line = std::min<std::size_t>(loc.line, line_starts.size());
  return std::min(text.size(), line_starts[line - 1] + std::max(loc.col, 1) - 1);
}

const char* rule_name(RuleId id) {
  switch (id) {
    case RuleId::Lex: return "lex";
    case RuleId::Syntax: return "syntax";
    case RuleId::MissingChoreography: return "missing-choreography";
    case RuleId::DuplicateChoreography: return "duplicate-choreography";
    case RuleId::DuplicateName: return "duplicate-name";
    case RuleId::Unresolved: return "unresolved";
    case RuleId::EndpointPositivity: return "endpoint-positivity";
    case RuleId::ChorPlacement: return "chor-placement";
    case RuleId::PlaceholderPlacement: return "placeholder-placement";
    case RuleId::BinderScope: return "binder-scope";
    case RuleId::PurityLevel: return "purity-level";
    case RuleId::ConditionShape: return "condition-shape";
    case RuleId::Participation: return "participation";
    case RuleId::AssignableLocation: return "assignable-location";
    case RuleId::SourceInhaleExhale: return "source-inhale-exhale";
    case RuleId::QuantifiedPermission: return "quantified-permission";
  }
  return "unknown";
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string format(const Diagnostic& d, const std::string& path) {
  std::ostringstream os;
  if (!path.empty()) os << path << ':';
  os << d.begin.line << ':' << d.begin.col << ": "
     << (d.severity == Severity::Error ? "error" : "warning") << '[' << rule_name(d.rule)
     << "]: " << d.message;
  return os.str();
}

}  // namespace chorcc

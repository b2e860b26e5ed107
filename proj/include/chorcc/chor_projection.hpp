#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chorcc/ast.hpp"
#include "chorcc/json_io.hpp"

namespace chorcc {

using RuleTrace = std::vector<std::string>;

/// A statement or expression that no projection rule accepts.
class UnsupportedSyntax : public std::runtime_error {
 public:
  UnsupportedSyntax(const std::string& msg, Loc loc)
      : std::runtime_error(msg), loc_(loc) {}
  Loc loc() const { return loc_; }

 private:
  Loc loc_;
};

/// Sequential program produced by the choreographic projection.
struct VerificationProgram {
  std::shared_ptr<const Program> source;  // classes, functions and predicates
  std::string name;
  std::vector<Param> params;
  Block setup;  // NewEndpoint statements in declaration order
  Block body;
  RuleTrace trace;
};

/// Communicate statements of a run body in lexical preorder; the position in
/// this list is the site id shared by both projections.
std::vector<const ChorStmt*> communicate_sites(const ChorBlock& run);

/// Throws UnsupportedSyntax; requires a choreography in `p`.
VerificationProgram project_chor(std::shared_ptr<const Program> p);

std::string pretty(const VerificationProgram& v);
json to_json(const VerificationProgram& v, JsonOptions opts = {});

// Individual rules, exposed for testing. `trace` may be null.

/// Conjunct-wise projection of an H_chor condition. Without `confine` the
/// result evaluates every conjunct at its owner; with `confine` (singular or
/// indexed) conjuncts of other sorts become `true`.
ExprPtr cp_expr(const ExprPtr& h, const std::optional<Target>& confine, RuleTrace* trace = nullptr);

/// Like cp_expr (unconfined) for R_chor; `\chor` bodies are kept verbatim and
/// conjuncts are joined with `**`.
ExprPtr cp_resource(const ExprPtr& r, RuleTrace* trace = nullptr);

/// Pairwise agreement of all participants of `h` on its value.
ExprPtr unanimous(const ExprPtr& h, RuleTrace* trace = nullptr);

/// Injectivity of `d` over `binder` in [lo, hi).
ExprPtr injectivity(const std::string& binder, const ExprPtr& lo, const ExprPtr& hi,
                    const ExprPtr& d);

}  // namespace chorcc

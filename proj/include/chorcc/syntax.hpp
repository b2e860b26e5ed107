#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "chorcc/ast.hpp"
#include "chorcc/diagnostic.hpp"

namespace chorcc {

/// Name of the endpoint or family a target refers to.
using SortTag = std::string;

SortTag sort(const Target& t);

enum class Coverage { No, Maybe };

/// `No` iff the targets have different sorts. Requires `r` singular or indexed.
Coverage covers(const Target& alpha, const Target& r);

/// Unknown class, method or constructor.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Callee of `contract_pre` / `contract_post`. An empty method name denotes
/// the constructor of `class_name`.
struct Callee {
  std::string class_name;
  std::string method;
};

/// Precondition of the callee with `this` replaced by `receiver`; conjuncts
/// joined by `**`. Throws ResolutionError if the callee is unknown or if the
/// receiver mentions one of the callee's parameter names.
ExprPtr contract_pre(const Program& p, const Callee& callee, const ExprPtr& receiver);
ExprPtr contract_post(const Program& p, const Callee& callee, const ExprPtr& receiver);

/// Variant for an already resolved method.
ExprPtr contract_pre(const MethodDecl& m, const ExprPtr& receiver);
ExprPtr contract_post(const MethodDecl& m, const ExprPtr& receiver);

const MethodDecl& resolve_callee(const Program& p, const Callee& callee);

/// Sorts occurring in a choreographic statement (targets only).
std::set<SortTag> sorts_of(const ChorStmt& s);
std::set<SortTag> sorts_of_expr(const ExprPtr& e);

/// Class of the endpoint a receiver expression (`a` or `F[E]`) denotes, if it
/// has that shape.
const EndpointDecl* endpoint_of(const Choreography& c, const ExprPtr& receiver);

/// Static well-formedness. Returns an empty list for clean programs; order is
/// deterministic (source order of the checked constructs).
std::vector<Diagnostic> check_wellformed(const Program& p);

}  // namespace chorcc

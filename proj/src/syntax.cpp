#include "chorcc/syntax.hpp"

#include <algorithm>
#include <map>

namespace chorcc {

SortTag sort(const Target& t) { return t.name; }

Coverage covers(const Target& alpha, const Target& r) {
  return sort(alpha) == sort(r) ? Coverage::Maybe : Coverage::No;
}

// -- contracts ----------------------------------------------------------------

const MethodDecl& resolve_callee(const Program& p, const Callee& callee) {
  const ClassDecl* cls = p.find_class(callee.class_name);
  if (!cls) throw ResolutionError("unknown class '" + callee.class_name + "'");
  if (callee.method.empty()) {
    if (!cls->constructor)
      throw ResolutionError("class '" + callee.class_name + "' has no constructor");
    return *cls->constructor;
  }
  const MethodDecl* m = cls->find_method(callee.method);
  if (!m)
    throw ResolutionError("unknown method '" + callee.class_name + "." + callee.method + "'");
  return *m;
}

namespace {

ExprPtr instantiate(const MethodDecl& m, const std::vector<ExprPtr>& parts,
                    const ExprPtr& receiver) {
  auto fv = free_vars(receiver);
  for (const auto& prm : m.params)
    if (std::find(fv.begin(), fv.end(), prm.name) != fv.end())
      throw ResolutionError("receiver mentions parameter '" + prm.name + "' of '" + m.name +
                            "'");
  std::vector<ExprPtr> out;
  for (const auto& e : parts) out.push_back(replace_this(e, receiver));
  return ex::conj(out, Op::Star);
}

}  // namespace

ExprPtr contract_pre(const MethodDecl& m, const ExprPtr& receiver) {
  return instantiate(m, m.contract.pre, receiver);
}
ExprPtr contract_post(const MethodDecl& m, const ExprPtr& receiver) {
  return instantiate(m, m.contract.post, receiver);
}
ExprPtr contract_pre(const Program& p, const Callee& c, const ExprPtr& receiver) {
  return contract_pre(resolve_callee(p, c), receiver);
}
ExprPtr contract_post(const Program& p, const Callee& c, const ExprPtr& receiver) {
  return contract_post(resolve_callee(p, c), receiver);
}

// -- sorts ----------------------------------------------------------------------

std::set<SortTag> sorts_of_expr(const ExprPtr& e) {
  std::set<SortTag> out;
  any_node(e, [&](const Expr& n) {
    if (n.kind == ExprKind::Endpoint) out.insert(sort(*n.target));
    return false;
  });
  return out;
}

namespace {
void collect_sorts(const ChorBlock& b, std::set<SortTag>& out);

void collect_sorts(const ChorStmt& s, std::set<SortTag>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ChorIf>) {
          out.merge(sorts_of_expr(n.cond));
          collect_sorts(n.then_branch, out);
          collect_sorts(n.else_branch, out);
        } else if constexpr (std::is_same_v<T, ChorWhile>) {
          out.merge(sorts_of_expr(n.cond));
          if (n.invariant) out.merge(sorts_of_expr(n.invariant));
          collect_sorts(n.body, out);
        } else if constexpr (std::is_same_v<T, ChorAssert>) {
          out.merge(sorts_of_expr(n.expr));
        } else if constexpr (std::is_same_v<T, Communicate>) {
          out.insert(sort(n.sender));
          out.insert(sort(n.receiver));
        } else {
          out.insert(sort(n.target));
        }
      },
      s.node);
}

void collect_sorts(const ChorBlock& b, std::set<SortTag>& out) {
  for (const auto& s : b) collect_sorts(s, out);
}
}  // namespace

std::set<SortTag> sorts_of(const ChorStmt& s) {
  std::set<SortTag> out;
  collect_sorts(s, out);
  return out;
}

const EndpointDecl* endpoint_of(const Choreography& c, const ExprPtr& receiver) {
  if (!receiver) return nullptr;
  if (receiver->kind == ExprKind::Var) {
    const auto* d = c.find_endpoint(receiver->name);
    return d && !d->is_family() ? d : nullptr;
  }
  if (receiver->kind == ExprKind::SeqIndex && receiver->kid(0)->kind == ExprKind::Var) {
    const auto* d = c.find_endpoint(receiver->kid(0)->name);
    return d && d->is_family() ? d : nullptr;
  }
  return nullptr;
}

// -- well-formedness ------------------------------------------------------------

namespace {

/// Expression position; decides which constructs are admissible.
enum class Pos {
  Pure,      // E
  Heap,      // H
  Res,       // R
  Cond,      // H_chor
  ResChor,   // R_chor
  Chan,      // R_chan
};

struct Scope {
  std::vector<std::string> names;
  void push(const std::string& n) { names.push_back(n); }
  void pop(std::size_t n = 1) { names.resize(names.size() - n); }
  bool has(const std::string& n) const {
    return std::find(names.begin(), names.end(), n) != names.end();
  }
};

class Checker {
 public:
  explicit Checker(const Program& p) : p_(p) {}

  std::vector<Diagnostic> run() {
    check_toplevel();
    for (const auto& d : p_.decls) {
      if (const auto* c = std::get_if<ClassDecl>(&d)) check_class(*c);
      if (const auto* f = std::get_if<FunctionDecl>(&d)) check_function(*f);
      if (const auto* pr = std::get_if<PredicateDecl>(&d)) check_predicate(*pr);
    }
    if (const auto* c = p_.choreography()) check_choreography(*c);
    return std::move(diags_);
  }

 private:
  void error(RuleId rule, std::string msg, Loc loc) {
    diags_.push_back({Severity::Error, rule, std::move(msg), loc, loc});
  }
  void warning(RuleId rule, std::string msg, Loc loc) {
    diags_.push_back({Severity::Warning, rule, std::move(msg), loc, loc});
  }

  // -- declarations --

  void check_toplevel() {
    std::map<std::string, int> seen;
    int chors = 0;
    for (const auto& d : p_.decls) {
      std::visit(
          [&](const auto& decl) {
            using T = std::decay_t<decltype(decl)>;
            if constexpr (std::is_same_v<T, Choreography>) {
              if (++chors == 2)
                error(RuleId::DuplicateChoreography, "more than one choreography", decl.loc);
            } else if (seen[decl.name]++ == 1) {
              error(RuleId::DuplicateName, "duplicate declaration '" + decl.name + "'", decl.loc);
            }
          },
          d);
    }
    if (chors == 0) error(RuleId::MissingChoreography, "no choreography declared", {1, 1});
  }

  void check_params(const std::vector<Param>& ps, Loc loc, Scope& scope) {
    for (const auto& prm : ps) {
      if (scope.has(prm.name))
        error(RuleId::DuplicateName, "duplicate parameter '" + prm.name + "'", loc);
      check_type(prm.type, loc);
      scope.push(prm.name);
    }
  }

  void check_type(const Type& t, Loc loc) {
    if (t.is_seq()) {
      for (const auto& a : t.args) check_type(a, loc);
      return;
    }
    if (t.is_int() || t.is_bool() || t.name == "void") return;
    if (!p_.find_class(t.name)) error(RuleId::Unresolved, "unknown type '" + t.name + "'", loc);
  }

  void check_class(const ClassDecl& c) {
    std::map<std::string, int> names;
    for (const auto& f : c.fields) {
      if (names[f.name]++) error(RuleId::DuplicateName, "duplicate member '" + f.name + "'", f.loc);
      check_type(f.type, f.loc);
    }
    for (const auto& m : c.methods)
      if (names[m.name]++) error(RuleId::DuplicateName, "duplicate member '" + m.name + "'", m.loc);
    cls_ = &c;
    if (c.constructor) check_method(*c.constructor);
    for (const auto& m : c.methods) check_method(m);
    cls_ = nullptr;
  }

  void check_method(const MethodDecl& m) {
    Scope scope;
    check_params(m.params, m.loc, scope);
    for (const auto& e : m.contract.pre) expr(e, Pos::Res, scope);
    for (const auto& e : m.contract.post) expr(e, Pos::Res, scope);
    in_method_ = true;
    block(m.body, scope);
    in_method_ = false;
  }

  void check_function(const FunctionDecl& f) {
    Scope scope;
    check_params(f.params, f.loc, scope);
    check_type(f.result, f.loc);
    for (const auto& e : f.contract.pre) expr(e, Pos::Res, scope);
    allow_result_ = true;
    for (const auto& e : f.contract.post) expr(e, Pos::Res, scope);
    allow_result_ = false;
    expr(f.body, Pos::Heap, scope);
  }

  void check_predicate(const PredicateDecl& pr) {
    Scope scope;
    check_params(pr.params, pr.loc, scope);
    expr(pr.body, Pos::Res, scope);
  }

  // -- method statements --

  void block(const Block& b, Scope& scope) {
    std::size_t mark = scope.names.size();
    for (const auto& s : b) stmt(s, scope);
    scope.names.resize(mark);
  }

  void stmt(const Stmt& s, Scope& scope) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, AssignStmt>) {
            if (n.lhs->kind == ExprKind::Var) {
              if (!scope.has(n.lhs->name))
                error(RuleId::Unresolved, "unknown variable '" + n.lhs->name + "'", n.lhs->loc);
            } else if (n.lhs->kind != ExprKind::Field) {
              error(RuleId::AssignableLocation, "left side of assignment is not assignable",
                    n.lhs->loc);
            } else {
              expr(n.lhs, Pos::Heap, scope);
            }
            expr(n.rhs, Pos::Heap, scope);
          } else if constexpr (std::is_same_v<T, DeclStmt>) {
            check_type(n.type, s.loc);
            if (n.init) expr(n.init, Pos::Heap, scope);
            if (scope.has(n.name))
              error(RuleId::DuplicateName, "variable '" + n.name + "' already declared", s.loc);
            scope.push(n.name);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            expr(n.receiver, Pos::Heap, scope);
            for (const auto& a : n.args) expr(a, Pos::Heap, scope);
            if (n.receiver->kind == ExprKind::This && cls_ && !cls_->find_method(n.method))
              error(RuleId::Unresolved, "unknown method '" + n.method + "'", s.loc);
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            expr(n.cond, Pos::Heap, scope);
            block(n.then_branch, scope);
            block(n.else_branch, scope);
          } else if constexpr (std::is_same_v<T, WhileStmt>) {
            if (n.invariant) expr(n.invariant, Pos::Res, scope);
            expr(n.cond, Pos::Heap, scope);
            block(n.body, scope);
          } else if constexpr (std::is_same_v<T, AssertStmt>) {
            expr(n.expr, Pos::Res, scope);
          } else if constexpr (std::is_same_v<T, InhaleStmt> || std::is_same_v<T, ExhaleStmt>) {
            warning(RuleId::SourceInhaleExhale,
                    "inhale/exhale in source is unchecked by projection", s.loc);
            expr(n.expr, Pos::Res, scope);
          } else if constexpr (std::is_same_v<T, BlockStmt>) {
            block(n.body, scope);
          } else {
            error(RuleId::Syntax, "statement form is not allowed in source programs", s.loc);
          }
        },
        s.node);
  }

  // -- choreography --

  void check_choreography(const Choreography& c) {
    chor_ = &c;
    Scope scope;
    check_params(c.params, c.loc, scope);
    for (const auto& e : c.contract.pre) expr(e, Pos::Res, scope);
    for (const auto& e : c.contract.post) expr(e, Pos::Res, scope);
    Scope params_only = scope;
    for (std::size_t k = 0; k < c.endpoints.size(); ++k) {
      const auto& ep = c.endpoints[k];
      if (scope.has(ep.name))
        error(RuleId::DuplicateName, "duplicate endpoint name '" + ep.name + "'", ep.loc);
      const ClassDecl* cls = p_.find_class(ep.class_name);
      if (!cls) {
        error(RuleId::Unresolved, "unknown class '" + ep.class_name + "'", ep.loc);
      } else {
        std::size_t want = cls->constructor ? cls->constructor->params.size() : 0;
        if (ep.args.size() != want)
          error(RuleId::Unresolved,
                "constructor of '" + ep.class_name + "' expects " + std::to_string(want) +
                    " argument(s)",
                ep.loc);
      }
      if (ep.is_family()) {
        expr(ep.size, Pos::Pure, params_only);
        if (params_only.has(ep.binder))
          error(RuleId::BinderScope, "family binder '" + ep.binder + "' shadows a parameter",
                ep.loc);
        params_only.push(ep.binder);
        for (const auto& a : ep.args) expr(a, Pos::Pure, params_only);
        params_only.pop();
      } else {
        for (const auto& a : ep.args) expr(a, Pos::Heap, scope);
      }
      scope.push(ep.name);
    }
    for (const auto& e : c.run_contract.pre) expr(e, Pos::ResChor, scope);
    for (const auto& e : c.run_contract.post) expr(e, Pos::ResChor, scope);
    chor_block(c.run, scope);
    chor_ = nullptr;
  }

  void chor_block(const ChorBlock& b, Scope& scope) {
    for (const auto& s : b) chor_stmt(s, scope);
  }

  void condition(const ExprPtr& cond, Scope& scope) {
    for (const auto& leaf : flatten(cond, Op::And)) {
      if (leaf->kind == ExprKind::Chor) {
        error(RuleId::ChorPlacement, "\\chor is not allowed in branch or loop conditions",
              leaf->loc);
      } else if (leaf->kind != ExprKind::Endpoint) {
        error(RuleId::ConditionShape,
              "choreographic conditions must be &&-lists of \\endpoint expressions", leaf->loc);
      } else {
        expr(leaf, Pos::Cond, scope);
      }
    }
  }

  void participation(const std::set<SortTag>& cond, const ChorBlock& body, Loc loc) {
    std::set<SortTag> inner;
    for (const auto& s : body) inner.merge(sorts_of(s));
    for (const auto& s : inner)
      if (!cond.count(s))
        error(RuleId::Participation,
              "endpoint '" + s + "' occurs in the body but not in the condition", loc);
  }

  /// Pushes the binder of a range target; returns the number of names pushed.
  std::size_t target(const Target& t, Scope& scope) {
    const EndpointDecl* d = chor_ ? chor_->find_endpoint(t.name) : nullptr;
    if (!d) {
      error(RuleId::Unresolved, "unknown endpoint '" + t.name + "'", t.loc);
    } else if (t.is_singular() && d->is_family()) {
      error(RuleId::Unresolved, "family '" + t.name + "' must be indexed", t.loc);
    } else if (!t.is_singular() && !d->is_family()) {
      error(RuleId::Unresolved, "endpoint '" + t.name + "' is not a family", t.loc);
    }
    if (t.is_indexed()) expr(t.index, Pos::Pure, scope);
    if (t.is_range()) {
      expr(t.lo, Pos::Pure, scope);
      expr(t.hi, Pos::Pure, scope);
      if (scope.has(t.binder))
        error(RuleId::BinderScope, "range binder '" + t.binder + "' is not fresh", t.loc);
      scope.push(t.binder);
      return 1;
    }
    return 0;
  }

  void location(const ExprPtr& e, Scope& scope) {
    if (e->kind != ExprKind::Field)
      error(RuleId::AssignableLocation, "destination must be a field location", e->loc);
    expr(e, Pos::Heap, scope);
  }

  void chor_stmt(const ChorStmt& s, Scope& scope) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ChorIf>) {
            condition(n.cond, scope);
            auto cs = sorts_of_expr(n.cond);
            participation(cs, n.then_branch, s.loc);
            participation(cs, n.else_branch, s.loc);
            chor_block(n.then_branch, scope);
            chor_block(n.else_branch, scope);
          } else if constexpr (std::is_same_v<T, ChorWhile>) {
            if (n.invariant) expr(n.invariant, Pos::ResChor, scope);
            condition(n.cond, scope);
            participation(sorts_of_expr(n.cond), n.body, s.loc);
            chor_block(n.body, scope);
          } else if constexpr (std::is_same_v<T, ChorAssert>) {
            expr(n.expr, Pos::ResChor, scope);
          } else if constexpr (std::is_same_v<T, EndpointAssign>) {
            std::size_t pushed = target(n.target, scope);
            location(n.location, scope);
            expr(n.value, Pos::Heap, scope);
            scope.pop(pushed);
          } else if constexpr (std::is_same_v<T, EndpointCall>) {
            std::size_t pushed = target(n.target, scope);
            expr(n.receiver, Pos::Heap, scope);
            for (const auto& a : n.args) expr(a, Pos::Heap, scope);
            if (const auto* ep = endpoint_of(*chor_, n.receiver)) {
              const ClassDecl* cls = p_.find_class(ep->class_name);
              const MethodDecl* m = cls ? cls->find_method(n.method) : nullptr;
              if (cls && !m)
                error(RuleId::Unresolved,
                      "unknown method '" + ep->class_name + "." + n.method + "'", s.loc);
              if (m && m->params.size() != n.args.size())
                error(RuleId::Unresolved,
                      "method '" + n.method + "' expects " + std::to_string(m->params.size()) +
                          " argument(s)",
                      s.loc);
            }
            scope.pop(pushed);
          } else {
            if (n.invariant) {
              Scope chan = scope;
              expr(n.invariant, Pos::Chan, chan);
            }
            std::size_t pushed = target(n.sender, scope);
            pushed += target(n.receiver, scope);
            expr(n.message, Pos::Heap, scope);
            location(n.destination, scope);
            scope.pop(pushed);
          }
        },
        s.node);
  }

  // -- expressions --

  struct Walk {
    Pos pos;
    bool positive = true;
    bool in_endpoint = false;
    bool in_forall = false;
  };

  void expr(const ExprPtr& e, Pos pos, Scope& scope) {
    if (e) walk(e, Walk{pos}, scope, false);
  }

  void walk(const ExprPtr& e, Walk w, Scope& scope, bool family_base) {
    const Expr& n = *e;
    auto negative = [](Walk x) {
      x.positive = false;
      return x;
    };
    switch (n.kind) {
      case ExprKind::Var:
        if (!scope.has(n.name)) {
          error(RuleId::Unresolved, "unknown name '" + n.name + "'", n.loc);
        } else if (!family_base && chor_) {
          const auto* d = chor_->find_endpoint(n.name);
          if (d && d->is_family())
            error(RuleId::Unresolved, "family '" + n.name + "' must be indexed", n.loc);
        }
        return;
      case ExprKind::IntLit:
      case ExprKind::BoolLit:
        return;
      case ExprKind::This:
        if (!in_method_ && !cls_) error(RuleId::Unresolved, "'this' outside a class", n.loc);
        if (w.pos == Pos::Pure) error(RuleId::PurityLevel, "heap access in pure expression", n.loc);
        return;
      case ExprKind::Field: {
        if (w.pos == Pos::Pure) error(RuleId::PurityLevel, "heap access in pure expression", n.loc);
        walk(n.kid(0), negative(w), scope, false);
        const ClassDecl* cls = nullptr;
        if (chor_) {
          if (const auto* ep = endpoint_of(*chor_, n.kid(0))) cls = p_.find_class(ep->class_name);
        }
        if (n.kid(0)->kind == ExprKind::This) cls = cls_;
        if (cls && !cls->find_field(n.name))
          error(RuleId::Unresolved, "class '" + cls->name + "' has no field '" + n.name + "'",
                n.loc);
        return;
      }
      case ExprKind::SeqIndex:
        walk(n.kid(0), negative(w), scope, true);
        walk(n.kid(1), negative(w), scope, false);
        return;
      case ExprKind::Unary:
        walk(n.kid(0), negative(w), scope, false);
        return;
      case ExprKind::Binary:
        if (n.op == Op::Star && !res_allowed(w))
          error(RuleId::PurityLevel, "'**' outside a resource position", n.loc);
        if (n.op == Op::And || n.op == Op::Star) {
          walk(n.kid(0), w, scope, false);
          walk(n.kid(1), w, scope, false);
        } else if (n.op == Op::Implies) {
          walk(n.kid(0), negative(w), scope, false);
          walk(n.kid(1), w, scope, false);
        } else {
          walk(n.kid(0), negative(w), scope, false);
          walk(n.kid(1), negative(w), scope, false);
        }
        return;
      case ExprKind::Call: {
        const FunctionDecl* f = p_.find_function(n.name);
        if (!f)
          error(RuleId::Unresolved, "unknown function '" + n.name + "'", n.loc);
        else if (f->params.size() != n.kids.size())
          error(RuleId::Unresolved, "function '" + n.name + "' expects " +
                                        std::to_string(f->params.size()) + " argument(s)",
                n.loc);
        if (n.purity >= Purity::Heap && w.pos == Pos::Pure)
          error(RuleId::PurityLevel, "heap function in pure expression", n.loc);
        for (const auto& k : n.kids) walk(k, negative(w), scope, false);
        return;
      }
      case ExprKind::PredApply:
        if (!res_allowed(w))
          error(RuleId::PurityLevel, "predicate outside a resource position", n.loc);
        for (const auto& k : n.kids) walk(k, negative(w), scope, false);
        return;
      case ExprKind::MethodCall:
        error(RuleId::Syntax, "method calls are statements, not expressions", n.loc);
        return;
      case ExprKind::Perm:
        if (!res_allowed(w))
          error(RuleId::PurityLevel, "Perm outside a resource position", n.loc);
        if (w.in_forall)
          error(RuleId::QuantifiedPermission, "quantified permissions are not supported", n.loc);
        walk(n.kid(0), negative(w), scope, false);
        walk(n.kid(1), negative(w), scope, false);
        return;
      case ExprKind::Endpoint: {
        if (w.pos != Pos::Cond && w.pos != Pos::ResChor) {
          error(RuleId::EndpointPositivity,
                "endpoint expressions only occur in choreographic conditions and annotations",
                n.loc);
          return;
        }
        if (w.in_endpoint) {
          error(RuleId::EndpointPositivity, "nested endpoint expression", n.loc);
          return;
        }
        if (!w.positive) error(RuleId::EndpointPositivity, "endpoint expression in negative position", n.loc);
        std::size_t pushed = target(*n.target, scope);
        Walk inner{w.pos == Pos::Cond ? Pos::Heap : Pos::Res};
        inner.in_endpoint = true;
        inner.in_forall = w.in_forall;
        walk(n.kid(0), inner, scope, false);
        scope.pop(pushed);
        return;
      }
      case ExprKind::Chor: {
        if (w.pos != Pos::ResChor || !w.positive || w.in_endpoint) {
          error(RuleId::ChorPlacement,
                "\\chor only occurs positively in assertions, invariants and contracts", n.loc);
          return;
        }
        Walk inner{Pos::Res};
        inner.in_endpoint = true;
        walk(n.kid(0), inner, scope, false);
        return;
      }
      case ExprKind::Msg:
      case ExprKind::Sender:
      case ExprKind::Receiver:
        if (w.pos != Pos::Chan)
          error(RuleId::PlaceholderPlacement,
                "\\msg, \\sender and \\receiver only occur in channel invariants", n.loc);
        return;
      case ExprKind::Result:
        if (!allow_result_) error(RuleId::PlaceholderPlacement, "\\result outside a postcondition", n.loc);
        return;
      case ExprKind::Forall: {
        walk(n.kid(0), negative(w), scope, false);
        walk(n.kid(1), negative(w), scope, false);
        if (scope.has(n.name))
          error(RuleId::BinderScope, "quantified variable '" + n.name + "' is not fresh", n.loc);
        scope.push(n.name);
        Walk inner = w;
        inner.in_forall = true;
        walk(n.kid(2), inner, scope, false);
        scope.pop();
        return;
      }
      case ExprKind::SeqLit:
      case ExprKind::SeqLength:
        for (const auto& k : n.kids) walk(k, negative(w), scope, false);
        return;
      case ExprKind::Confined:
        error(RuleId::Syntax, "confined expressions only occur in projected programs", n.loc);
        return;
    }
  }

  static bool res_allowed(const Walk& w) { return w.pos == Pos::Res || w.pos == Pos::Chan; }

  const Program& p_;
  const Choreography* chor_ = nullptr;
  const ClassDecl* cls_ = nullptr;
  bool in_method_ = false;
  bool allow_result_ = false;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> check_wellformed(const Program& p) { return Checker(p).run(); }

}  // namespace chorcc

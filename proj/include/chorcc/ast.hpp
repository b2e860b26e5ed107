#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace chorcc {

using Int = boost::multiprecision::cpp_int;

struct Loc {
  int line = 0;
  int col = 0;
};

struct Type {
  // "int", "boolean", "seq", "void", or a class name.
  std::string name;
  std::vector<Type> args;

  static Type integer() { return {"int", {}}; }
  static Type boolean() { return {"boolean", {}}; }
  static Type seq(Type elem) { return {"seq", {std::move(elem)}}; }
  static Type cls(std::string n) { return {std::move(n), {}}; }

  bool is_int() const { return name == "int"; }
  bool is_bool() const { return name == "boolean"; }
  bool is_seq() const { return name == "seq"; }
  bool operator==(const Type&) const = default;
  std::string str() const;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Endpoint target: `e`, `F[E]`, or `F[v := lo .. hi]`.
struct Target {
  enum class Kind { Singular, FamilyIndex, FamilyRange };
  Kind kind = Kind::Singular;
  std::string name;
  ExprPtr index;
  std::string binder;
  ExprPtr lo, hi;
  Loc loc;

  static Target singular(std::string name, Loc loc = {});
  static Target indexed(std::string family, ExprPtr index, Loc loc = {});
  static Target range(std::string family, std::string binder, ExprPtr lo, ExprPtr hi,
                      Loc loc = {});

  bool is_singular() const { return kind == Kind::Singular; }
  bool is_indexed() const { return kind == Kind::FamilyIndex; }
  bool is_range() const { return kind == Kind::FamilyRange; }
};

/// Purity levels nest: Pure (E) < Heap (H) < Resource (R).
enum class Purity { Pure = 0, Heap = 1, Resource = 2 };

enum class ExprKind {
  Var,
  IntLit,
  BoolLit,
  Field,
  SeqIndex,
  Unary,
  Binary,
  Call,
  PredApply,
  MethodCall,  // only as a statement; rejected inside expressions
  This,
  Perm,
  Endpoint,
  Chor,
  Msg,
  Sender,
  Receiver,
  Result,
  Forall,
  SeqLit,
  SeqLength,
  Confined,
};

enum class Op {
  Add, Sub, Mul, Div, Mod, Frac,
  And, Or, Eq, Ne, Lt, Le, Gt, Ge, Implies, Star,
  Not, Neg,
};

const char* op_symbol(Op op);

/// Immutable expression node. Children are shared, so rewriting a subtree never
/// copies untouched parts.
///
/// Child layout by kind:
///   Field: [object]            name = field
///   SeqIndex: [seq, index]
///   Unary: [operand]           Binary: [lhs, rhs]
///   Call / PredApply: args     name = callee
///   MethodCall: [receiver, args...]  name = method
///   Perm: [location, amount]
///   Endpoint / Confined: [body] plus target
///   Chor: [body]
///   Forall: [lo, hi, body]     name = binder, type = binder type
///   SeqLit: elements           type = element type
///   SeqLength: [seq]
struct Expr {
  ExprKind kind = ExprKind::Var;
  Op op = Op::Add;
  std::string name;
  Type type;
  Int value;
  bool flag = false;
  std::vector<ExprPtr> kids;
  std::optional<Target> target;
  Purity purity = Purity::Pure;
  Loc loc;

  const ExprPtr& kid(std::size_t i) const { return kids.at(i); }
  bool is_bool(bool v) const { return kind == ExprKind::BoolLit && flag == v; }
  bool is_true() const { return is_bool(true); }
};

namespace ex {
ExprPtr var(std::string name, Loc loc = {});
ExprPtr int_lit(Int v, Loc loc = {});
ExprPtr boolean(bool v, Loc loc = {});
ExprPtr field(ExprPtr obj, std::string field, Loc loc = {});
ExprPtr index(ExprPtr seq, ExprPtr idx, Loc loc = {});
ExprPtr unary(Op op, ExprPtr e, Loc loc = {});
ExprPtr binary(Op op, ExprPtr l, ExprPtr r, Loc loc = {});
ExprPtr call(std::string fn, std::vector<ExprPtr> args, Purity level = Purity::Pure,
             Loc loc = {});
ExprPtr pred(std::string p, std::vector<ExprPtr> args, Loc loc = {});
ExprPtr method_call(ExprPtr recv, std::string m, std::vector<ExprPtr> args, Loc loc = {});
ExprPtr this_(Loc loc = {});
ExprPtr perm(ExprPtr location, ExprPtr amount, Loc loc = {});
ExprPtr endpoint(Target t, ExprPtr body, Loc loc = {});
ExprPtr chor(ExprPtr body, Loc loc = {});
ExprPtr placeholder(ExprKind k, Loc loc = {});
ExprPtr forall(Type t, std::string binder, ExprPtr lo, ExprPtr hi, ExprPtr body, Loc loc = {});
ExprPtr seq_lit(Type elem, std::vector<ExprPtr> elems, Loc loc = {});
ExprPtr seq_len(ExprPtr seq, Loc loc = {});
ExprPtr confined(Target t, ExprPtr body, Loc loc = {});

ExprPtr and_(ExprPtr l, ExprPtr r);       // drops literal `true` operands
ExprPtr star(ExprPtr l, ExprPtr r);       // drops literal `true` operands
ExprPtr implies(ExprPtr l, ExprPtr r);
ExprPtr conj(const std::vector<ExprPtr>& parts, Op joiner = Op::And);

/// Expression denoting the endpoint object a singular or indexed target refers to.
ExprPtr target_ref(const Target& t);
}  // namespace ex

/// Splits a left/right nested tree of `joiner` into its leaves.
std::vector<ExprPtr> flatten(const ExprPtr& e, Op joiner);

bool same(const ExprPtr& a, const ExprPtr& b);
bool same(const Target& a, const Target& b);

/// Capture-avoiding substitution of free variables. Forall binders shadow.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& sub);
Target substitute(const Target& t, const std::map<std::string, ExprPtr>& sub);
ExprPtr replace_this(const ExprPtr& e, const ExprPtr& receiver);
ExprPtr replace_placeholders(const ExprPtr& e, const ExprPtr& msg, const ExprPtr& sender,
                             const ExprPtr& receiver);

/// Free variable names (Forall and range binders excluded).
std::vector<std::string> free_vars(const ExprPtr& e);

/// True if any node (including nodes inside targets) satisfies `pred`.
template <class Pred>
bool any_node(const ExprPtr& e, const Pred& pred);

// ---------------------------------------------------------------------------
// Statements of the sequential fragment. Used for method bodies, the
// verification program and the endpoint programs.

struct Stmt;
using Block = std::vector<Stmt>;

struct Contract {
  std::vector<ExprPtr> pre;
  std::vector<ExprPtr> post;
  bool empty() const { return pre.empty() && post.empty(); }
};

struct AssignStmt {
  ExprPtr lhs, rhs;
};
struct DeclStmt {
  Type type;
  std::string name;
  ExprPtr init;
};
struct CallStmt {
  ExprPtr receiver;
  std::string method;
  std::vector<ExprPtr> args;
  bool adapted = false;  // confinement-adapted variant of the method
};
struct IfStmt {
  ExprPtr cond;
  Block then_branch, else_branch;
};
struct WhileStmt {
  ExprPtr invariant;  // may be null
  ExprPtr cond;
  Block body;
};
struct AssertStmt {
  ExprPtr expr;
  std::string check;  // empty for user assertions
};
struct InhaleStmt {
  ExprPtr expr;
};
struct ExhaleStmt {
  ExprPtr expr;
};
struct BlockStmt {
  Block body;
};
struct ParStmt {
  std::string binder;
  ExprPtr lo, hi;
  Contract contract;
  Block body;
};
struct ConfinedStmt {
  Target target;
  Block body;
};
struct ChannelRef {
  int site = 0;
  ExprPtr sender_index, receiver_index;
};
struct SendStmt {
  ChannelRef channel;
  ExprPtr value;
};
struct RecvStmt {
  ChannelRef channel;
  ExprPtr location;
};
struct NewEndpointStmt {
  std::string name;
  std::string binder;  // families only
  ExprPtr size;        // null for singular endpoints
  std::string class_name;
  std::vector<ExprPtr> args;
};

struct Stmt {
  std::variant<AssignStmt, DeclStmt, CallStmt, IfStmt, WhileStmt, AssertStmt, InhaleStmt,
               ExhaleStmt, BlockStmt, ParStmt, ConfinedStmt, SendStmt, RecvStmt,
               NewEndpointStmt>
      node;
  Loc loc;

  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
  template <class T>
  bool is() const { return std::holds_alternative<T>(node); }
};

inline Stmt make_stmt(auto node, Loc loc = {}) { return Stmt{std::move(node), loc}; }
inline bool is_empty_block(const Stmt& s) {
  const auto* b = s.as<BlockStmt>();
  return b && b->body.empty();
}

// ---------------------------------------------------------------------------
// Choreographic statements.

struct ChorStmt;
using ChorBlock = std::vector<ChorStmt>;

struct ChorIf {
  ExprPtr cond;
  ChorBlock then_branch, else_branch;
};
struct ChorWhile {
  ExprPtr invariant;  // may be null
  ExprPtr cond;
  ChorBlock body;
};
struct ChorAssert {
  ExprPtr expr;
};
struct EndpointAssign {
  Target target;
  ExprPtr location, value;
};
struct EndpointCall {
  Target target;
  ExprPtr receiver;
  std::string method;
  std::vector<ExprPtr> args;
};
struct Communicate {
  ExprPtr invariant;  // may be null
  Target sender;
  ExprPtr message;
  Target receiver;
  ExprPtr destination;
};

struct ChorStmt {
  std::variant<ChorIf, ChorWhile, ChorAssert, EndpointAssign, EndpointCall, Communicate> node;
  Loc loc;

  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
};

// ---------------------------------------------------------------------------
// Declarations.

struct Param {
  Type type;
  std::string name;
};

struct FieldDecl {
  Type type;
  std::string name;
  Loc loc;
};

struct MethodDecl {
  Contract contract;
  std::string name;
  std::vector<Param> params;
  Block body;
  Loc loc;
};

struct ClassDecl {
  std::string name;
  std::vector<FieldDecl> fields;
  std::vector<MethodDecl> methods;
  std::optional<MethodDecl> constructor;
  Loc loc;

  const FieldDecl* find_field(const std::string& n) const;
  const MethodDecl* find_method(const std::string& n) const;
};

struct PredicateDecl {
  std::string name;
  std::vector<Param> params;
  ExprPtr body;
  Loc loc;
};

struct FunctionDecl {
  Contract contract;
  Type result;
  std::string name;
  std::vector<Param> params;
  ExprPtr body;
  Loc loc;
};

struct EndpointDecl {
  std::string name;
  std::string binder;  // families only
  ExprPtr size;        // null for singular endpoints
  std::string class_name;
  std::vector<ExprPtr> args;
  Loc loc;

  bool is_family() const { return size != nullptr; }
};

struct Choreography {
  Contract contract;
  std::string name;
  std::vector<Param> params;
  std::vector<EndpointDecl> endpoints;
  Contract run_contract;
  ChorBlock run;
  Loc loc;

  const EndpointDecl* find_endpoint(const std::string& n) const;
};

using Decl = std::variant<ClassDecl, PredicateDecl, FunctionDecl, Choreography>;

struct Program {
  std::vector<std::string> pragmas;
  std::vector<Decl> decls;

  const Choreography* choreography() const;
  const ClassDecl* find_class(const std::string& n) const;
  const FunctionDecl* find_function(const std::string& n) const;
  const PredicateDecl* find_predicate(const std::string& n) const;
};

// ---------------------------------------------------------------------------
// Generic traversal. `ExprMap` is applied to every top-level expression slot
// (including target index/range expressions); it handles its own recursion.

using ExprMap = std::function<ExprPtr(const ExprPtr&)>;
using ExprVisit = std::function<void(const ExprPtr&)>;

/// Bottom-up rewrite: `fn` returns a replacement for a node, or null to descend.
ExprPtr rewrite(const ExprPtr& e, const ExprMap& fn);

Target map_target_exprs(const Target& t, const ExprMap& fn);
Stmt map_exprs(const Stmt& s, const ExprMap& fn);
Block map_exprs(const Block& b, const ExprMap& fn);
ChorStmt map_exprs(const ChorStmt& s, const ExprMap& fn);
ChorBlock map_exprs(const ChorBlock& b, const ExprMap& fn);

void for_each_expr(const Stmt& s, const ExprVisit& fn);
void for_each_expr(const ChorStmt& s, const ExprVisit& fn);

// ---------------------------------------------------------------------------

namespace detail {
template <class Pred>
bool any_node_target(const Target& t, const Pred& pred) {
  for (const auto* e : {&t.index, &t.lo, &t.hi})
    if (*e && any_node(*e, pred)) return true;
  return false;
}
}  // namespace detail

template <class Pred>
bool any_node(const ExprPtr& e, const Pred& pred) {
  if (!e) return false;
  if (pred(*e)) return true;
  for (const auto& k : e->kids)
    if (any_node(k, pred)) return true;
  return e->target && detail::any_node_target(*e->target, pred);
}

}  // namespace chorcc

#include "interp.hpp"

#include "chorcc/frontend.hpp"
#include "chorcc/syntax.hpp"

namespace chorcc::rt {

namespace {

const Int& as_int(const Value& v, Loc loc) {
  if (const auto* i = std::get_if<Int>(&v.v)) return *i;
  throw RuntimeError("expected an integer, got " + show(v), loc);
}

bool as_bool(const Value& v, Loc loc) {
  if (const auto* b = std::get_if<bool>(&v.v)) return *b;
  throw RuntimeError("expected a boolean, got " + show(v), loc);
}

const Seq& as_seq(const Value& v, Loc loc) {
  if (const auto* s = std::get_if<Seq>(&v.v)) return *s;
  throw RuntimeError("expected a sequence, got " + show(v), loc);
}

Fraction as_number(const Value& v, Loc loc) {
  if (const auto* i = std::get_if<Int>(&v.v)) return Fraction(*i);
  if (const auto* f = std::get_if<Fraction>(&v.v)) return *f;
  throw RuntimeError("expected a number, got " + show(v), loc);
}

}  // namespace

std::string where(Loc loc) {
  return loc.line ? std::to_string(loc.line) + ":" + std::to_string(loc.col) : "?";
}

Value default_value(const Type& t) {
  if (t.is_int()) return Value(Int(0));
  if (t.is_bool()) return Value(false);
  if (t.is_seq()) return Value(Seq{});
  return Value(Ref{});
}

Interp::Interp(const Program& p, Heap& heap, const Params& params)
    : p_(p), heap_(heap), globals_(params) {
  for (const auto& [n, v] : heap.endpoints) globals_[n] = v;
  frames_.emplace_back();
  frames_.back().emplace_back();
}

void Interp::push_scope() { frames_.back().emplace_back(); }
void Interp::pop_scope() { frames_.back().pop_back(); }

void Interp::declare(const std::string& name, Value v) {
  frames_.back().back()[name] = std::move(v);
}

const Value* Interp::lookup(const std::string& name) const {
  const auto& scopes = frames_.back();
  for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
    auto f = it->find(name);
    if (f != it->end()) return &f->second;
  }
  auto g = globals_.find(name);
  return g == globals_.end() ? nullptr : &g->second;
}

void Interp::tick(Loc loc) {
  if (++steps > step_limit) throw RuntimeError("step limit exceeded", loc);
}

Object& Interp::object(const Value& ref, Loc loc) {
  const auto* r = std::get_if<Ref>(&ref.v);
  if (!r) throw RuntimeError("expected an object reference, got " + show(ref), loc);
  if (r->id == 0) throw RuntimeError("null dereference", loc);
  auto it = heap_.objects.find(r->id);
  if (it == heap_.objects.end())
    throw RuntimeError("object #" + std::to_string(r->id) + " is not accessible here", loc);
  return it->second;
}

Owner Interp::owner_of(const Target& t) {
  if (t.is_singular()) return {t.name, 0};
  if (t.is_indexed()) return {t.name, eval_index(t.index)};
  throw RuntimeError("a range target has no single owner", t.loc);
}

Int Interp::eval_int(const ExprPtr& e) { return as_int(eval(e), e->loc); }
bool Interp::eval_bool(const ExprPtr& e) { return as_bool(eval(e), e->loc); }

std::int64_t Interp::eval_index(const ExprPtr& e) {
  Int v = eval_int(e);
  if (v < std::numeric_limits<std::int64_t>::min() || v > std::numeric_limits<std::int64_t>::max())
    throw RuntimeError("index " + v.str() + " out of range", e->loc);
  return v.convert_to<std::int64_t>();
}

std::pair<std::uint64_t, std::string> Interp::location(const ExprPtr& loc_expr) {
  if (loc_expr->kind != ExprKind::Field)
    throw RuntimeError("permission location must be a field", loc_expr->loc);
  Value obj = eval(loc_expr->kid(0));
  const auto* r = std::get_if<Ref>(&obj.v);
  if (!r || r->id == 0) throw RuntimeError("permission on a non-object", loc_expr->loc);
  return {r->id, loc_expr->name};
}

Fraction Interp::amount(const ExprPtr& e) {
  Fraction q = as_number(eval(e), e->loc);
  if (q <= 0 || q > 1) throw RuntimeError("permission amount out of (0, 1]", e->loc);
  return q;
}

Value Interp::eval_confined(const Expr& e) { return eval(e.kid(0)); }

Value Interp::eval(const ExprPtr& ep) {
  const Expr& e = *ep;
  switch (e.kind) {
    case ExprKind::Var: {
      const Value* v = lookup(e.name);
      if (!v) throw RuntimeError("unbound name '" + e.name + "'", e.loc);
      return *v;
    }
    case ExprKind::IntLit: return Value(e.value);
    case ExprKind::BoolLit: return Value(e.flag);
    case ExprKind::This: {
      const Value* v = lookup("this");
      if (!v) throw RuntimeError("'this' outside a method", e.loc);
      return *v;
    }
    case ExprKind::Result: {
      const Value* v = lookup("\\result");
      if (!v) throw RuntimeError("'\\result' outside a postcondition", e.loc);
      return *v;
    }
    case ExprKind::Field: {
      Value obj = eval(e.kid(0));
      Object& o = object(obj, e.loc);
      on_read(std::get<Ref>(obj.v).id, e.name, e.loc);
      auto it = o.fields.find(e.name);
      if (it == o.fields.end())
        throw RuntimeError("class " + o.class_name + " has no field '" + e.name + "'", e.loc);
      return it->second;
    }
    case ExprKind::SeqIndex: {
      Value s = eval(e.kid(0));
      const Seq& seq = as_seq(s, e.loc);
      Int k = eval_int(e.kid(1));
      if (k < 0 || k >= Int(seq.size()))
        throw RuntimeError("index " + k.str() + " out of range [0, " + std::to_string(seq.size()) +
                               ")",
                           e.loc);
      return seq[k.convert_to<std::size_t>()];
    }
    case ExprKind::Unary: {
      Value v = eval(e.kid(0));
      if (e.op == Op::Not) return Value(!as_bool(v, e.loc));
      if (const auto* f = std::get_if<Fraction>(&v.v)) return Value(Fraction(-*f));
      return Value(Int(-as_int(v, e.loc)));
    }
    case ExprKind::Binary: return binary(e);
    case ExprKind::Call: return call_function(e);
    case ExprKind::PredApply: {
      const PredicateDecl* pd = p_.find_predicate(e.name);
      if (!pd) throw RuntimeError("unknown predicate '" + e.name + "'", e.loc);
      std::vector<Value> args;
      for (const auto& a : e.kids) args.push_back(eval(a));
      FrameGuard g(*this);
      for (std::size_t k = 0; k < pd->params.size() && k < args.size(); ++k)
        declare(pd->params[k].name, args[k]);
      return Value(eval_bool(pd->body));
    }
    case ExprKind::Perm: {
      auto [id, field] = location(e.kid(0));
      return Value(perm(id, field, amount(e.kid(1)), e.loc));
    }
    case ExprKind::Endpoint: {
      const Target& t = *e.target;
      if (!t.is_range()) return eval(e.kid(0));
      Int lo = eval_int(t.lo), hi = eval_int(t.hi);
      ScopeGuard g(*this);
      for (Int k = lo; k < hi; ++k) {
        declare(t.binder, Value(k));
        if (!eval_bool(e.kid(0))) return Value(false);
      }
      return Value(true);
    }
    case ExprKind::Chor: return eval(e.kid(0));
    case ExprKind::Confined: return eval_confined(e);
    case ExprKind::Forall: {
      Int lo = eval_int(e.kid(0)), hi = eval_int(e.kid(1));
      ScopeGuard g(*this);
      for (Int k = lo; k < hi; ++k) {
        declare(e.name, Value(k));
        if (!eval_bool(e.kid(2))) return Value(false);
      }
      return Value(true);
    }
    case ExprKind::SeqLit: {
      Seq s;
      for (const auto& k : e.kids) s.push_back(eval(k));
      return Value(std::move(s));
    }
    case ExprKind::SeqLength: return Value(Int(as_seq(eval(e.kid(0)), e.loc).size()));
    case ExprKind::Msg:
    case ExprKind::Sender:
    case ExprKind::Receiver:
      throw RuntimeError("channel placeholder outside a channel invariant", e.loc);
    case ExprKind::MethodCall:
      throw RuntimeError("method call inside an expression", e.loc);
  }
  throw RuntimeError("unknown expression", e.loc);
}

Value Interp::binary(const Expr& e) {
  switch (e.op) {
    case Op::And:
    case Op::Star:
      return Value(eval_bool(e.kid(0)) && eval_bool(e.kid(1)));
    case Op::Or: return Value(eval_bool(e.kid(0)) || eval_bool(e.kid(1)));
    case Op::Implies: return Value(!eval_bool(e.kid(0)) || eval_bool(e.kid(1)));
    default: break;
  }
  Value l = eval(e.kid(0));
  Value r = eval(e.kid(1));
  switch (e.op) {
    case Op::Eq: return Value(l == r);
    case Op::Ne: return Value(!(l == r));
    case Op::Lt: return Value(as_number(l, e.loc) < as_number(r, e.loc));
    case Op::Le: return Value(as_number(l, e.loc) <= as_number(r, e.loc));
    case Op::Gt: return Value(as_number(l, e.loc) > as_number(r, e.loc));
    case Op::Ge: return Value(as_number(l, e.loc) >= as_number(r, e.loc));
    case Op::Frac: {
      const Int& d = as_int(r, e.loc);
      if (d == 0) throw RuntimeError("division by zero", e.loc);
      return Value(Fraction(as_int(l, e.loc), d));
    }
    default: break;
  }
  if (e.op == Op::Add && l.is_seq() && r.is_seq()) {
    Seq s = std::get<Seq>(l.v);
    const Seq& t = std::get<Seq>(r.v);
    s.insert(s.end(), t.begin(), t.end());
    return Value(std::move(s));
  }
  if (l.is_fraction() || r.is_fraction()) {
    Fraction a = as_number(l, e.loc), b = as_number(r, e.loc);
    switch (e.op) {
      case Op::Add: return Value(Fraction(a + b));
      case Op::Sub: return Value(Fraction(a - b));
      case Op::Mul: return Value(Fraction(a * b));
      default: throw RuntimeError("unsupported fraction operator", e.loc);
    }
  }
  const Int& a = as_int(l, e.loc);
  const Int& b = as_int(r, e.loc);
  switch (e.op) {
    case Op::Add: return Value(Int(a + b));
    case Op::Sub: return Value(Int(a - b));
    case Op::Mul: return Value(Int(a * b));
    case Op::Div:
    case Op::Mod:
      if (b == 0) throw RuntimeError("division by zero", e.loc);
      return Value(e.op == Op::Div ? Int(a / b) : Int(a % b));
    default: throw RuntimeError(std::string("unsupported operator ") + op_symbol(e.op), e.loc);
  }
}

Value Interp::call_function(const Expr& e) {
  const FunctionDecl* f = p_.find_function(e.name);
  if (!f) throw RuntimeError("unknown function '" + e.name + "'", e.loc);
  if (!f->body) throw RuntimeError("function '" + e.name + "' has no body", e.loc);
  std::vector<Value> args;
  for (const auto& a : e.kids) args.push_back(eval(a));
  FrameGuard g(*this);
  for (std::size_t k = 0; k < f->params.size() && k < args.size(); ++k)
    declare(f->params[k].name, args[k]);
  for (const auto& pre : f->contract.pre)
    check(eval_bool(pre), "precondition", "precondition of " + e.name, e.loc);
  Value result = eval(f->body);
  declare("\\result", result);
  for (const auto& post : f->contract.post)
    check(eval_bool(post), "postcondition", "postcondition of " + e.name, e.loc);
  return result;
}

void Interp::assign(const ExprPtr& lhs, Value v) {
  switch (lhs->kind) {
    case ExprKind::Var: {
      auto& scopes = frames_.back();
      for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
        auto f = it->find(lhs->name);
        if (f != it->end()) {
          f->second = std::move(v);
          return;
        }
      }
      throw RuntimeError("assignment to undeclared variable '" + lhs->name + "'", lhs->loc);
    }
    case ExprKind::Field: {
      Value obj = eval(lhs->kid(0));
      Object& o = object(obj, lhs->loc);
      on_write(std::get<Ref>(obj.v).id, lhs->name, lhs->loc);
      auto it = o.fields.find(lhs->name);
      if (it == o.fields.end())
        throw RuntimeError("class " + o.class_name + " has no field '" + lhs->name + "'", lhs->loc);
      it->second = std::move(v);
      return;
    }
    case ExprKind::SeqIndex: {
      Seq s = as_seq(eval(lhs->kid(0)), lhs->loc);
      Int k = eval_int(lhs->kid(1));
      if (k < 0 || k >= Int(s.size()))
        throw RuntimeError("index " + k.str() + " out of range", lhs->loc);
      s[k.convert_to<std::size_t>()] = std::move(v);
      assign(lhs->kid(0), Value(std::move(s)));
      return;
    }
    default: throw RuntimeError("not an assignable location: " + pretty(lhs), lhs->loc);
  }
}

void Interp::call_method(const Value& receiver, const std::string& method,
                         const std::vector<Value>& args, Loc loc) {
  Object& o = object(receiver, loc);
  const ClassDecl* cls = p_.find_class(o.class_name);
  const MethodDecl* m = cls ? cls->find_method(method) : nullptr;
  if (!m) throw RuntimeError("class " + o.class_name + " has no method '" + method + "'", loc);
  if (m->params.size() != args.size()) throw RuntimeError("wrong number of arguments", loc);
  FrameGuard g(*this);
  declare("this", receiver);
  for (std::size_t k = 0; k < args.size(); ++k) declare(m->params[k].name, args[k]);
  for (const auto& pre : m->contract.pre)
    check(eval_bool(pre), "precondition", "precondition of " + method, loc);
  exec_block(m->body);
  for (const auto& post : m->contract.post)
    check(eval_bool(post), "postcondition", "postcondition of " + method, loc);
}

void Interp::construct(std::uint64_t id, const std::vector<Value>& args, Loc loc) {
  Object& o = heap_.objects.at(id);
  const ClassDecl* cls = p_.find_class(o.class_name);
  if (!cls) throw RuntimeError("unknown class '" + o.class_name + "'", loc);
  for (const auto& f : cls->fields) o.fields[f.name] = default_value(f.type);
  if (!cls->constructor) {
    if (!args.empty()) throw RuntimeError("class " + cls->name + " has no constructor", loc);
    return;
  }
  const MethodDecl& m = *cls->constructor;
  if (m.params.size() != args.size()) throw RuntimeError("wrong number of constructor arguments", loc);
  FrameGuard g(*this);
  declare("this", Value(Ref{id}));
  for (std::size_t k = 0; k < args.size(); ++k) declare(m.params[k].name, args[k]);
  for (const auto& pre : m.contract.pre)
    check(eval_bool(pre), "precondition", "precondition of constructor " + cls->name, loc);
  exec_block(m.body);
  for (const auto& post : m.contract.post)
    check(eval_bool(post), "postcondition", "postcondition of constructor " + cls->name, loc);
}

void Interp::exec_block(const Block& b) {
  ScopeGuard g(*this);
  for (const auto& s : b) exec(s);
}

void Interp::exec_while(const WhileStmt& w, Loc loc) {
  while (eval_bool(w.cond)) {
    tick(loc);
    exec_block(w.body);
  }
}

void Interp::exec_special(const Stmt& s) {
  throw RuntimeError("statement not executable in this mode", s.loc);
}

void Interp::exec(const Stmt& s) {
  tick(s.loc);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AssignStmt>) {
          assign(n.lhs, eval(n.rhs));
        } else if constexpr (std::is_same_v<T, DeclStmt>) {
          declare(n.name, n.init ? eval(n.init) : default_value(n.type));
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          Value recv = eval(n.receiver);
          std::vector<Value> args;
          for (const auto& a : n.args) args.push_back(eval(a));
          call_method(recv, n.method, args, s.loc);
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          exec_block(eval_bool(n.cond) ? n.then_branch : n.else_branch);
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          exec_while(n, s.loc);
        } else if constexpr (std::is_same_v<T, AssertStmt>) {
          check(eval_bool(n.expr), n.check.empty() ? "assert" : n.check, pretty(n.expr), s.loc);
        } else if constexpr (std::is_same_v<T, BlockStmt>) {
          exec_block(n.body);
        } else {
          exec_special(s);
        }
      },
      s.node);
}

// ---------------------------------------------------------------------------

namespace {

/// Setup runs constructors with contracts raised as errors.
class SetupInterp : public Interp {
 public:
  using Interp::Interp;

 protected:
  void check(bool ok, const std::string& label, const std::string& what, Loc loc) override {
    if (!ok) throw AssertionFailure(label + " failed: " + what, loc);
  }
};

}  // namespace

Heap setup(const Program& p, const Params& params) {
  const Choreography* c = p.choreography();
  if (!c) throw RuntimeError("program has no choreography");
  for (const auto& prm : c->params)
    if (!params.count(prm.name))
      throw RuntimeError("missing value for parameter '" + prm.name + "'", c->loc);
  Heap heap;
  std::uint64_t next = 1;
  for (const auto& ep : c->endpoints) {
    struct Pending {
      std::uint64_t id;
      std::vector<Value> args;
    };
    std::vector<Pending> pending;
    {
      SetupInterp in(p, heap, params);
      if (!ep.is_family()) {
        std::vector<Value> args;
        for (const auto& a : ep.args) args.push_back(in.eval(a));
        heap.objects[next] = Object{ep.class_name, {ep.name, 0}, {}};
        heap.endpoints[ep.name] = Value(Ref{next});
        pending.push_back({next++, std::move(args)});
      } else {
        std::int64_t n = in.eval_index(ep.size);
        if (n < 0) throw RuntimeError("family " + ep.name + " has negative size", ep.loc);
        Seq members;
        for (std::int64_t k = 0; k < n; ++k) {
          in.push_scope();
          in.declare(ep.binder, Value(Int(k)));
          std::vector<Value> args;
          for (const auto& a : ep.args) args.push_back(in.eval(a));
          in.pop_scope();
          heap.objects[next] = Object{ep.class_name, {ep.name, k}, {}};
          members.push_back(Value(Ref{next}));
          pending.push_back({next++, std::move(args)});
        }
        heap.endpoints[ep.name] = Value(std::move(members));
      }
    }
    SetupInterp in(p, heap, params);
    for (const auto& pend : pending) in.construct(pend.id, pend.args, ep.loc);
  }
  return heap;
}

}  // namespace chorcc::rt

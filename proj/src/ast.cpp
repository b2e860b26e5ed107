#include "chorcc/ast.hpp"

#include <algorithm>
#include <set>

namespace chorcc {

std::string Type::str() const {
  if (name == "seq") return "seq<" + (args.empty() ? std::string("int") : args[0].str()) + ">";
  return name;
}

const char* op_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Mod: return "%";
    case Op::Frac: return "\\";
    case Op::And: return "&&";
    case Op::Or: return "||";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Implies: return "==>";
    case Op::Star: return "**";
    case Op::Not: return "!";
    case Op::Neg: return "-";
  }
  return "?";
}

Target Target::singular(std::string name, Loc loc) {
  Target t;
  t.kind = Kind::Singular;
  t.name = std::move(name);
  t.loc = loc;
  return t;
}

Target Target::indexed(std::string family, ExprPtr index, Loc loc) {
  Target t;
  t.kind = Kind::FamilyIndex;
  t.name = std::move(family);
  t.index = std::move(index);
  t.loc = loc;
  return t;
}

Target Target::range(std::string family, std::string binder, ExprPtr lo, ExprPtr hi, Loc loc) {
  Target t;
  t.kind = Kind::FamilyRange;
  t.name = std::move(family);
  t.binder = std::move(binder);
  t.lo = std::move(lo);
  t.hi = std::move(hi);
  t.loc = loc;
  return t;
}

namespace {

Purity max_kids(const std::vector<ExprPtr>& kids, Purity floor = Purity::Pure) {
  Purity p = floor;
  for (const auto& k : kids)
    if (k && k->purity > p) p = k->purity;
  return p;
}

ExprPtr finish(Expr e) {
  switch (e.kind) {
    case ExprKind::Field:
    case ExprKind::This:
    case ExprKind::MethodCall:
      e.purity = max_kids(e.kids, Purity::Heap);
      break;
    case ExprKind::Perm:
    case ExprKind::PredApply:
      e.purity = Purity::Resource;
      break;
    case ExprKind::Binary:
      e.purity = max_kids(e.kids, e.op == Op::Star ? Purity::Resource : Purity::Pure);
      break;
    case ExprKind::Call:
      e.purity = max_kids(e.kids, e.purity);
      break;
    default:
      e.purity = max_kids(e.kids);
      break;
  }
  return std::make_shared<const Expr>(std::move(e));
}

Expr node(ExprKind k, Loc loc) {
  Expr e;
  e.kind = k;
  e.loc = loc;
  return e;
}

}  // namespace

namespace ex {

ExprPtr var(std::string name, Loc loc) {
  auto e = node(ExprKind::Var, loc);
  e.name = std::move(name);
  return finish(std::move(e));
}

ExprPtr int_lit(Int v, Loc loc) {
  auto e = node(ExprKind::IntLit, loc);
  e.value = std::move(v);
  return finish(std::move(e));
}

ExprPtr boolean(bool v, Loc loc) {
  auto e = node(ExprKind::BoolLit, loc);
  e.flag = v;
  return finish(std::move(e));
}

ExprPtr field(ExprPtr obj, std::string f, Loc loc) {
  auto e = node(ExprKind::Field, loc);
  e.name = std::move(f);
  e.kids = {std::move(obj)};
  return finish(std::move(e));
}

ExprPtr index(ExprPtr seq, ExprPtr idx, Loc loc) {
  auto e = node(ExprKind::SeqIndex, loc);
  e.kids = {std::move(seq), std::move(idx)};
  return finish(std::move(e));
}

ExprPtr unary(Op op, ExprPtr x, Loc loc) {
  auto e = node(ExprKind::Unary, loc);
  e.op = op;
  e.kids = {std::move(x)};
  return finish(std::move(e));
}

ExprPtr binary(Op op, ExprPtr l, ExprPtr r, Loc loc) {
  auto e = node(ExprKind::Binary, loc);
  e.op = op;
  e.kids = {std::move(l), std::move(r)};
  return finish(std::move(e));
}

ExprPtr call(std::string fn, std::vector<ExprPtr> args, Purity level, Loc loc) {
  auto e = node(ExprKind::Call, loc);
  e.name = std::move(fn);
  e.kids = std::move(args);
  e.purity = level;
  return finish(std::move(e));
}

ExprPtr pred(std::string p, std::vector<ExprPtr> args, Loc loc) {
  auto e = node(ExprKind::PredApply, loc);
  e.name = std::move(p);
  e.kids = std::move(args);
  return finish(std::move(e));
}

ExprPtr method_call(ExprPtr recv, std::string m, std::vector<ExprPtr> args, Loc loc) {
  auto e = node(ExprKind::MethodCall, loc);
  e.name = std::move(m);
  e.kids.push_back(std::move(recv));
  for (auto& a : args) e.kids.push_back(std::move(a));
  return finish(std::move(e));
}

ExprPtr this_(Loc loc) { return finish(node(ExprKind::This, loc)); }

ExprPtr perm(ExprPtr location, ExprPtr amount, Loc loc) {
  auto e = node(ExprKind::Perm, loc);
  e.kids = {std::move(location), std::move(amount)};
  return finish(std::move(e));
}

ExprPtr endpoint(Target t, ExprPtr body, Loc loc) {
  auto e = node(ExprKind::Endpoint, loc);
  e.target = std::move(t);
  e.kids = {std::move(body)};
  return finish(std::move(e));
}

ExprPtr chor(ExprPtr body, Loc loc) {
  auto e = node(ExprKind::Chor, loc);
  e.kids = {std::move(body)};
  return finish(std::move(e));
}

ExprPtr placeholder(ExprKind k, Loc loc) { return finish(node(k, loc)); }

ExprPtr forall(Type t, std::string binder, ExprPtr lo, ExprPtr hi, ExprPtr body, Loc loc) {
  auto e = node(ExprKind::Forall, loc);
  e.type = std::move(t);
  e.name = std::move(binder);
  e.kids = {std::move(lo), std::move(hi), std::move(body)};
  return finish(std::move(e));
}

ExprPtr seq_lit(Type elem, std::vector<ExprPtr> elems, Loc loc) {
  auto e = node(ExprKind::SeqLit, loc);
  e.type = std::move(elem);
  e.kids = std::move(elems);
  return finish(std::move(e));
}

ExprPtr seq_len(ExprPtr seq, Loc loc) {
  auto e = node(ExprKind::SeqLength, loc);
  e.kids = {std::move(seq)};
  return finish(std::move(e));
}

ExprPtr confined(Target t, ExprPtr body, Loc loc) {
  auto e = node(ExprKind::Confined, loc);
  e.target = std::move(t);
  e.kids = {std::move(body)};
  return finish(std::move(e));
}

ExprPtr and_(ExprPtr l, ExprPtr r) {
  if (l->is_true()) return r;
  if (r->is_true()) return l;
  return binary(Op::And, std::move(l), std::move(r));
}

ExprPtr star(ExprPtr l, ExprPtr r) {
  if (l->is_true()) return r;
  if (r->is_true()) return l;
  return binary(Op::Star, std::move(l), std::move(r));
}

ExprPtr implies(ExprPtr l, ExprPtr r) {
  if (r->is_true()) return r;
  return binary(Op::Implies, std::move(l), std::move(r));
}

ExprPtr conj(const std::vector<ExprPtr>& parts, Op joiner) {
  ExprPtr acc = boolean(true);
  for (const auto& p : parts) acc = joiner == Op::Star ? star(acc, p) : and_(acc, p);
  return acc;
}

ExprPtr target_ref(const Target& t) {
  switch (t.kind) {
    case Target::Kind::Singular:
      return var(t.name, t.loc);
    case Target::Kind::FamilyIndex:
      return index(var(t.name, t.loc), t.index, t.loc);
    case Target::Kind::FamilyRange:
      return index(var(t.name, t.loc), var(t.binder, t.loc), t.loc);
  }
  return nullptr;
}

}  // namespace ex

std::vector<ExprPtr> flatten(const ExprPtr& e, Op joiner) {
  std::vector<ExprPtr> out;
  if (e->kind == ExprKind::Binary && e->op == joiner) {
    for (const auto& k : e->kids) {
      auto sub = flatten(k, joiner);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else {
    out.push_back(e);
  }
  return out;
}

bool same(const Target& a, const Target& b) {
  return a.kind == b.kind && a.name == b.name && a.binder == b.binder && same(a.index, b.index) &&
         same(a.lo, b.lo) && same(a.hi, b.hi);
}

bool same(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->op != b->op || a->name != b->name || !(a->type == b->type) ||
      a->value != b->value || a->flag != b->flag || a->kids.size() != b->kids.size())
    return false;
  if (a->target.has_value() != b->target.has_value()) return false;
  if (a->target && !same(*a->target, *b->target)) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!same(a->kids[i], b->kids[i])) return false;
  return true;
}

namespace {

ExprPtr rebuild(const ExprPtr& e, std::vector<ExprPtr> kids, std::optional<Target> target) {
  bool changed = target.has_value() != e->target.has_value();
  for (std::size_t i = 0; !changed && i < kids.size(); ++i) changed = kids[i] != e->kids[i];
  if (!changed && target && e->target)
    changed = target->index != e->target->index || target->lo != e->target->lo ||
              target->hi != e->target->hi;
  if (!changed) return e;
  Expr copy = *e;
  copy.kids = std::move(kids);
  copy.target = std::move(target);
  return finish(std::move(copy));
}

template <class Fn>
ExprPtr map_expr(const ExprPtr& e, const Fn& fn);

template <class Fn>
Target map_target(const Target& t, const Fn& fn) {
  Target out = t;
  if (t.index) out.index = map_expr(t.index, fn);
  if (t.lo) out.lo = map_expr(t.lo, fn);
  if (t.hi) out.hi = map_expr(t.hi, fn);
  return out;
}

// fn returns a replacement or null to recurse.
template <class Fn>
ExprPtr map_expr(const ExprPtr& e, const Fn& fn) {
  if (!e) return e;
  if (auto r = fn(e)) return r;
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  for (const auto& k : e->kids) kids.push_back(map_expr(k, fn));
  std::optional<Target> target;
  if (e->target) target = map_target(*e->target, fn);
  return rebuild(e, std::move(kids), std::move(target));
}

}  // namespace

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& sub) {
  if (!e || sub.empty()) return e;
  if (e->kind == ExprKind::Var) {
    auto it = sub.find(e->name);
    return it == sub.end() ? e : it->second;
  }
  if (e->kind == ExprKind::Forall) {
    auto inner = sub;
    inner.erase(e->name);
    return rebuild(e,
                   {substitute(e->kids[0], sub), substitute(e->kids[1], sub),
                    substitute(e->kids[2], inner)},
                   std::nullopt);
  }
  std::vector<ExprPtr> kids;
  for (const auto& k : e->kids) kids.push_back(substitute(k, sub));
  std::optional<Target> target;
  if (e->target) {
    target = substitute(*e->target, sub);
    if (e->kind == ExprKind::Endpoint && e->target->is_range()) {
      // the range binder scopes over the body
      auto inner = sub;
      inner.erase(e->target->binder);
      kids = {substitute(e->kids[0], inner)};
    }
  }
  return rebuild(e, std::move(kids), std::move(target));
}

Target substitute(const Target& t, const std::map<std::string, ExprPtr>& sub) {
  Target out = t;
  out.index = substitute(t.index, sub);
  out.lo = substitute(t.lo, sub);
  out.hi = substitute(t.hi, sub);
  return out;
}

ExprPtr replace_this(const ExprPtr& e, const ExprPtr& receiver) {
  return map_expr(e, [&](const ExprPtr& n) -> ExprPtr {
    return n->kind == ExprKind::This ? receiver : nullptr;
  });
}

ExprPtr replace_placeholders(const ExprPtr& e, const ExprPtr& msg, const ExprPtr& sender,
                             const ExprPtr& receiver) {
  return map_expr(e, [&](const ExprPtr& n) -> ExprPtr {
    switch (n->kind) {
      case ExprKind::Msg: return msg;
      case ExprKind::Sender: return sender;
      case ExprKind::Receiver: return receiver;
      default: return nullptr;
    }
  });
}

namespace {

void collect_free(const ExprPtr& e, std::set<std::string>& bound, std::vector<std::string>& out);

void collect_free_target(const Target& t, std::set<std::string>& bound,
                         std::vector<std::string>& out) {
  for (const auto* k : {&t.index, &t.lo, &t.hi})
    if (*k) collect_free(*k, bound, out);
}

void collect_free(const ExprPtr& e, std::set<std::string>& bound, std::vector<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::Var) {
    if (!bound.count(e->name) && std::find(out.begin(), out.end(), e->name) == out.end())
      out.push_back(e->name);
    return;
  }
  if (e->kind == ExprKind::Forall) {
    collect_free(e->kids[0], bound, out);
    collect_free(e->kids[1], bound, out);
    bool fresh = bound.insert(e->name).second;
    collect_free(e->kids[2], bound, out);
    if (fresh) bound.erase(e->name);
    return;
  }
  if (e->target) {
    collect_free_target(*e->target, bound, out);
    if (!bound.count(e->target->name) &&
        std::find(out.begin(), out.end(), e->target->name) == out.end())
      out.push_back(e->target->name);
    if (e->target->is_range()) {
      bool fresh = bound.insert(e->target->binder).second;
      for (const auto& k : e->kids) collect_free(k, bound, out);
      if (fresh) bound.erase(e->target->binder);
      return;
    }
  }
  for (const auto& k : e->kids) collect_free(k, bound, out);
}

}  // namespace

std::vector<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> bound;
  std::vector<std::string> out;
  collect_free(e, bound, out);
  return out;
}

const FieldDecl* ClassDecl::find_field(const std::string& n) const {
  for (const auto& f : fields)
    if (f.name == n) return &f;
  return nullptr;
}

const MethodDecl* ClassDecl::find_method(const std::string& n) const {
  for (const auto& m : methods)
    if (m.name == n) return &m;
  return nullptr;
}

const EndpointDecl* Choreography::find_endpoint(const std::string& n) const {
  for (const auto& e : endpoints)
    if (e.name == n) return &e;
  return nullptr;
}

const Choreography* Program::choreography() const {
  for (const auto& d : decls)
    if (const auto* c = std::get_if<Choreography>(&d)) return c;
  return nullptr;
}

const ClassDecl* Program::find_class(const std::string& n) const {
  for (const auto& d : decls)
    if (const auto* c = std::get_if<ClassDecl>(&d); c && c->name == n) return c;
  return nullptr;
}

const FunctionDecl* Program::find_function(const std::string& n) const {
  for (const auto& d : decls)
    if (const auto* f = std::get_if<FunctionDecl>(&d); f && f->name == n) return f;
  return nullptr;
}

const PredicateDecl* Program::find_predicate(const std::string& n) const {
  for (const auto& d : decls)
    if (const auto* p = std::get_if<PredicateDecl>(&d); p && p->name == n) return p;
  return nullptr;
}

}  // namespace chorcc

namespace chorcc {

namespace {

ExprPtr apply(const ExprMap& fn, const ExprPtr& e) { return e ? fn(e) : e; }

std::vector<ExprPtr> apply_all(const ExprMap& fn, const std::vector<ExprPtr>& v) {
  std::vector<ExprPtr> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(apply(fn, e));
  return out;
}

Contract map_contract(const Contract& c, const ExprMap& fn) {
  return {apply_all(fn, c.pre), apply_all(fn, c.post)};
}

ChannelRef map_channel(const ChannelRef& c, const ExprMap& fn) {
  return {c.site, apply(fn, c.sender_index), apply(fn, c.receiver_index)};
}

}  // namespace

Target map_target_exprs(const Target& t, const ExprMap& fn) {
  Target out = t;
  out.index = apply(fn, t.index);
  out.lo = apply(fn, t.lo);
  out.hi = apply(fn, t.hi);
  return out;
}

Block map_exprs(const Block& b, const ExprMap& fn) {
  Block out;
  out.reserve(b.size());
  for (const auto& s : b) out.push_back(map_exprs(s, fn));
  return out;
}

Stmt map_exprs(const Stmt& s, const ExprMap& fn) {
  auto node = std::visit(
      [&](const auto& n) -> decltype(Stmt::node) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AssignStmt>) {
          return AssignStmt{apply(fn, n.lhs), apply(fn, n.rhs)};
        } else if constexpr (std::is_same_v<T, DeclStmt>) {
          return DeclStmt{n.type, n.name, apply(fn, n.init)};
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          return CallStmt{apply(fn, n.receiver), n.method, apply_all(fn, n.args), n.adapted};
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          return IfStmt{apply(fn, n.cond), map_exprs(n.then_branch, fn),
                        map_exprs(n.else_branch, fn)};
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          return WhileStmt{apply(fn, n.invariant), apply(fn, n.cond), map_exprs(n.body, fn)};
        } else if constexpr (std::is_same_v<T, AssertStmt>) {
          return AssertStmt{apply(fn, n.expr), n.check};
        } else if constexpr (std::is_same_v<T, InhaleStmt>) {
          return InhaleStmt{apply(fn, n.expr)};
        } else if constexpr (std::is_same_v<T, ExhaleStmt>) {
          return ExhaleStmt{apply(fn, n.expr)};
        } else if constexpr (std::is_same_v<T, BlockStmt>) {
          return BlockStmt{map_exprs(n.body, fn)};
        } else if constexpr (std::is_same_v<T, ParStmt>) {
          return ParStmt{n.binder, apply(fn, n.lo), apply(fn, n.hi), map_contract(n.contract, fn),
                         map_exprs(n.body, fn)};
        } else if constexpr (std::is_same_v<T, ConfinedStmt>) {
          return ConfinedStmt{map_target_exprs(n.target, fn), map_exprs(n.body, fn)};
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          return SendStmt{map_channel(n.channel, fn), apply(fn, n.value)};
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          return RecvStmt{map_channel(n.channel, fn), apply(fn, n.location)};
        } else {
          return NewEndpointStmt{n.name, n.binder, apply(fn, n.size), n.class_name,
                                 apply_all(fn, n.args)};
        }
      },
      s.node);
  return Stmt{std::move(node), s.loc};
}

ChorBlock map_exprs(const ChorBlock& b, const ExprMap& fn) {
  ChorBlock out;
  out.reserve(b.size());
  for (const auto& s : b) out.push_back(map_exprs(s, fn));
  return out;
}

ChorStmt map_exprs(const ChorStmt& s, const ExprMap& fn) {
  auto node = std::visit(
      [&](const auto& n) -> decltype(ChorStmt::node) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ChorIf>) {
          return ChorIf{apply(fn, n.cond), map_exprs(n.then_branch, fn),
                        map_exprs(n.else_branch, fn)};
        } else if constexpr (std::is_same_v<T, ChorWhile>) {
          return ChorWhile{apply(fn, n.invariant), apply(fn, n.cond), map_exprs(n.body, fn)};
        } else if constexpr (std::is_same_v<T, ChorAssert>) {
          return ChorAssert{apply(fn, n.expr)};
        } else if constexpr (std::is_same_v<T, EndpointAssign>) {
          return EndpointAssign{map_target_exprs(n.target, fn), apply(fn, n.location),
                                apply(fn, n.value)};
        } else if constexpr (std::is_same_v<T, EndpointCall>) {
          return EndpointCall{map_target_exprs(n.target, fn), apply(fn, n.receiver), n.method,
                              apply_all(fn, n.args)};
        } else {
          return Communicate{apply(fn, n.invariant), map_target_exprs(n.sender, fn),
                             apply(fn, n.message), map_target_exprs(n.receiver, fn),
                             apply(fn, n.destination)};
        }
      },
      s.node);
  return ChorStmt{std::move(node), s.loc};
}

void for_each_expr(const Stmt& s, const ExprVisit& fn) {
  map_exprs(s, [&](const ExprPtr& e) {
    fn(e);
    return e;
  });
}

void for_each_expr(const ChorStmt& s, const ExprVisit& fn) {
  map_exprs(s, [&](const ExprPtr& e) {
    fn(e);
    return e;
  });
}

}  // namespace chorcc

namespace chorcc {
ExprPtr rewrite(const ExprPtr& e, const ExprMap& fn) { return map_expr(e, fn); }
}  // namespace chorcc

#include "chorcc/chor_projection.hpp"

#include <functional>
#include <map>
#include <set>

#include "chorcc/frontend.hpp"
#include "chorcc/syntax.hpp"

namespace chorcc {

namespace {

void note(RuleTrace* trace, const char* rule) {
  if (trace) trace->push_back(rule);
}

ExprPtr eq(ExprPtr a, ExprPtr b) { return ex::binary(Op::Eq, std::move(a), std::move(b)); }
ExprPtr ne(ExprPtr a, ExprPtr b) { return ex::binary(Op::Ne, std::move(a), std::move(b)); }
ExprPtr le(ExprPtr a, ExprPtr b) { return ex::binary(Op::Le, std::move(a), std::move(b)); }
ExprPtr lt(ExprPtr a, ExprPtr b) { return ex::binary(Op::Lt, std::move(a), std::move(b)); }

ExprPtr in_range(const ExprPtr& j, const Target& range) {
  return ex::binary(Op::And, le(range.lo, j), lt(j, range.hi));
}

/// Index expression of a singular-or-indexed confinement target.
ExprPtr index_of(const Target& t) { return t.is_indexed() ? t.index : nullptr; }

void collect_names(const ExprPtr& e, std::set<std::string>& out) {
  any_node(e, [&](const Expr& n) {
    if (!n.name.empty()) out.insert(n.name);
    if (n.target) {
      out.insert(n.target->name);
      if (!n.target->binder.empty()) out.insert(n.target->binder);
    }
    return false;
  });
}

/// Generates names not occurring anywhere in a set of expressions.
class Fresh {
 public:
  void avoid(const ExprPtr& e) { collect_names(e, used_); }
  void avoid(const std::string& n) { used_.insert(n); }
  std::string operator()(const std::string& base) {
    for (int k = 0;; ++k) {
      std::string n = base + std::to_string(k);
      if (used_.insert(n).second) return n;
    }
  }

 private:
  std::set<std::string> used_;
};

ExprPtr cp_conjunct(const ExprPtr& leaf, const std::optional<Target>& confine, bool resource,
                    RuleTrace* trace) {
  if (leaf->kind == ExprKind::Chor) {
    if (!resource) throw UnsupportedSyntax("\\chor is not allowed in conditions", leaf->loc);
    return leaf->kid(0);
  }
  if (leaf->kind != ExprKind::Endpoint) return leaf;
  const Target& alpha = *leaf->target;
  const ExprPtr& body = leaf->kid(0);
  if (any_node(body, [](const Expr& n) { return n.kind == ExprKind::Endpoint; }))
    throw UnsupportedSyntax("nested endpoint expression", leaf->loc);
  if (!confine) {
    if (!alpha.is_range()) {
      note(trace, "CpExpr");
      return ex::confined(alpha, body, leaf->loc);
    }
    note(trace, "CpExprRange");
    auto member = Target::indexed(alpha.name, ex::var(alpha.binder), alpha.loc);
    return ex::forall(Type::integer(), alpha.binder, alpha.lo, alpha.hi,
                      ex::confined(member, body, leaf->loc), leaf->loc);
  }
  if (covers(alpha, *confine) == Coverage::No) {
    note(trace, "CpExprSkip");
    return ex::boolean(true);
  }
  if (alpha.is_singular()) {
    note(trace, "CpExpr");
    return body;
  }
  ExprPtr j = index_of(*confine);
  note(trace, "CpExprIndex");
  if (alpha.is_indexed()) return ex::implies(eq(j, alpha.index), body);
  return ex::implies(in_range(j, alpha), substitute(body, {{alpha.binder, j}}));
}

ExprPtr project_resource(const ExprPtr& r, RuleTrace* trace) {
  if (r->kind == ExprKind::Binary &&
      (r->op == Op::Star || r->op == Op::And || r->op == Op::Implies)) {
    auto rhs = project_resource(r->kid(1), trace);
    if (r->op == Op::Implies) return ex::implies(r->kid(0), rhs);
    auto lhs = project_resource(r->kid(0), trace);
    return r->op == Op::Star ? ex::star(lhs, rhs) : ex::and_(lhs, rhs);
  }
  return cp_conjunct(r, std::nullopt, true, trace);
}

ExprPtr project_conjunction(const ExprPtr& h, const std::optional<Target>& confine,
                            bool resource, RuleTrace* trace) {
  if (resource && !confine) return project_resource(h, trace);
  std::vector<ExprPtr> parts;
  for (const auto& leaf : flatten(h, Op::And))
    parts.push_back(cp_conjunct(leaf, confine, resource, trace));
  return ex::conj(parts, resource ? Op::Star : Op::And);
}

std::vector<Target> participants(const ExprPtr& h) {
  std::vector<Target> out;
  for (const auto& leaf : flatten(h, Op::And)) {
    if (leaf->kind != ExprKind::Endpoint) continue;
    bool dup = false;
    for (const auto& t : out) dup = dup || same(t, *leaf->target);
    if (!dup) out.push_back(*leaf->target);
  }
  return out;
}

}  // namespace

ExprPtr cp_expr(const ExprPtr& h, const std::optional<Target>& confine, RuleTrace* trace) {
  return project_conjunction(h, confine, false, trace);
}

ExprPtr cp_resource(const ExprPtr& r, RuleTrace* trace) {
  return project_conjunction(r, std::nullopt, true, trace);
}

ExprPtr unanimous(const ExprPtr& h, RuleTrace* trace) {
  Fresh fresh;
  fresh.avoid(h);
  auto ps = participants(h);

  // Value of the condition as seen by participant `p`, evaluated at its owner.
  auto view = [&](const Target& p, const ExprPtr& idx) {
    Target at = p.is_range() ? Target::indexed(p.name, idx, p.loc) : p;
    return ex::confined(at, cp_expr(h, at, trace));
  };

  std::vector<ExprPtr> parts;
  for (std::size_t a = 0; a < ps.size(); ++a) {
    for (std::size_t b = a; b < ps.size(); ++b) {
      const Target& pa = ps[a];
      const Target& pb = ps[b];
      if (a == b && !pa.is_range()) continue;
      std::string qa = pa.is_range() ? fresh("u") : "";
      std::string qb = pb.is_range() ? fresh("u") : "";
      ExprPtr e = eq(view(pa, qa.empty() ? nullptr : ex::var(qa)),
                     view(pb, qb.empty() ? nullptr : ex::var(qb)));
      if (pb.is_range()) e = ex::forall(Type::integer(), qb, pb.lo, pb.hi, e);
      if (pa.is_range()) e = ex::forall(Type::integer(), qa, pa.lo, pa.hi, e);
      parts.push_back(e);
    }
  }
  return ex::conj(parts);
}

ExprPtr injectivity(const std::string& binder, const ExprPtr& lo, const ExprPtr& hi,
                    const ExprPtr& d) {
  Fresh fresh;
  fresh.avoid(d);
  fresh.avoid(lo);
  fresh.avoid(hi);
  fresh.avoid(binder);
  std::string other = fresh(binder);
  auto d2 = substitute(d, {{binder, ex::var(other)}});
  auto body = ex::implies(ne(ex::var(binder), ex::var(other)), ne(d, d2));
  return ex::forall(Type::integer(), binder, lo, hi,
                    ex::forall(Type::integer(), other, lo, hi, body));
}

std::vector<const ChorStmt*> communicate_sites(const ChorBlock& run) {
  std::vector<const ChorStmt*> out;
  std::function<void(const ChorBlock&)> walk = [&](const ChorBlock& b) {
    for (const auto& s : b) {
      if (s.as<Communicate>()) out.push_back(&s);
      if (const auto* i = s.as<ChorIf>()) {
        walk(i->then_branch);
        walk(i->else_branch);
      }
      if (const auto* w = s.as<ChorWhile>()) walk(w->body);
    }
  };
  walk(run);
  return out;
}

namespace {

struct Footprint {
  std::set<std::string> reads, writes;
};

void method_footprint(const ClassDecl& cls, const MethodDecl& m, Footprint& fp,
                      std::set<std::string>& visited) {
  if (!visited.insert(m.name).second) return;
  auto reads = [&](const ExprPtr& e) {
    any_node(e, [&](const Expr& n) {
      if (n.kind == ExprKind::Field && n.kid(0)->kind == ExprKind::This) fp.reads.insert(n.name);
      return false;
    });
  };
  std::function<void(const Block&)> walk = [&](const Block& b) {
    for (const auto& s : b) {
      if (const auto* a = s.as<AssignStmt>()) {
        if (a->lhs->kind == ExprKind::Field && a->lhs->kid(0)->kind == ExprKind::This)
          fp.writes.insert(a->lhs->name);
        else
          reads(a->lhs);
        reads(a->rhs);
      } else if (const auto* c = s.as<CallStmt>()) {
        for (const auto& x : c->args) reads(x);
        if (c->receiver->kind == ExprKind::This) {
          if (const auto* callee = cls.find_method(c->method))
            method_footprint(cls, *callee, fp, visited);
        }
      } else if (const auto* i = s.as<IfStmt>()) {
        reads(i->cond);
        walk(i->then_branch);
        walk(i->else_branch);
      } else if (const auto* w = s.as<WhileStmt>()) {
        reads(w->cond);
        walk(w->body);
      } else if (const auto* blk = s.as<BlockStmt>()) {
        walk(blk->body);
      } else if (const auto* d = s.as<DeclStmt>()) {
        if (d->init) reads(d->init);
      } else if (const auto* as = s.as<AssertStmt>()) {
        reads(as->expr);
      }
    }
  };
  walk(m.body);
}

ExprPtr frac(int num, int den) {
  if (den == 1) return ex::int_lit(num);
  return ex::binary(Op::Frac, ex::int_lit(num), ex::int_lit(den));
}

ExprPtr owned_perm(const Target& owner, const std::string& field, ExprPtr amount) {
  return ex::confined(owner, ex::perm(ex::field(ex::target_ref(owner), field), std::move(amount)));
}

bool is_field_of(const ExprPtr& e, const std::string& family, const ExprPtr& index) {
  return e->kind == ExprKind::Field && e->kid(0)->kind == ExprKind::SeqIndex &&
         e->kid(0)->kid(0)->kind == ExprKind::Var && e->kid(0)->kid(0)->name == family &&
         same(e->kid(0)->kid(1), index);
}

class Projector {
 public:
  Projector(const Program& p, const Choreography& c) : p_(p), c_(c) {
    for (const auto& prm : c.params) fresh_.avoid(prm.name);
    for (const auto& ep : c.endpoints) {
      fresh_.avoid(ep.name);
      fresh_.avoid(ep.binder);
    }
    std::function<void(const ChorBlock&)> walk = [&](const ChorBlock& b) {
      for (const auto& s : b) {
        for_each_expr(s, [&](const ExprPtr& e) { fresh_.avoid(e); });
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, ChorIf>) {
                walk(n.then_branch);
                walk(n.else_branch);
              } else if constexpr (std::is_same_v<T, ChorWhile>) {
                walk(n.body);
              }
            },
            s.node);
      }
    };
    walk(c.run);
    auto sites = communicate_sites(c.run);
    for (std::size_t k = 0; k < sites.size(); ++k) site_of_[sites[k]] = static_cast<int>(k);
  }

  RuleTrace trace;

  Block block(const ChorBlock& b) {
    Block out;
    for (const auto& s : b) out.push_back(stmt(s));
    return out;
  }

  Stmt stmt(const ChorStmt& s) {
    reject_quantified_permissions(s);
    return std::visit([&](const auto& n) { return project(n, s); }, s.node);
  }

 private:
  void reject_quantified_permissions(const ChorStmt& s) {
    for_each_expr(s, [&](const ExprPtr& e) {
      any_node(e, [&](const Expr& n) {
        if (n.kind == ExprKind::Forall &&
            any_node(n.kid(2), [](const Expr& m) { return m.kind == ExprKind::Perm; }))
          throw UnsupportedSyntax("quantified permissions are not supported", n.loc);
        return false;
      });
    });
  }

  Stmt project(const ChorIf& n, const ChorStmt& s) {
    note(&trace, "CpIf");
    Block out;
    out.push_back(make_stmt(AssertStmt{unanimous(n.cond, &trace), "unanimity"}, s.loc));
    out.push_back(make_stmt(
        IfStmt{cp_expr(n.cond, std::nullopt, &trace), block(n.then_branch), block(n.else_branch)},
        s.loc));
    return make_stmt(BlockStmt{std::move(out)}, s.loc);
  }

  Stmt project(const ChorWhile& n, const ChorStmt& s) {
    note(&trace, "CpWhile");
    auto agree = unanimous(n.cond, &trace);
    Block body = block(n.body);
    body.push_back(make_stmt(AssertStmt{agree, "unanimity"}, s.loc));
    Block out;
    out.push_back(make_stmt(AssertStmt{agree, "unanimity"}, s.loc));
    out.push_back(make_stmt(WhileStmt{n.invariant ? cp_resource(n.invariant, &trace) : nullptr,
                                      cp_expr(n.cond, std::nullopt, &trace), std::move(body)},
                            s.loc));
    return make_stmt(BlockStmt{std::move(out)}, s.loc);
  }

  Stmt project(const ChorAssert& n, const ChorStmt& s) {
    return make_stmt(AssertStmt{cp_resource(n.expr, &trace), "assert"}, s.loc);
  }

  Stmt project(const EndpointAssign& n, const ChorStmt& s) {
    if (n.target.is_range())
      throw UnsupportedSyntax(
          "assignments on a family range have no projection; define a method on the endpoint "
          "that only writes to the field and call it on the range instead",
          s.loc);
    note(&trace, "CpAssign");
    return confined(n.target, {make_stmt(AssignStmt{n.location, n.value}, s.loc)}, s.loc);
  }

  Stmt project(const EndpointCall& n, const ChorStmt& s) {
    if (!n.target.is_range()) {
      note(&trace, "CpMethodCall");
      return confined(n.target, {make_stmt(CallStmt{n.receiver, n.method, n.args, true}, s.loc)},
                      s.loc);
    }
    const Target& t = n.target;
    auto member = ex::target_ref(t);
    if (!same(n.receiver, member))
      throw UnsupportedSyntax("a call on a family range must have receiver " + t.name + "[" +
                                  t.binder + "]",
                              n.receiver->loc);
    for (const auto& a : n.args)
      if (any_node(a, [](const Expr& x) {
            return x.kind == ExprKind::Field || x.kind == ExprKind::This ||
                   (x.kind == ExprKind::Call && x.purity >= Purity::Heap);
          }))
        throw UnsupportedSyntax("arguments of a call on a family range must be pure", a->loc);
    const auto* ep = c_.find_endpoint(t.name);
    const ClassDecl* cls = ep ? p_.find_class(ep->class_name) : nullptr;
    const MethodDecl* m = cls ? cls->find_method(n.method) : nullptr;
    if (!m) throw UnsupportedSyntax("unknown method '" + n.method + "'", s.loc);
    note(&trace, "CpMethodCallRange");

    Target owner = Target::indexed(t.name, ex::var(t.binder), t.loc);
    Footprint fp;
    std::set<std::string> visited;
    method_footprint(*cls, *m, fp, visited);
    std::vector<ExprPtr> perms;
    for (const auto& f : fp.writes) perms.push_back(owned_perm(owner, f, frac(1, 1)));
    for (const auto& f : fp.reads)
      if (!fp.writes.count(f)) perms.push_back(owned_perm(owner, f, frac(1, 2)));
    std::map<std::string, ExprPtr> args;
    for (std::size_t k = 0; k < m->params.size() && k < n.args.size(); ++k)
      args[m->params[k].name] = n.args[k];
    Contract contract{perms, perms};
    auto add_new = [&](std::vector<ExprPtr>& out, const ExprPtr& e) {
      std::vector<ExprPtr> fresh;
      for (const auto& part : flatten(e, Op::Star)) {
        bool dup = std::any_of(perms.begin(), perms.end(),
                               [&](const ExprPtr& q) { return same(q->kid(0), part); });
        if (!dup && !part->is_true()) fresh.push_back(part);
      }
      if (!fresh.empty()) out.push_back(ex::confined(owner, ex::conj(fresh, Op::Star)));
    };
    add_new(contract.pre, substitute(contract_pre(*m, member), args));
    add_new(contract.post, substitute(contract_post(*m, member), args));

    Block body{confined(owner, {make_stmt(CallStmt{member, n.method, n.args, true}, s.loc)},
                        s.loc)};
    return make_stmt(ParStmt{t.binder, t.lo, t.hi, std::move(contract), std::move(body)}, s.loc);
  }

  Stmt project(const Communicate& n, const ChorStmt& s) {
    int site = site_of_.at(&s);
    const Target& r = n.sender;
    const Target& p = n.receiver;
    if (!r.is_range() && !p.is_range()) {
      note(&trace, "CpComm");
      Block out = transfer(n, r, p, site, s.loc);
      return make_stmt(BlockStmt{std::move(out)}, s.loc);
    }
    if (r.is_range() && p.is_indexed()) {
      if (!is_field_of(n.message, r.name, ex::var(r.binder)))
        throw UnsupportedSyntax("the message of a ranged communicate must be a field of " +
                                    r.name + "[" + r.binder + "]",
                                n.message->loc);
      if (!is_field_of(n.destination, p.name, p.index))
        throw UnsupportedSyntax("the destination of a ranged communicate must be a field of " +
                                    pretty(p),
                                n.destination->loc);
      note(&trace, "CpCommRange");
      Target sender = Target::indexed(r.name, ex::var(r.binder), r.loc);
      Contract contract;
      contract.pre = {owned_perm(sender, n.message->name, frac(1, 2)),
                      owned_perm(p, n.destination->name, frac(1, 1))};
      contract.post = contract.pre;
      Block out;
      out.push_back(
          make_stmt(AssertStmt{injectivity(r.binder, r.lo, r.hi, p.index), "injectivity"}, s.loc));
      out.push_back(make_stmt(
          ParStmt{r.binder, r.lo, r.hi, std::move(contract), transfer(n, sender, p, site, s.loc)},
          s.loc));
      return make_stmt(BlockStmt{std::move(out)}, s.loc);
    }
    if (!r.is_range() && p.is_range()) {
      Target member = Target::indexed(p.name, ex::var(p.binder), p.loc);
      if (!is_field_of(n.destination, p.name, ex::var(p.binder)))
        throw UnsupportedSyntax("the destination of a broadcast must be a field of " + p.name +
                                    "[" + p.binder + "]",
                                n.destination->loc);
      note(&trace, "CpCommBroadcast");
      Contract contract;
      contract.pre = {owned_perm(member, n.destination->name, frac(1, 1))};
      contract.post = contract.pre;
      return make_stmt(ParStmt{p.binder, p.lo, p.hi, std::move(contract),
                               transfer(n, r, member, site, s.loc)},
                       s.loc);
    }
    throw UnsupportedSyntax(
        "ranged communicate needs a sender range with an indexed receiver, or a singular sender",
        s.loc);
  }

  /// Message evaluation, invariant transfer and destination write.
  Block transfer(const Communicate& n, const Target& r, const Target& p, int site, Loc loc) {
    std::string v = fresh_("msg" + std::to_string(site) + "_");
    auto inv = n.invariant ? n.invariant : ex::boolean(true);
    auto inst = replace_placeholders(inv, ex::var(v), ex::target_ref(r), ex::target_ref(p));
    Block out;
    out.push_back(
        make_stmt(DeclStmt{message_type(n.message), v, ex::confined(r, n.message)}, loc));
    out.push_back(confined(r, {make_stmt(ExhaleStmt{inst}, loc)}, loc));
    out.push_back(confined(p, {make_stmt(InhaleStmt{inst}, loc)}, loc));
    out.push_back(confined(p, {make_stmt(AssignStmt{n.destination, ex::var(v)}, loc)}, loc));
    return out;
  }

  Type message_type(const ExprPtr& msg) const {
    if (msg->kind == ExprKind::Field) {
      if (const auto* ep = endpoint_of(c_, msg->kid(0)))
        if (const auto* cls = p_.find_class(ep->class_name))
          if (const auto* f = cls->find_field(msg->name)) return f->type;
    }
    if (msg->kind == ExprKind::BoolLit ||
        (msg->kind == ExprKind::Binary &&
         (msg->op == Op::And || msg->op == Op::Or || msg->op == Op::Eq || msg->op == Op::Ne ||
          msg->op == Op::Lt || msg->op == Op::Le || msg->op == Op::Gt || msg->op == Op::Ge ||
          msg->op == Op::Implies)) ||
        (msg->kind == ExprKind::Unary && msg->op == Op::Not))
      return Type::boolean();
    return Type::integer();
  }

  static Stmt confined(const Target& t, Block body, Loc loc) {
    return make_stmt(ConfinedStmt{t, std::move(body)}, loc);
  }

  const Program& p_;
  const Choreography& c_;
  Fresh fresh_;
  std::map<const ChorStmt*, int> site_of_;
};

}  // namespace

VerificationProgram project_chor(std::shared_ptr<const Program> p) {
  const Choreography* c = p->choreography();
  if (!c) throw UnsupportedSyntax("program has no choreography", {});
  VerificationProgram out;
  out.source = p;
  out.name = c->name;
  out.params = c->params;
  for (const auto& ep : c->endpoints)
    out.setup.push_back(
        make_stmt(NewEndpointStmt{ep.name, ep.binder, ep.size, ep.class_name, ep.args}, ep.loc));

  Projector proj(*p, *c);
  for (const auto& e : c->contract.pre)
    out.body.push_back(make_stmt(AssertStmt{e, "precondition"}, e->loc));
  for (const auto& e : c->run_contract.pre)
    out.body.push_back(make_stmt(AssertStmt{cp_resource(e, &proj.trace), "precondition"}, e->loc));
  for (const auto& s : proj.block(c->run)) out.body.push_back(s);
  for (const auto& e : c->run_contract.post)
    out.body.push_back(make_stmt(AssertStmt{cp_resource(e, &proj.trace), "postcondition"}, e->loc));
  for (const auto& e : c->contract.post)
    out.body.push_back(make_stmt(AssertStmt{e, "postcondition"}, e->loc));
  out.trace = std::move(proj.trace);
  return out;
}

std::string pretty(const VerificationProgram& v) {
  std::string out = "// setup\n" + pretty(v.setup) + "// body\n" + pretty(v.body);
  return out;
}

json to_json(const VerificationProgram& v, JsonOptions opts) {
  json j = json::object();
  j["schema"] = kJsonSchemaVersion;
  j["kind"] = "VerificationProgram";
  j["name"] = v.name;
  json params = json::array();
  for (const auto& p : v.params) params.push_back({{"type", pretty(p.type)}, {"name", p.name}});
  j["params"] = params;
  j["setup"] = to_json(v.setup, opts);
  j["body"] = to_json(v.body, opts);
  j["trace"] = v.trace;
  return j;
}

}  // namespace chorcc

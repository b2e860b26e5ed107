#include "chorcc/ep_projection.hpp"

#include <functional>
#include <map>
#include <set>

#include "chorcc/frontend.hpp"

namespace chorcc {

namespace {

void note(RuleTrace* trace, const char* rule) {
  if (trace) trace->push_back(rule);
}

ExprPtr eq(ExprPtr a, ExprPtr b) { return ex::binary(Op::Eq, std::move(a), std::move(b)); }

ExprPtr in_range(const ExprPtr& j, const ExprPtr& lo, const ExprPtr& hi) {
  return ex::binary(Op::And, ex::binary(Op::Le, lo, j), ex::binary(Op::Lt, j, hi));
}

bool mentions(const ExprPtr& e, const std::string& name) {
  auto fv = free_vars(e);
  return std::find(fv.begin(), fv.end(), name) != fv.end();
}

bool heap_free(const ExprPtr& e) {
  return !any_node(e, [](const Expr& n) {
    return n.kind == ExprKind::Field || n.kind == ExprKind::This ||
           (n.kind == ExprKind::Call && n.purity >= Purity::Heap);
  });
}

Stmt block_of(Block b, Loc loc = {}) { return make_stmt(BlockStmt{std::move(b)}, loc); }

void splice(Block& out, Stmt s) {
  if (const auto* b = s.as<BlockStmt>())
    out.insert(out.end(), b->body.begin(), b->body.end());
  else
    out.push_back(std::move(s));
}

Stmt guarded(ExprPtr cond, Block body, Loc loc) {
  return make_stmt(IfStmt{std::move(cond), std::move(body), {}}, loc);
}

}  // namespace

ExprPtr invert_index_expr(const ExprPtr& d, const std::string& i) {
  auto is_i = [&](const ExprPtr& e) { return e->kind == ExprKind::Var && e->name == i; };
  auto constant = [&](const ExprPtr& e) { return !mentions(e, i) && heap_free(e); };
  if (is_i(d)) return d;
  if (d->kind == ExprKind::Binary) {
    const auto& l = d->kid(0);
    const auto& r = d->kid(1);
    if (d->op == Op::Add && is_i(l) && constant(r)) return ex::binary(Op::Sub, l, r);
    if (d->op == Op::Sub && is_i(l) && constant(r)) return ex::binary(Op::Add, l, r);
    if (d->op == Op::Add && constant(l) && is_i(r)) return ex::binary(Op::Sub, r, l);
  }
  throw NotInvertible("index expression '" + pretty(d) +
                      "' is not invertible; supported patterns are " + i + ", " + i + " + c, " +
                      i + " - c and c + " + i);
}

ChannelTable build_channel_table(const Choreography& c) {
  ChannelTable out;
  auto sites = communicate_sites(c.run);
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto* comm = sites[k]->as<Communicate>();
    out.push_back({static_cast<int>(k), sort(comm->sender), sort(comm->receiver)});
  }
  return out;
}

ExprPtr ep_expr(const ExprPtr& h, const Target& self, RuleTrace* trace) {
  if (h->kind == ExprKind::Binary && (h->op == Op::And || h->op == Op::Star)) {
    note(trace, "EpAnd");
    auto l = ep_expr(h->kid(0), self, trace);
    auto r = ep_expr(h->kid(1), self, trace);
    return h->op == Op::And ? ex::and_(l, r) : ex::star(l, r);
  }
  if (h->kind == ExprKind::Binary && h->op == Op::Implies) {
    auto r = ep_expr(h->kid(1), self, trace);
    return r->is_true() ? r : ex::implies(h->kid(0), r);
  }
  if (h->kind == ExprKind::Chor) {
    note(trace, "EpChor");
    return ex::boolean(true);
  }
  if (h->kind != ExprKind::Endpoint) return h;
  const Target& alpha = *h->target;
  const ExprPtr& body = h->kid(0);
  if (covers(alpha, self) == Coverage::No) {
    note(trace, "EpExprSkip");
    return ex::boolean(true);
  }
  if (alpha.is_singular()) {
    note(trace, "EpExpr");
    return body;
  }
  if (alpha.is_indexed()) {
    note(trace, "EpExprIndex");
    return ex::implies(eq(self.index, alpha.index), body);
  }
  note(trace, "EpRange");
  return ex::implies(in_range(self.index, alpha.lo, alpha.hi),
                     substitute(body, {{alpha.binder, self.index}}));
}

namespace {

class EpProjector {
 public:
  EpProjector(const Program& p, const Choreography& c, const EndpointDecl& target)
      : c_(c), decl_(target) {
    (void)p;
    auto sites = communicate_sites(c.run);
    for (std::size_t k = 0; k < sites.size(); ++k) site_of_[sites[k]] = static_cast<int>(k);
    collect_used();
    if (target.is_family()) {
      self_name_ = fresh("j");
      self_ = Target::indexed(target.name, ex::var(self_name_));
    } else {
      self_ = Target::singular(target.name);
    }
  }

  EndpointProgram run() {
    EndpointProgram out;
    out.sort = decl_.name;
    out.class_name = decl_.class_name;
    out.family = decl_.is_family();
    out.self = self_name_;
    for (const auto& s : c_.run) {
      Stmt st = stmt(s);
      if (!is_empty_block(st)) out.body.push_back(std::move(st));
    }
    out.trace = std::move(trace_);
    return out;
  }

  Stmt stmt(const ChorStmt& s) {
    return std::visit([&](const auto& n) { return project(n, s); }, s.node);
  }

 private:
  bool mine(const Target& t) const { return sort(t) == decl_.name; }
  ExprPtr self_index() const { return self_.is_indexed() ? self_.index : ex::int_lit(0); }

  Block block(const ChorBlock& b) {
    Block out;
    for (const auto& s : b) {
      Stmt st = stmt(s);
      if (!is_empty_block(st)) out.push_back(std::move(st));
    }
    return out;
  }

  Stmt project(const ChorIf& n, const ChorStmt& s) {
    note(&trace_, "EpIf");
    auto cond = ep_expr(n.cond, self_, &trace_);
    auto then_b = block(n.then_branch);
    auto else_b = block(n.else_branch);
    if (cond->is_true() && then_b.empty() && else_b.empty()) return block_of({}, s.loc);
    return make_stmt(IfStmt{cond, std::move(then_b), std::move(else_b)}, s.loc);
  }

  Stmt project(const ChorWhile& n, const ChorStmt& s) {
    note(&trace_, "EpWhile");
    auto cond = ep_expr(n.cond, self_, &trace_);
    ExprPtr inv = n.invariant ? ep_expr(n.invariant, self_, &trace_) : nullptr;
    if (inv && inv->is_true()) inv = nullptr;
    auto body = block(n.body);
    if (cond->is_true() && body.empty()) return block_of({}, s.loc);
    return make_stmt(WhileStmt{inv, cond, std::move(body)}, s.loc);
  }

  Stmt project(const ChorAssert& n, const ChorStmt& s) {
    auto e = ep_expr(n.expr, self_, &trace_);
    if (e->is_true()) return block_of({}, s.loc);
    return make_stmt(AssertStmt{e, "assert"}, s.loc);
  }

  /// Runs `local` at the endpoints of `t` that this program stands for.
  Stmt owned(const Target& t, const std::function<Stmt(const std::map<std::string, ExprPtr>&)>& local,
             Loc loc) {
    if (!mine(t)) {
      note(&trace_, "EpAssignSkip");
      return block_of({}, loc);
    }
    note(&trace_, "EpAssign");
    if (t.is_singular()) return local({});
    if (t.is_indexed()) return guarded(eq(self_index(), t.index), {local({})}, loc);
    return guarded(in_range(self_index(), t.lo, t.hi), {local({{t.binder, self_index()}})}, loc);
  }

  Stmt project(const EndpointAssign& n, const ChorStmt& s) {
    return owned(
        n.target,
        [&](const auto& sub) {
          return make_stmt(AssignStmt{substitute(n.location, sub), substitute(n.value, sub)},
                           s.loc);
        },
        s.loc);
  }

  Stmt project(const EndpointCall& n, const ChorStmt& s) {
    return owned(
        n.target,
        [&](const auto& sub) {
          std::vector<ExprPtr> args;
          for (const auto& a : n.args) args.push_back(substitute(a, sub));
          return make_stmt(CallStmt{substitute(n.receiver, sub), n.method, args, false}, s.loc);
        },
        s.loc);
  }

  static bool same_instance(const Target& a, const Target& b) {
    if (a.name != b.name || a.is_range() || b.is_range()) return false;
    if (a.is_singular() && b.is_singular()) return true;
    return a.is_indexed() && b.is_indexed() && same(a.index, b.index);
  }

  Stmt project(const Communicate& n, const ChorStmt& s) {
    const Target& r = n.sender;
    const Target& p = n.receiver;
    if (!mine(r) && !mine(p)) {
      note(&trace_, "EpCommSkip");
      return block_of({}, s.loc);
    }
    note(&trace_, "EpComm");
    int site = site_of_.at(&s);
    if (same_instance(r, p)) {
      Stmt local = make_stmt(AssignStmt{n.destination, n.message}, s.loc);
      if (r.is_singular()) return local;
      return guarded(eq(self_index(), r.index), {local}, s.loc);
    }
    Block out;
    if (mine(r)) splice(out, send_part(n, site, s.loc));
    if (mine(p)) splice(out, recv_part(n, site, s.loc));
    return out.size() == 1 ? std::move(out.front()) : block_of(std::move(out), s.loc);
  }

  Stmt send(int site, ExprPtr sidx, ExprPtr ridx, ExprPtr value, Loc loc) {
    return make_stmt(SendStmt{{site, std::move(sidx), std::move(ridx)}, std::move(value)}, loc);
  }
  Stmt recv(int site, ExprPtr sidx, ExprPtr ridx, ExprPtr loc_expr, Loc loc) {
    return make_stmt(RecvStmt{{site, std::move(sidx), std::move(ridx)}, std::move(loc_expr)}, loc);
  }

  /// Sends from one sender instance; a ranged receiver gets one message per member.
  Block sends_to(const Communicate& n, int site, const ExprPtr& sidx, Loc loc) {
    const Target& p = n.receiver;
    if (p.is_singular()) return {send(site, sidx, ex::int_lit(0), n.message, loc)};
    if (p.is_indexed()) return {send(site, sidx, p.index, n.message, loc)};
    std::string k = fresh("k");
    auto kv = ex::var(k);
    Block body{send(site, sidx, kv, substitute(n.message, {{p.binder, kv}}), loc),
               make_stmt(AssignStmt{kv, ex::binary(Op::Add, kv, ex::int_lit(1))}, loc)};
    return {make_stmt(DeclStmt{Type::integer(), k, p.lo}, loc),
            make_stmt(WhileStmt{nullptr, ex::binary(Op::Lt, kv, p.hi), std::move(body)}, loc)};
  }

  Stmt send_part(const Communicate& n, int site, Loc loc) {
    const Target& r = n.sender;
    const Target& p = n.receiver;
    if (p.is_range()) note(&trace_, "EpBroadcastSend");
    if (r.is_singular()) {
      if (!p.is_range()) note(&trace_, "EpSend");
      return block_of(sends_to(n, site, ex::int_lit(0), loc), loc);
    }
    if (r.is_indexed()) {
      if (!p.is_range()) note(&trace_, "EpIndexSend");
      return guarded(eq(self_index(), r.index), sends_to(n, site, self_index(), loc), loc);
    }
    if (!p.is_indexed())
      throw UnsupportedSyntax("a ranged sender needs an indexed receiver", loc);
    note(&trace_, "EpRangeSend");
    std::map<std::string, ExprPtr> sub{{r.binder, self_index()}};
    return guarded(in_range(self_index(), r.lo, r.hi),
                   {send(site, self_index(), substitute(p.index, sub), substitute(n.message, sub),
                         loc)},
                   loc);
  }

  Stmt recv_part(const Communicate& n, int site, Loc loc) {
    const Target& r = n.sender;
    const Target& p = n.receiver;
    if (r.is_range()) {
      if (!p.is_indexed())
        throw UnsupportedSyntax("a ranged sender needs an indexed receiver", loc);
      ExprPtr inv;
      try {
        inv = substitute(invert_index_expr(p.index, r.binder), {{r.binder, self_index()}});
      } catch (const NotInvertible& e) {
        throw UnsupportedSyntax(e.what(), p.loc);
      }
      note(&trace_, "EpRangeReceive");
      return guarded(in_range(inv, r.lo, r.hi),
                     {recv(site, inv, self_index(), substitute(n.destination, {{r.binder, inv}}),
                           loc)},
                     loc);
    }
    ExprPtr sidx = r.is_indexed() ? r.index : ex::int_lit(0);
    if (p.is_singular()) {
      note(&trace_, "EpReceive");
      return recv(site, sidx, ex::int_lit(0), n.destination, loc);
    }
    if (p.is_indexed()) {
      note(&trace_, "EpIndexReceive");
      return guarded(eq(self_index(), p.index),
                     {recv(site, sidx, self_index(), n.destination, loc)}, loc);
    }
    note(&trace_, "EpBroadcastReceive");
    return guarded(in_range(self_index(), p.lo, p.hi),
                   {recv(site, sidx, self_index(),
                         substitute(n.destination, {{p.binder, self_index()}}), loc)},
                   loc);
  }

  void collect_used() {
    auto add = [&](const ExprPtr& e) {
      any_node(e, [&](const Expr& n) {
        if (!n.name.empty()) used_.insert(n.name);
        if (n.target && !n.target->binder.empty()) used_.insert(n.target->binder);
        return false;
      });
    };
    for (const auto& prm : c_.params) used_.insert(prm.name);
    for (const auto& ep : c_.endpoints) {
      used_.insert(ep.name);
      if (!ep.binder.empty()) used_.insert(ep.binder);
    }
    std::function<void(const ChorBlock&)> walk = [&](const ChorBlock& b) {
      for (const auto& s : b) {
        for_each_expr(s, add);
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, EndpointAssign> || std::is_same_v<T, EndpointCall>) {
                if (!n.target.binder.empty()) used_.insert(n.target.binder);
              } else if constexpr (std::is_same_v<T, Communicate>) {
                if (!n.sender.binder.empty()) used_.insert(n.sender.binder);
                if (!n.receiver.binder.empty()) used_.insert(n.receiver.binder);
              } else if constexpr (std::is_same_v<T, ChorIf>) {
                walk(n.then_branch);
                walk(n.else_branch);
              } else if constexpr (std::is_same_v<T, ChorWhile>) {
                walk(n.body);
              }
            },
            s.node);
      }
    };
    walk(c_.run);
  }

  std::string fresh(const std::string& base) {
    if (used_.insert(base).second) return base;
    for (int k = 0;; ++k) {
      std::string n = base + std::to_string(k);
      if (used_.insert(n).second) return n;
    }
  }

  const Choreography& c_;
  const EndpointDecl& decl_;
  Target self_;
  std::string self_name_;
  std::set<std::string> used_;
  std::map<const ChorStmt*, int> site_of_;
  RuleTrace trace_;
};

}  // namespace

EndpointProgram project_ep(const Program& p, const SortTag& target) {
  const Choreography* c = p.choreography();
  if (!c) throw UnsupportedSyntax("program has no choreography", {});
  const EndpointDecl* d = c->find_endpoint(target);
  if (!d) throw std::invalid_argument("unknown endpoint sort '" + target + "'");
  return EpProjector(p, *c, *d).run();
}

std::vector<EndpointProgram> project_all(const Program& p) {
  const Choreography* c = p.choreography();
  if (!c) throw UnsupportedSyntax("program has no choreography", {});
  std::vector<EndpointProgram> out;
  for (const auto& ep : c->endpoints) out.push_back(project_ep(p, ep.name));
  return out;
}

std::string pretty(const EndpointProgram& e) {
  std::string head = "// endpoint " + e.sort + " : " + e.class_name;
  if (e.family) head += " (instance index " + e.self + ")";
  return head + "\n" + pretty(e.body);
}

json to_json(const EndpointProgram& e, JsonOptions opts) {
  json j = json::object();
  j["schema"] = kJsonSchemaVersion;
  j["kind"] = "EndpointProgram";
  j["sort"] = e.sort;
  j["class"] = e.class_name;
  j["family"] = e.family;
  j["self"] = e.self;
  j["body"] = to_json(e.body, opts);
  j["trace"] = e.trace;
  return j;
}

EndpointProgram endpoint_program_from_json(const json& j) {
  auto field = [&](const char* key) -> const json& {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("/") + key, "missing field");
    return j.at(key);
  };
  if (field("kind") != "EndpointProgram") throw SchemaError("/kind", "expected EndpointProgram");
  if (field("schema") != kJsonSchemaVersion) throw SchemaError("/schema", "unsupported schema version");
  EndpointProgram e;
  try {
    e.sort = field("sort").get<std::string>();
    e.class_name = field("class").get<std::string>();
    e.family = field("family").get<bool>();
    e.self = field("self").get<std::string>();
    if (j.contains("trace")) e.trace = j.at("trace").get<RuleTrace>();
  } catch (const json::type_error& err) {
    throw SchemaError("/", err.what());
  }
  e.body = block_from_json(field("body"), "/body");
  return e;
}

json to_json(const ChannelTable& t) {
  json chans = json::array();
  for (const auto& c : t)
    chans.push_back({{"site", c.site}, {"sender", c.sender}, {"receiver", c.receiver}});
  return {{"schema", kJsonSchemaVersion}, {"kind", "ChannelTable"}, {"channels", chans}};
}

ChannelTable channel_table_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "ChannelTable")
    throw SchemaError("/kind", "expected ChannelTable");
  ChannelTable out;
  const auto& chans = j.at("channels");
  for (std::size_t k = 0; k < chans.size(); ++k) {
    try {
      out.push_back({chans[k].at("site").get<int>(), chans[k].at("sender").get<std::string>(),
                     chans[k].at("receiver").get<std::string>()});
    } catch (const json::exception& err) {
      throw SchemaError("/channels/" + std::to_string(k), err.what());
    }
  }
  return out;
}

}  // namespace chorcc

#include <set>

#include "chorcc/frontend.hpp"
#include "interp.hpp"

namespace chorcc::rt {

namespace {

using Location = std::pair<std::uint64_t, std::string>;

std::string show(const Location& l) { return "#" + std::to_string(l.first) + "." + l.second; }

struct Footprint {
  std::set<Location> reads, writes;
};

class IrInterp : public Interp {
 public:
  IrInterp(const Program& p, Heap& heap, const Params& params, RunReport& report)
      : Interp(p, heap, params), report_(report) {
    for (const auto& [id, o] : heap.objects)
      for (const auto& [f, v] : o.fields) held_[{id, f}][o.owner] = 1;
  }

 protected:
  void check(bool ok, const std::string& label, const std::string& what, Loc loc) override {
    auto& c = report_.checks[label];
    if (ok) {
      ++c.passed;
      return;
    }
    ++c.failed;
    report_.fail(FailureKind::Assert, label, what, loc);
  }

  void on_read(std::uint64_t id, const std::string& f, Loc loc) override {
    if (inhaling_) return;
    for (auto* fp : footprints_) fp->reads.insert({id, f});
    confine(id, loc, "reads");
  }

  void on_write(std::uint64_t id, const std::string& f, Loc loc) override {
    for (auto* fp : footprints_) fp->writes.insert({id, f});
    confine(id, loc, "writes");
  }

  bool perm(std::uint64_t id, const std::string& f, const Fraction& q, Loc) override {
    auto it = held_.find({id, f});
    if (it == held_.end()) return false;
    if (!scopes_.empty()) {
      auto h = it->second.find(scopes_.back().owner);
      return h != it->second.end() && h->second >= q;
    }
    Fraction total = 0;
    for (const auto& [who, amt] : it->second) total += amt;
    return total >= q;
  }

  Value eval_confined(const Expr& e) override {
    Scope s = enter(*e.target, e.loc);
    Value v = eval(e.kid(0));
    leave(s);
    return v;
  }

  void exec_while(const WhileStmt& w, Loc loc) override {
    if (w.invariant) check(eval_bool(w.invariant), "invariant", "loop invariant on entry", loc);
    while (eval_bool(w.cond)) {
      tick(loc);
      exec_block(w.body);
      if (w.invariant)
        check(eval_bool(w.invariant), "invariant", "loop invariant after iteration", loc);
    }
  }

  void exec_special(const Stmt& s) override {
    if (const auto* c = s.as<ConfinedStmt>()) {
      Scope sc = enter(c->target, s.loc);
      exec_block(c->body);
      leave(sc);
    } else if (const auto* x = s.as<ExhaleStmt>()) {
      exhale(x->expr, s.loc);
      conservation(s.loc);
    } else if (const auto* i = s.as<InhaleStmt>()) {
      ++inhaling_;
      try {
        inhale(i->expr, s.loc);
      } catch (...) {
        --inhaling_;
        throw;
      }
      --inhaling_;
      conservation(s.loc);
    } else if (const auto* par = s.as<ParStmt>()) {
      run_par(*par, s.loc);
    } else {
      Interp::exec_special(s);
    }
  }

 private:
  struct Scope {
    Owner owner;
    bool reported = false;
  };

  Scope enter(const Target& t, Loc loc) {
    Owner o = owner_of(t);
    if (!scopes_.empty() && scopes_.back().owner != o) {
      report_.fail(FailureKind::Confinement, "nesting",
                   "confinement to " + show(o) + " nested inside " + show(scopes_.back().owner),
                   loc);
    }
    scopes_.push_back({o, false});
    return scopes_.back();
  }

  void leave(const Scope&) { scopes_.pop_back(); }

  void confine(std::uint64_t id, Loc loc, const char* verb) {
    if (scopes_.empty()) return;
    Scope& s = scopes_.back();
    const Owner& o = heap_.objects.at(id).owner;
    if (o == s.owner || s.reported) return;
    s.reported = true;
    report_.fail(FailureKind::Confinement, "confinement",
                 "scope confined to " + show(s.owner) + " " + verb + " memory of " + show(o), loc);
  }

  /// Walks a resource, handing permission claims to `claim` and evaluating
  /// pure facts with `fact`.
  template <class Claim, class Fact>
  void walk(const ExprPtr& r, Claim&& claim, Fact&& fact) {
    const Expr& e = *r;
    if (e.kind == ExprKind::Binary && (e.op == Op::Star || e.op == Op::And)) {
      walk(e.kid(0), claim, fact);
      walk(e.kid(1), claim, fact);
    } else if (e.kind == ExprKind::Binary && e.op == Op::Implies) {
      if (eval_bool(e.kid(0))) walk(e.kid(1), claim, fact);
    } else if (e.kind == ExprKind::Perm) {
      auto loc = location(e.kid(0));
      claim(loc, amount(e.kid(1)), e.loc);
    } else if (e.kind == ExprKind::Forall) {
      Int lo = eval_int(e.kid(0)), hi = eval_int(e.kid(1));
      ScopeGuard g(*this);
      for (Int k = lo; k < hi; ++k) {
        declare(e.name, Value(k));
        walk(e.kid(2), claim, fact);
      }
    } else if (e.kind == ExprKind::Confined) {
      Scope s = enter(*e.target, e.loc);
      walk(e.kid(0), claim, fact);
      leave(s);
    } else if (e.kind == ExprKind::Chor || (e.kind == ExprKind::Endpoint && !e.target->is_range())) {
      walk(e.kid(0), claim, fact);
    } else if (e.kind == ExprKind::PredApply) {
      const PredicateDecl* pd = p_.find_predicate(e.name);
      if (!pd) throw RuntimeError("unknown predicate '" + e.name + "'", e.loc);
      std::vector<Value> args;
      for (const auto& a : e.kids) args.push_back(eval(a));
      FrameGuard g(*this);
      for (std::size_t k = 0; k < pd->params.size() && k < args.size(); ++k)
        declare(pd->params[k].name, args[k]);
      walk(pd->body, claim, fact);
    } else {
      fact(eval_bool(r), r);
    }
  }

  void exhale(const ExprPtr& r, Loc loc) {
    walk(
        r,
        [&](const Location& l, const Fraction& q, Loc at) {
          if (scopes_.empty()) {
            report_.fail(FailureKind::Permission, "exhale", "exhale of " + show(l) + " outside a confinement scope", at);
            return;
          }
          const Owner& o = scopes_.back().owner;
          Fraction& h = held_[l][o];
          if (h < q) {
            report_.fail(FailureKind::Permission, "exhale",
                         show(o) + " holds " + show(Value(h)) + " of " + show(l) + ", needs " +
                             show(Value(q)),
                         at);
            return;
          }
          h -= q;
          in_flight_[l] += q;
        },
        [&](bool ok, const ExprPtr& f) {
          if (!ok) report_.fail(FailureKind::Exhale, "exhale", "exhaled fact is false: " + pretty(f), loc);
        });
  }

  void inhale(const ExprPtr& r, Loc loc) {
    walk(
        r,
        [&](const Location& l, const Fraction& q, Loc at) {
          Fraction& pool = in_flight_[l];
          if (scopes_.empty() || pool < q) {
            report_.fail(FailureKind::Check, "inhale",
                         "no in-flight permission for " + show(l) + " (" + show(Value(q)) + ")", at);
            return;
          }
          pool -= q;
          held_[l][scopes_.back().owner] += q;
        },
        [&](bool ok, const ExprPtr& f) {
          if (!ok) report_.fail(FailureKind::Check, "inhale", "inhaled fact is false: " + pretty(f), loc);
        });
  }

  void conservation(Loc loc) {
    ++report_.conservation_checks;
    for (const auto& [l, holders] : held_) {
      Fraction total = 0;
      for (const auto& [who, amt] : holders) total += amt;
      auto f = in_flight_.find(l);
      if (f != in_flight_.end()) total += f->second;
      if (total != 1)
        report_.fail(FailureKind::Conservation, "conservation",
                     show(l) + " totals " + show(Value(total)), loc);
    }
  }

  void run_par(const ParStmt& par, Loc loc) {
    Int lo = eval_int(par.lo), hi = eval_int(par.hi);
    std::vector<std::pair<Int, Footprint>> runs;
    for (Int k = lo; k < hi; ++k) {
      ScopeGuard g(*this);
      declare(par.binder, Value(k));
      for (const auto& pre : par.contract.pre)
        check(eval_bool(pre), "precondition", "par precondition " + pretty(pre), loc);
      Footprint fp;
      footprints_.push_back(&fp);
      try {
        exec_block(par.body);
      } catch (...) {
        footprints_.pop_back();
        throw;
      }
      footprints_.pop_back();
      for (const auto& post : par.contract.post)
        check(eval_bool(post), "postcondition", "par postcondition " + pretty(post), loc);
      runs.emplace_back(k, std::move(fp));
    }
    for (std::size_t a = 0; a < runs.size(); ++a) {
      for (std::size_t b = a + 1; b < runs.size(); ++b) {
        const auto& fa = runs[a].second;
        const auto& fb = runs[b].second;
        for (const auto& w : fa.writes) {
          if (fb.writes.count(w) || fb.reads.count(w)) {
            par_conflict(runs[a].first, runs[b].first, w, loc);
            return;
          }
        }
        for (const auto& w : fb.writes) {
          if (fa.reads.count(w)) {
            par_conflict(runs[a].first, runs[b].first, w, loc);
            return;
          }
        }
      }
    }
  }

  void par_conflict(const Int& a, const Int& b, const Location& l, Loc loc) {
    report_.fail(FailureKind::ParDisjointness, "par",
                 "iterations " + a.str() + " and " + b.str() + " both access " + show(l) +
                     " and at least one writes it",
                 loc);
  }

  RunReport& report_;
  std::map<Location, std::map<Owner, Fraction>> held_;
  std::map<Location, Fraction> in_flight_;
  std::vector<Scope> scopes_;
  std::vector<Footprint*> footprints_;
  int inhaling_ = 0;
};

}  // namespace

RunReport run_verification_ir(const VerificationProgram& v, const Params& params) {
  RunReport report;
  report.mode = "ir";
  try {
    Heap heap = setup(*v.source, params);
    IrInterp in(*v.source, heap, params, report);
    try {
      in.exec_block(v.body);
    } catch (const RuntimeError& e) {
      report.fail(FailureKind::Runtime, "runtime", e.what(), e.loc());
    }
    report.steps = in.steps;
    report.heap = heap;
  } catch (const RuntimeError& e) {
    report.fail(FailureKind::Runtime, "setup", e.what(), e.loc());
  }
  report.settle();
  return report;
}

}  // namespace chorcc::rt

#include "interp.hpp"

namespace chorcc::rt {

namespace {

class RefInterp : public Interp {
 public:
  using Interp::Interp;

  void run(const ChorBlock& b) {
    ScopeGuard g(*this);
    for (const auto& s : b) stmt(s);
  }

 protected:
  void check(bool ok, const std::string& label, const std::string& what, Loc loc) override {
    if (!ok) throw AssertionFailure(label + " failed: " + what, loc);
  }

 private:
  /// Runs `body` once per member of a range target, ascending, or once otherwise.
  template <class F>
  void each(const Target& t, F body) {
    if (!t.is_range()) {
      body();
      return;
    }
    Int lo = eval_int(t.lo), hi = eval_int(t.hi);
    ScopeGuard g(*this);
    for (Int k = lo; k < hi; ++k) {
      declare(t.binder, Value(k));
      body();
    }
  }

  void stmt(const ChorStmt& s) {
    tick(s.loc);
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, ChorIf>) {
            run(eval_bool(n.cond) ? n.then_branch : n.else_branch);
          } else if constexpr (std::is_same_v<T, ChorWhile>) {
            while (eval_bool(n.cond)) {
              tick(s.loc);
              run(n.body);
            }
          } else if constexpr (std::is_same_v<T, ChorAssert>) {
            check(eval_bool(n.expr), "assert", "choreographic assertion", s.loc);
          } else if constexpr (std::is_same_v<T, EndpointAssign>) {
            each(n.target, [&] { assign(n.location, eval(n.value)); });
          } else if constexpr (std::is_same_v<T, EndpointCall>) {
            each(n.target, [&] {
              Value recv = eval(n.receiver);
              std::vector<Value> args;
              for (const auto& a : n.args) args.push_back(eval(a));
              call_method(recv, n.method, args, s.loc);
            });
          } else if constexpr (std::is_same_v<T, Communicate>) {
            const Target& ranged = n.sender.is_range() ? n.sender : n.receiver;
            each(ranged, [&] { assign(n.destination, eval(n.message)); });
          }
        },
        s.node);
  }
};

}  // namespace

Heap run_choreography(const Program& p, const Params& params) {
  const Choreography* c = p.choreography();
  if (!c) throw RuntimeError("program has no choreography");
  Heap heap = setup(p, params);
  RefInterp in(p, heap, params);
  for (const auto& e : c->contract.pre)
    if (!in.eval_bool(e)) throw AssertionFailure("choreography precondition failed", e->loc);
  for (const auto& e : c->run_contract.pre)
    if (!in.eval_bool(e)) throw AssertionFailure("run precondition failed", e->loc);
  in.run(c->run);
  for (const auto& e : c->run_contract.post)
    if (!in.eval_bool(e)) throw AssertionFailure("run postcondition failed", e->loc);
  for (const auto& e : c->contract.post)
    if (!in.eval_bool(e)) throw AssertionFailure("choreography postcondition failed", e->loc);
  return heap;
}

}  // namespace chorcc::rt

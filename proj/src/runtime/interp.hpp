#pragma once

#include <map>
#include <string>
#include <vector>

#include "chorcc/runtime.hpp"

namespace chorcc::rt {

/// Sequential evaluator over one heap. The three executors specialize it
/// through the virtual hooks.
class Interp {
 public:
  Interp(const Program& p, Heap& heap, const Params& params);
  virtual ~Interp() = default;

  Value eval(const ExprPtr& e);
  bool eval_bool(const ExprPtr& e);
  Int eval_int(const ExprPtr& e);
  std::int64_t eval_index(const ExprPtr& e);

  /// Executes one statement to completion. Send/Recv and checker-only
  /// statements go through `exec_special`.
  void exec(const Stmt& s);
  void exec_block(const Block& b);
  void assign(const ExprPtr& lhs, Value v);

  void push_scope();
  void pop_scope();
  void declare(const std::string& name, Value v);
  const Value* lookup(const std::string& name) const;

  Owner owner_of(const Target& t);
  Object& object(const Value& ref, Loc loc);
  Heap& heap() { return heap_; }
  const Program& program() const { return p_; }

  void call_method(const Value& receiver, const std::string& method, const std::vector<Value>& args,
                   Loc loc);
  void construct(std::uint64_t id, const std::vector<Value>& args, Loc loc);

  std::uint64_t steps = 0;
  std::uint64_t step_limit = 10'000'000;

 protected:
  virtual void on_read(std::uint64_t, const std::string&, Loc) {}
  virtual void on_write(std::uint64_t, const std::string&, Loc) {}
  /// Value of `Perm(obj.field, amount)` outside inhale/exhale.
  virtual bool perm(std::uint64_t, const std::string&, const Fraction&, Loc) { return true; }
  /// Records or raises a failed check.
  virtual void check(bool ok, const std::string& label, const std::string& what, Loc loc) = 0;
  virtual Value eval_confined(const Expr& e);
  virtual void exec_special(const Stmt& s);
  virtual void exec_while(const WhileStmt& w, Loc loc);

  /// Evaluates a permission location to (object id, field).
  std::pair<std::uint64_t, std::string> location(const ExprPtr& loc_expr);
  Fraction amount(const ExprPtr& e);

  /// Switches to a fresh call frame; locals of the caller are invisible.
  struct FrameGuard {
    Interp& in;
    explicit FrameGuard(Interp& i) : in(i) {
      in.frames_.emplace_back();
      in.frames_.back().emplace_back();
    }
    ~FrameGuard() { in.frames_.pop_back(); }
  };

  struct ScopeGuard {
    Interp& in;
    explicit ScopeGuard(Interp& i) : in(i) { in.push_scope(); }
    ~ScopeGuard() { in.pop_scope(); }
  };

  void tick(Loc loc);
  Value binary(const Expr& e);
  Value call_function(const Expr& e);

  const Program& p_;
  Heap& heap_;
  std::map<std::string, Value> globals_;
  std::vector<std::vector<std::map<std::string, Value>>> frames_;
};

Value default_value(const Type& t);
std::string where(Loc loc);

}  // namespace chorcc::rt

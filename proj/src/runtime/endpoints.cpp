#include <deque>
#include <memory>
#include <random>
#include <tuple>

#include "interp.hpp"

namespace chorcc::rt {

namespace {

using ChannelKey = std::tuple<int, Int, Int>;

std::string show(const ChannelKey& k) {
  return "chan(" + std::to_string(std::get<0>(k)) + ", " + std::get<1>(k).str() + ", " +
         std::get<2>(k).str() + ")";
}

class EpInterp : public Interp {
 public:
  EpInterp(const Program& p, Heap& heap, const Params& params, RunReport& report, std::string who)
      : Interp(p, heap, params), report_(report), who_(std::move(who)) {}

 protected:
  void check(bool ok, const std::string& label, const std::string& what, Loc loc) override {
    auto& c = report_.checks[label];
    if (ok) {
      ++c.passed;
      return;
    }
    ++c.failed;
    report_.fail(FailureKind::Assert, label, who_ + ": " + what, loc);
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

 public:
  void check_invariant(const WhileStmt& w, const char* when, Loc loc) {
    if (w.invariant) check(eval_bool(w.invariant), "invariant", std::string("loop invariant ") + when, loc);
  }

 private:
  RunReport& report_;
  std::string who_;
};

/// One endpoint instance with an explicit continuation so Recv can block.
struct Task {
  Owner owner;
  std::string name;
  Heap fragment;
  std::unique_ptr<EpInterp> in;

  struct Frame {
    const Block* block;
    std::size_t pc = 0;
    const WhileStmt* loop = nullptr;
    Loc loc;
  };
  std::vector<Frame> frames;

  bool finished() const { return frames.empty(); }
};

class Simulator {
 public:
  Simulator(const ChannelTable& table, RunReport& report, const RunOptions& opts)
      : table_(table), report_(report), opts_(opts), rng_(opts.seed) {}

  std::vector<std::unique_ptr<Task>> tasks;

  void run() {
    std::size_t cursor = 0;
    std::uint64_t steps = 0;
    while (true) {
      std::vector<std::size_t> runnable;
      bool unfinished = false;
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (tasks[k]->finished()) continue;
        unfinished = true;
        if (!blocked(*tasks[k])) runnable.push_back(k);
      }
      if (!unfinished) break;
      if (runnable.empty()) {
        for (auto& t : tasks) {
          if (t->finished()) continue;
          std::string desc = t->name;
          if (auto key = waiting_on(*t)) desc += " waits on " + show(*key);
          report_.blocked.push_back(desc);
        }
        report_.fail(FailureKind::Deadlock, "deadlock",
                     std::to_string(report_.blocked.size()) + " task(s) blocked on receive");
        break;
      }
      std::size_t pick;
      if (opts_.schedule == Schedule::Random) {
        std::uniform_int_distribution<std::size_t> d(0, runnable.size() - 1);
        pick = runnable[d(rng_)];
      } else {
        pick = runnable.front();
        for (auto k : runnable) {
          if (k >= cursor) {
            pick = k;
            break;
          }
        }
        cursor = pick + 1;
      }
      if (++steps > opts_.step_limit) {
        report_.fail(FailureKind::Runtime, "steps", "step limit exceeded");
        break;
      }
      Task& t = *tasks[pick];
      try {
        step(t);
      } catch (const RuntimeError& e) {
        report_.fail(FailureKind::Runtime, "runtime", t.name + ": " + e.what(), e.loc());
        t.frames.clear();
        failed_ = true;
      }
      if (failed_) break;
    }
    report_.steps = steps;
  }

 private:
  ChannelKey key(Task& t, const ChannelRef& c) {
    return {c.site, t.in->eval_int(c.sender_index), t.in->eval_int(c.receiver_index)};
  }

  const Stmt* next(const Task& t) const {
    const auto& f = t.frames.back();
    return f.pc < f.block->size() ? &(*f.block)[f.pc] : nullptr;
  }

  std::optional<ChannelKey> waiting_on(Task& t) {
    if (t.finished()) return std::nullopt;
    const Stmt* s = next(t);
    const auto* r = s ? s->as<RecvStmt>() : nullptr;
    if (!r) return std::nullopt;
    try {
      return key(t, r->channel);
    } catch (const RuntimeError&) {
      return std::nullopt;  // the step itself reports the error
    }
  }

  bool blocked(Task& t) {
    auto k = waiting_on(t);
    if (!k) return false;
    auto q = queues_.find(*k);
    return q == queues_.end() || q->second.empty();
  }

  void check_site(const Task& t, int site, bool sending, Loc loc) {
    if (site < 0 || static_cast<std::size_t>(site) >= table_.size())
      throw RuntimeError("unknown communicate site " + std::to_string(site), loc);
    const auto& e = table_[site];
    const SortTag& expect = sending ? e.sender : e.receiver;
    if (expect != t.owner.sort)
      throw RuntimeError("site " + std::to_string(site) + " does not connect " + t.owner.sort +
                             " as " + (sending ? "sender" : "receiver"),
                         loc);
  }

  void push_block(Task& t, const Block& b, Loc loc, const WhileStmt* loop = nullptr) {
    t.in->push_scope();
    t.frames.push_back({&b, 0, loop, loc});
  }

  void step(Task& t) {
    auto& f = t.frames.back();
    if (f.pc == f.block->size()) {
      t.in->pop_scope();
      if (f.loop) {
        const WhileStmt* w = f.loop;
        Loc loc = f.loc;
        t.in->check_invariant(*w, "after iteration", loc);
        if (t.in->eval_bool(w->cond)) {
          t.in->push_scope();
          f.pc = 0;
          return;
        }
      }
      t.frames.pop_back();
      return;
    }
    const Stmt& s = (*f.block)[f.pc];
    if (const auto* snd = s.as<SendStmt>()) {
      check_site(t, snd->channel.site, true, s.loc);
      ChannelKey k = key(t, snd->channel);
      queues_[k].push_back(t.in->eval(snd->value));
      ++f.pc;
    } else if (const auto* rcv = s.as<RecvStmt>()) {
      check_site(t, rcv->channel.site, false, s.loc);
      auto& q = queues_[key(t, rcv->channel)];
      if (q.empty()) return;  // scheduler only picks unblocked tasks
      Value v = std::move(q.front());
      q.pop_front();
      ++f.pc;
      t.in->assign(rcv->location, std::move(v));
    } else if (const auto* b = s.as<BlockStmt>()) {
      ++f.pc;
      push_block(t, b->body, s.loc);
    } else if (const auto* i = s.as<IfStmt>()) {
      bool c = t.in->eval_bool(i->cond);
      ++f.pc;
      push_block(t, c ? i->then_branch : i->else_branch, s.loc);
    } else if (const auto* w = s.as<WhileStmt>()) {
      t.in->check_invariant(*w, "on entry", s.loc);
      bool c = t.in->eval_bool(w->cond);
      ++f.pc;
      if (c) push_block(t, w->body, s.loc, w);
    } else {
      ++f.pc;
      t.in->exec(s);
    }
  }

  const ChannelTable& table_;
  RunReport& report_;
  RunOptions opts_;
  std::mt19937_64 rng_;
  std::map<ChannelKey, std::deque<Value>> queues_;
  bool failed_ = false;
};

}  // namespace

EndpointRun run_endpoints(const Program& p, const std::vector<EndpointProgram>& programs,
                          const ChannelTable& table, const Params& params, const RunOptions& opts) {
  EndpointRun out;
  RunReport& report = out.report;
  report.mode = "endpoints";
  if (opts.schedule == Schedule::Random) report.seed = opts.seed;
  Heap global;
  try {
    global = setup(p, params);
  } catch (const RuntimeError& e) {
    report.fail(FailureKind::Runtime, "setup", e.what(), e.loc());
    report.settle();
    return out;
  }
  const Choreography* c = p.choreography();
  Simulator sim(table, report, opts);
  for (const auto& ep : c->endpoints) {
    auto prog = std::find_if(programs.begin(), programs.end(),
                             [&](const EndpointProgram& e) { return e.sort == ep.name; });
    if (prog == programs.end()) {
      report.fail(FailureKind::Runtime, "setup", "no endpoint program for " + ep.name);
      continue;
    }
    std::int64_t count = 1;
    if (ep.is_family()) count = static_cast<std::int64_t>(std::get<Seq>(global.endpoints.at(ep.name).v).size());
    for (std::int64_t k = 0; k < count; ++k) {
      auto t = std::make_unique<Task>();
      t->owner = {ep.name, k};
      t->name = ep.is_family() ? show(t->owner) : ep.name;
      t->fragment.endpoints = global.endpoints;
      for (const auto& [id, o] : global.objects)
        if (o.owner == t->owner) t->fragment.objects.emplace(id, o);
      t->in = std::make_unique<EpInterp>(p, t->fragment, params, report, t->name);
      t->in->step_limit = opts.step_limit;
      if (ep.is_family()) t->in->declare(prog->self, Value(Int(k)));
      t->frames.push_back({&prog->body, 0, nullptr, {}});
      t->in->push_scope();
      sim.tasks.push_back(std::move(t));
    }
  }
  if (report.failures.empty()) sim.run();
  std::uint64_t inner = 0;
  for (auto& t : sim.tasks) {
    inner += t->in->steps;
    out.fragments.emplace(t->owner, std::move(t->fragment));
  }
  report.steps += inner;
  try {
    report.heap = merge(out.fragments);
  } catch (const RuntimeError& e) {
    report.fail(FailureKind::Runtime, "merge", e.what());
  }
  report.settle();
  return out;
}

}  // namespace chorcc::rt

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "chorcc/ep_projection.hpp"
#include "chorcc/frontend.hpp"
#include "chorcc/json_io.hpp"
#include "chorcc/runtime.hpp"
#include "chorcc/syntax.hpp"

namespace fs = std::filesystem;
using namespace chorcc;

namespace {

const std::vector<std::string> kCorpus = {"two_party", "relay",    "broadcast", "ring",
                                          "par_call",  "loop",     "indexed"};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string source(const std::string& name) {
  return read_text(fs::path(CHORCC_CORPUS_DIR) / (name + ".chor"));
}

std::shared_ptr<const Program> parse_text(const std::string& text) {
  auto r = parse(SourceFile::from_string(text));
  if (!r.ok()) throw std::runtime_error("parse failed");
  return std::make_shared<const Program>(std::move(*r.program));
}

std::shared_ptr<const Program> load(const std::string& name) { return parse_text(source(name)); }

std::string mutate(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw std::runtime_error("mutation anchor not found");
  return text.replace(pos, from.size(), to);
}

rt::Params params_for(const Program& p, int n) {
  rt::Params out;
  for (const auto& prm : p.choreography()->params) out[prm.name] = rt::Value(prm.name == "n" ? n : 3);
  return out;
}

std::size_t count_kind(const rt::RunReport& r, rt::FailureKind k) {
  std::size_t n = 0;
  for (const auto& f : r.failures) n += f.kind == k;
  return n;
}

Int eval_int(const ExprPtr& e, const Int& i) {
  switch (e->kind) {
    case ExprKind::IntLit: return e->value;
    case ExprKind::Var: return i;
    case ExprKind::Unary: return -eval_int(e->kid(0), i);
    case ExprKind::Binary: {
      Int a = eval_int(e->kid(0), i), b = eval_int(e->kid(1), i);
      return e->op == Op::Add ? Int(a + b) : Int(a - b);
    }
    default: throw std::runtime_error("unexpected index node");
  }
}

bool empty_body(const Block& b) {
  for (const auto& s : b) {
    if (is_empty_block(s)) continue;
    const auto* a = s.as<AssertStmt>();
    if (a && a->expr->is_true()) continue;
    return false;
  }
  return true;
}

struct Outcome {
  bool ok;
  std::string detail;
};

// ---------------------------------------------------------------------------

Outcome equivalence() {
  auto start = std::chrono::steady_clock::now();
  int runs = 0;
  for (const auto& name : kCorpus) {
    auto p = load(name);
    for (int n = 0; n <= 8; ++n) {
      for (auto sched : {rt::Schedule::RoundRobin, rt::Schedule::Random}) {
        rt::EquivOptions o;
        o.schedule = sched;
        o.seeds = 3;
        auto r = rt::run_equivalence(p, params_for(*p, n), o);
        ++runs;
        if (r.verdict != rt::Verdict::Pass || r.stages["equivalence"] != "EQUAL")
          return {false, name + " n=" + std::to_string(n) + " not equal"};
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream d;
  d << runs << " runs over " << kCorpus.size() << " programs in " << secs << " s";
  return {secs < 30.0, d.str()};
}

Outcome rule_coverage() {
  const std::set<std::string> cp = {"CpExpr",    "CpExprSkip",    "CpAssign",   "CpIf",
                                    "CpWhile",   "CpMethodCall",  "CpComm",     "CpExprRange",
                                    "CpExprIndex", "CpMethodCallRange", "CpCommRange"};
  const std::set<std::string> ep = {
      "EpAssign",  "EpAssignSkip", "EpSend",      "EpReceive",      "EpComm",        "EpCommSkip",
      "EpExpr",    "EpExprSkip",   "EpExprIndex", "EpRange",        "EpAnd",         "EpChor",
      "EpIf",      "EpWhile",      "EpIndexSend", "EpIndexReceive", "EpRangeSend",   "EpRangeReceive"};
  std::set<std::string> fired;
  for (const auto& name : kCorpus) {
    auto p = load(name);
    for (const auto& r : project_chor(p).trace) fired.insert(r);
    for (const auto& e : project_all(*p))
      for (const auto& r : e.trace) fired.insert(r);
  }
  std::string missing;
  for (const auto* set : {&cp, &ep})
    for (const auto& r : *set)
      if (!fired.count(r)) missing += " " + r;
  return {missing.empty(), missing.empty() ? "11 Cp + 18 Ep rules fired" : "missing:" + missing};
}

Outcome inverter() {
  int checked = 0;
  for (int c = -5; c <= 5; ++c) {
    std::string cs = c < 0 ? "(" + std::to_string(c) + ")" : std::to_string(c);
    for (const std::string& d : {std::string("i"), "i + " + cs, "i - " + cs, cs + " + i"}) {
      auto fwd = parse_expression(d);
      auto inv = invert_index_expr(fwd, "i");
      for (int i = -100; i <= 100; ++i, ++checked)
        if (eval_int(inv, eval_int(fwd, i)) != i) return {false, d + " fails at " + std::to_string(i)};
    }
  }
  for (const char* bad : {"3 - i", "2 * i"}) {
    try {
      invert_index_expr(parse_expression(bad), "i");
      return {false, std::string(bad) + " accepted"};
    } catch (const NotInvertible&) {
    }
  }
  return {true, std::to_string(checked) + " round-trips; c - i and 2 * i rejected"};
}

Outcome injectivity_check() {
  auto mutant = parse_text(mutate(source("ring"), "G[i + 1]: G[i + 1].y", "G[0]: G[0].y"));
  auto v = project_chor(mutant);
  for (int n = 3; n <= 8; ++n) {
    auto r = rt::run_verification_ir(v, {{"n", rt::Value(n)}});
    if (r.checks["injectivity"].failed == 0) return {false, "mutant passes at n=" + std::to_string(n)};
  }
  for (const auto& name : kCorpus) {
    auto p = load(name);
    auto vp = project_chor(p);
    for (int n = 0; n <= 8; ++n) {
      auto r = rt::run_verification_ir(vp, params_for(*p, n));
      if (r.checks["injectivity"].failed != 0) return {false, name + " fails injectivity"};
    }
  }
  return {true, "constant-d mutant fails for ranges of length >= 2; corpus passes"};
}

Outcome conservation() {
  std::uint64_t checks = 0;
  for (const auto& name : kCorpus) {
    auto p = load(name);
    auto v = project_chor(p);
    for (int n = 0; n <= 8; ++n) {
      auto r = rt::run_verification_ir(v, params_for(*p, n));
      if (count_kind(r, rt::FailureKind::Conservation) != 0) return {false, name + " violates conservation"};
      checks += r.conservation_checks;
    }
  }
  return {checks > 0, std::to_string(checks) + " ledger checks, 0 violations"};
}

Outcome confinement() {
  auto mutant = parse_text(
      mutate(source("two_party"), "endpoint b: b.x := b.y + 1;", "endpoint a: b.y := a.x + 1;"));
  auto r = rt::run_verification_ir(project_chor(mutant), {{"k", rt::Value(2)}});
  std::size_t hits = count_kind(r, rt::FailureKind::Confinement);
  if (hits != 1) return {false, "mutant gives " + std::to_string(hits) + " failures"};
  for (const auto& name : kCorpus) {
    auto p = load(name);
    for (int n = 0; n <= 8; ++n) {
      auto c = rt::run_verification_ir(project_chor(p), params_for(*p, n));
      if (count_kind(c, rt::FailureKind::Confinement) != 0) return {false, name + " trips confinement"};
    }
  }
  return {true, "mutant: exactly 1 failure; corpus: 0"};
}

Outcome deadlock() {
  fs::path dir = fs::temp_directory_path() / ("chorcc_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string in = (fs::path(CHORCC_CORPUS_DIR) / "two_party.chor").string();
  std::string bin = CHORCC_BIN;
  if (std::system((bin + " project-ep --all " + in + " -o " + dir.string() + " > /dev/null").c_str()) != 0)
    return {false, "projection failed"};
  json a = json::parse(read_text(dir / "a.ep.json"));
  auto& kids = a["body"]["children"];
  if (kids.empty() || kids[0]["kind"] != "Send") return {false, "unexpected program shape"};
  kids.erase(kids.begin());
  std::ofstream(dir / "a.ep.json") << a.dump(2);
  int status = std::system((bin + " run --mode endpoints --from-dir " + dir.string() + " " + in +
                            " --params k=1 > /dev/null")
                               .c_str());
  fs::remove_all(dir);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code == 2, "exit code " + std::to_string(code)};
}

Outcome schedules() {
  auto p = load("ring");
  auto programs = project_all(*p);
  auto table = build_channel_table(*p->choreography());
  std::string first;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    rt::RunOptions o;
    o.schedule = rt::Schedule::Random;
    o.seed = seed;
    auto run = rt::run_endpoints(*p, programs, table, {{"n", rt::Value(4)}}, o);
    if (run.report.verdict != rt::Verdict::Pass) return {false, "seed " + std::to_string(seed) + " fails"};
    std::string text = dump(rt::to_json(rt::merge(run.fragments)));
    if (seed == 0) first = text;
    if (text != first) return {false, "seed " + std::to_string(seed) + " differs"};
  }
  return {true, "100 seeds, identical merged heap"};
}

Outcome round_trip() {
  for (const auto& name : kCorpus) {
    auto p = load(name);
    auto again = parse_text(pretty(*p));
    if (!structurally_equal(*p, *again) || pretty(*again) != pretty(*p))
      return {false, name + " pretty round-trip"};
    if (!(program_from_json(to_json(*p)) == *p)) return {false, name + " JSON round-trip"};
  }
  return {true, std::to_string(kCorpus.size()) + " files, pretty and JSON"};
}

Outcome skip_soundness() {
  int scanned = 0;
  for (const auto& name : kCorpus) {
    auto p = load(name);
    const auto* c = p->choreography();
    for (const auto& s : c->run) {
      auto involved = sorts_of(s);
      Program one = *p;
      for (auto& d : one.decls)
        if (auto* ch = std::get_if<Choreography>(&d)) {
          ch->run = {s};
          ch->run_contract = {};
        }
      for (const auto& ep : c->endpoints) {
        if (involved.count(ep.name)) continue;
        ++scanned;
        if (!empty_body(project_ep(one, ep.name).body)) return {false, name + " at " + ep.name};
        Target self = ep.is_family() ? Target::indexed(ep.name, ex::var("j")) : Target::singular(ep.name);
        bool clean = true;
        for_each_expr(s, [&](const ExprPtr& e) {
          if (any_node(e, [](const Expr& x) { return x.kind == ExprKind::Endpoint; }) &&
              !ep_expr(e, self)->is_true())
            clean = false;
        });
        if (!clean) return {false, name + " expression at " + ep.name};
      }
    }
  }
  return {true, std::to_string(scanned) + " statement/sort pairs"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"projection equivalence", equivalence},
      {"rule coverage", rule_coverage},
      {"index inverter", inverter},
      {"injectivity", injectivity_check},
      {"permission conservation", conservation},
      {"confinement", confinement},
      {"deadlock detection", deadlock},
      {"schedule independence", schedules},
      {"frontend round-trip", round_trip},
      {"skip soundness", skip_soundness},
  };
  int failed = 0;
  int k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << k << ". " << name << ": " << o.detail << "\n";
  }
  std::cout << (failed ? "acceptance: FAILED" : "acceptance: all criteria passed") << "\n";
  return failed ? 1 : 0;
}

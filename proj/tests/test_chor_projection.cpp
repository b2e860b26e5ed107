#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "chorcc/chor_projection.hpp"
#include "chorcc/syntax.hpp"
#include "support.hpp"

using namespace chorcc;
using chorcc::test::expr;

namespace {

std::string program(const std::string& run, const std::string& extra_methods = "") {
  return "class Node {\n  int x;\n  int y;\n  int buf;\n\n  Node(int v) {\n    this.x = v;\n"
         "    this.y = 0;\n    this.buf = 0;\n  }\n\n  void step() {\n    this.x = this.x + 1;\n  }\n\n"
         "  void set(int k) {\n    this.x = k;\n  }\n" +
         extra_methods +
         "}\n\nchoreography C(int n) {\n  endpoint a = Node(1);\n  endpoint b = Node(2);\n"
         "  endpoint F[i := 0 .. n] = Node(i);\n  endpoint G[i := 0 .. n] = Node(0);\n\n  run {\n" +
         run + "\n  }\n}\n";
}

VerificationProgram project(const std::string& run) {
  return project_chor(test::parse_text(program(run)));
}

std::size_t count_stmts(const Block& b, const std::function<bool(const Stmt&)>& pred);

std::size_t count_stmt(const Stmt& s, const std::function<bool(const Stmt&)>& pred) {
  std::size_t n = pred(s) ? 1 : 0;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, IfStmt>) {
          n += count_stmts(node.then_branch, pred) + count_stmts(node.else_branch, pred);
        } else if constexpr (std::is_same_v<T, WhileStmt> || std::is_same_v<T, BlockStmt> ||
                             std::is_same_v<T, ParStmt> || std::is_same_v<T, ConfinedStmt>) {
          n += count_stmts(node.body, pred);
        }
      },
      s.node);
  return n;
}

std::size_t count_stmts(const Block& b, const std::function<bool(const Stmt&)>& pred) {
  std::size_t n = 0;
  for (const auto& s : b) n += count_stmt(s, pred);
  return n;
}

const Stmt* find_stmt(const Block& b, const std::function<bool(const Stmt&)>& pred) {
  for (const auto& s : b) {
    if (pred(s)) return &s;
    const Stmt* hit = nullptr;
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, IfStmt>) {
            hit = find_stmt(node.then_branch, pred);
            if (!hit) hit = find_stmt(node.else_branch, pred);
          } else if constexpr (std::is_same_v<T, WhileStmt> || std::is_same_v<T, BlockStmt> ||
                               std::is_same_v<T, ParStmt> || std::is_same_v<T, ConfinedStmt>) {
            hit = find_stmt(node.body, pred);
          }
        },
        s.node);
    if (hit) return hit;
  }
  return nullptr;
}

bool choreographic_node(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Endpoint:
    case ExprKind::Chor:
    case ExprKind::Msg:
    case ExprKind::Sender:
    case ExprKind::Receiver:
      return true;
    default:
      return false;
  }
}

/// Minimal evaluator for integer/boolean expressions over `F[k].x`.
struct MiniEval {
  std::map<std::string, long> vars;
  std::vector<long> fx;

  long eval(const ExprPtr& e) const {
    switch (e->kind) {
      case ExprKind::IntLit:
        return static_cast<long>(e->value);
      case ExprKind::BoolLit:
        return e->flag;
      case ExprKind::Var:
        return vars.at(e->name);
      case ExprKind::Confined:
        return eval(e->kid(0));
      case ExprKind::Forall: {
        MiniEval inner = *this;
        for (long k = eval(e->kid(0)); k < eval(e->kid(1)); ++k) {
          inner.vars[e->name] = k;
          if (!inner.eval(e->kid(2))) return 0;
        }
        return 1;
      }
      case ExprKind::Field: {
        REQUIRE(e->kid(0)->kind == ExprKind::SeqIndex);
        long k = eval(e->kid(0)->kid(1));
        REQUIRE(k >= 0);
        REQUIRE(k < static_cast<long>(fx.size()));
        return fx[k];
      }
      case ExprKind::Unary:
        return e->op == Op::Not ? !eval(e->kid(0)) : -eval(e->kid(0));
      case ExprKind::Binary: {
        if (e->op == Op::Implies) return !eval(e->kid(0)) || eval(e->kid(1));
        if (e->op == Op::And || e->op == Op::Star) return eval(e->kid(0)) && eval(e->kid(1));
        long a = eval(e->kid(0)), b = eval(e->kid(1));
        switch (e->op) {
          case Op::Add: return a + b;
          case Op::Sub: return a - b;
          case Op::Mul: return a * b;
          case Op::Lt: return a < b;
          case Op::Le: return a <= b;
          case Op::Gt: return a > b;
          case Op::Ge: return a >= b;
          case Op::Eq: return a == b;
          case Op::Ne: return a != b;
          default: FAIL("unexpected operator"); return 0;
        }
      }
      default:
        FAIL("unexpected node");
        return 0;
    }
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cp_expr examples") {
  auto singular = cp_expr(expr("(\\endpoint a; a.x > 0)"), std::nullopt);
  REQUIRE(singular->kind == ExprKind::Confined);
  CHECK(singular->target->name == "a");
  CHECK(pretty(singular->kid(0)) == "a.x > 0");

  auto range = cp_expr(expr("(\\endpoint F[i := 0 .. n]; F[i].x > 0)"), std::nullopt);
  REQUIRE(range->kind == ExprKind::Forall);
  CHECK(range->name == "i");
  CHECK(pretty(range->kid(0)) == "0");
  CHECK(pretty(range->kid(1)) == "n");
  CHECK_FALSE(any_node(range, choreographic_node));

  CHECK(cp_expr(expr("(\\endpoint b; b.x > 0)"), Target::singular("a"))->is_true());

  RuleTrace trace;
  auto idx = cp_expr(expr("(\\endpoint F[i := 2 .. n]; F[i].x > 0)"),
                     Target::indexed("F", expr("j")), &trace);
  CHECK(pretty(idx) == "2 <= j && j < n ==> F[j].x > 0");
  CHECK(trace == RuleTrace{"CpExprIndex"});
}

TEST_CASE("cp_expr conjunct-wise with rule trace") {
  RuleTrace trace;
  auto e = cp_expr(expr("(\\endpoint a; a.x > 0) && (\\endpoint b; b.x > 1)"), Target::singular("a"),
                   &trace);
  CHECK(pretty(e) == "a.x > 0");
  CHECK(trace == RuleTrace{"CpExpr", "CpExprSkip"});
}

TEST_CASE("CpExprIndex agrees with direct substitution") {
  auto h = expr("(\\endpoint F[i := 2 .. n]; F[i].x > i)");
  auto guarded = cp_expr(h, Target::indexed("F", expr("j")));
  for (int n = 0; n <= 8; ++n) {
    for (int j = 0; j < std::max(n, 1); ++j) {
      MiniEval ev;
      ev.vars = {{"n", n}, {"j", j}};
      for (int k = 0; k < std::max(n, 1); ++k) ev.fx.push_back((k * 7 + n) % 5);
      bool in_range = 2 <= j && j < n;
      bool direct = !in_range || ev.fx[j] > j;
      CHECK(static_cast<bool>(ev.eval(guarded)) == direct);
    }
  }
}

TEST_CASE("skip soundness for cp_expr") {
  for (const char* h : {"(\\endpoint b; b.x > 0)", "(\\endpoint G[i := 0 .. n]; G[i].x > 0)",
                        "(\\endpoint G[3]; G[3].x == 1)"}) {
    CHECK(cp_expr(expr(h), Target::singular("a"))->is_true());
    CHECK(cp_expr(expr(h), Target::indexed("F", expr("j")))->is_true());
  }
}

TEST_CASE("nested endpoint expressions are unsupported") {
  CHECK_THROWS_AS(cp_expr(expr("(\\endpoint a; (\\endpoint b; b.x > 0))"), std::nullopt),
                  UnsupportedSyntax);
}

TEST_CASE("unanimous examples") {
  CHECK(unanimous(expr("(\\endpoint a; a.x > 0)"))->is_true());
  auto two = unanimous(expr("(\\endpoint a; a.x > 0) && (\\endpoint b; b.y > 0)"));
  REQUIRE(two->kind == ExprKind::Binary);
  CHECK(two->op == Op::Eq);
  CHECK(pretty(two) == "(\\confined a; a.x > 0) == (\\confined b; b.y > 0)");
  auto ranges = unanimous(expr("(\\endpoint F[i := 0 .. n]; F[i].x > 0) && (\\endpoint G[i := 0 .. n]; G[i].x > 0)"));
  CHECK(any_node(ranges, [](const Expr& e) { return e.kind == ExprKind::Forall; }));
  CHECK_FALSE(any_node(ranges, choreographic_node));
}

TEST_CASE("cp_resource keeps chor bodies") {
  auto r = cp_resource(expr("(\\chor a.x == b.x)"));
  CHECK(pretty(r) == "a.x == b.x");
  auto p = cp_resource(expr("(\\endpoint a; Perm(a.x, 1))"));
  REQUIRE(p->kind == ExprKind::Confined);
  CHECK(pretty(p->kid(0)) == "Perm(a.x, 1)");
  auto mixed = cp_resource(expr("(\\endpoint a; Perm(a.x, 1)) ** (\\chor a.x == b.x)"));
  REQUIRE(mixed->op == Op::Star);
  CHECK(same(mixed->kid(0), p));
  CHECK(same(mixed->kid(1), r));
}

TEST_CASE("cp_assign") {
  auto v = project("endpoint a: a.x := a.y + 1;");
  REQUIRE(v.body.size() == 1);
  const auto* c = v.body[0].as<ConfinedStmt>();
  REQUIRE(c);
  CHECK(c->target.name == "a");
  REQUIRE(c->body.size() == 1);
  CHECK(pretty(c->body[0]) == "a.x = a.y + 1;\n");
  CHECK(v.trace == RuleTrace{"CpAssign"});

  auto idx = project("endpoint F[0]: F[0].x := 1;");
  const auto* ci = idx.body.at(0).as<ConfinedStmt>();
  REQUIRE(ci);
  CHECK(ci->target.is_indexed());

  try {
    (void)project("endpoint F[i := 0 .. n]: F[i].x := 1;");
    FAIL("expected UnsupportedSyntax");
  } catch (const UnsupportedSyntax& e) {
    CHECK(std::string(e.what()).find("method") != std::string::npos);
  }
}

TEST_CASE("empty run body projects to setup only") {
  auto v = project("");
  CHECK(v.body.empty());
  CHECK(v.setup.size() == 4);
  CHECK(v.setup[0].is<NewEndpointStmt>());
}

TEST_CASE("cp_if asserts unanimity before the branch") {
  auto v = project("if ((\\endpoint a; a.x > 0)) {\n} else {\n}");
  REQUIRE(v.body.size() == 1);
  const auto& out = v.body[0].as<BlockStmt>()->body;
  REQUIRE(out.size() == 2);
  const auto* as = out[0].as<AssertStmt>();
  REQUIRE(as);
  CHECK(as->check == "unanimity");
  CHECK(as->expr->is_true());
  const auto* i = out[1].as<IfStmt>();
  REQUIRE(i);
  CHECK(i->cond->kind == ExprKind::Confined);
  CHECK(i->then_branch.empty());
  CHECK(i->else_branch.empty());
}

TEST_CASE("cp_while re-asserts unanimity each iteration") {
  auto v = project("while ((\\endpoint a; a.x < 3) && (\\endpoint b; b.x < 3)) {\n"
                   "  endpoint a: a.step();\n  endpoint b: b.step();\n}");
  REQUIRE(v.body.size() == 1);
  const auto& out = v.body[0].as<BlockStmt>()->body;
  REQUIRE(out.size() == 2);
  CHECK(out[0].as<AssertStmt>()->check == "unanimity");
  const auto* w = out[1].as<WhileStmt>();
  REQUIRE(w);
  CHECK(count_stmts(w->body, [](const Stmt& s) {
          const auto* a = s.as<AssertStmt>();
          return a && a->check == "unanimity";
        }) == 1);
  auto r = rt::run_verification_ir(v, {{"n", rt::Value(2)}});
  CHECK(r.checks["unanimity"].failed == 1);
}

TEST_CASE("cp_method_call") {
  auto v = project("endpoint a: a.step();");
  const auto* c = v.body.at(0).as<ConfinedStmt>();
  REQUIRE(c);
  const auto* call = c->body.at(0).as<CallStmt>();
  REQUIRE(call);
  CHECK(call->method == "step");
  CHECK(call->adapted);

  auto args = project("endpoint a: a.set(3);");
  const auto* ca = args.body.at(0).as<ConfinedStmt>()->body.at(0).as<CallStmt>();
  REQUIRE(ca);
  REQUIRE(ca->args.size() == 1);
  CHECK(pretty(ca->args[0]) == "3");

  auto fam = project("endpoint F[2]: F[2].step();");
  CHECK(pretty(fam.body.at(0)) == "confined (F[2]) {\n  F[2].step() /* adapted */;\n}\n");
  CHECK(fam.trace == RuleTrace{"CpMethodCall"});
}

TEST_CASE("cp_comm exhales at the sender and inhales at the receiver") {
  auto v = project("channel_invariant \\msg >= 0;\ncommunicate a: a.x -> b: b.y;");
  REQUIRE(v.body.size() == 1);
  const auto* blk = v.body[0].as<BlockStmt>();
  REQUIRE(blk);
  REQUIRE(blk->body.size() == 4);
  CHECK(blk->body[0].is<DeclStmt>());
  const auto* ex = blk->body[1].as<ConfinedStmt>();
  const auto* in = blk->body[2].as<ConfinedStmt>();
  REQUIRE(ex);
  REQUIRE(in);
  CHECK(ex->target.name == "a");
  CHECK(in->target.name == "b");
  const auto* exs = ex->body.at(0).as<ExhaleStmt>();
  const auto* ins = in->body.at(0).as<InhaleStmt>();
  REQUIRE(exs);
  REQUIRE(ins);
  CHECK(same(exs->expr, ins->expr));
  const std::string& var = blk->body[0].as<DeclStmt>()->name;
  CHECK(pretty(exs->expr) == var + " >= 0");
  CHECK(blk->body[3].as<ConfinedStmt>()->target.name == "b");
}

TEST_CASE("cp_comm defaults the invariant to true") {
  auto v = project("communicate a: a.x -> b: b.y;");
  const auto* blk = v.body.at(0).as<BlockStmt>();
  REQUIRE(blk);
  CHECK(blk->body[1].as<ConfinedStmt>()->body[0].as<ExhaleStmt>()->expr->is_true());
  CHECK(blk->body[2].as<ConfinedStmt>()->body[0].as<InhaleStmt>()->expr->is_true());
}

TEST_CASE("cp_comm transfers permissions through the ledger") {
  auto v = project("channel_invariant Perm(\\sender.buf, 1\\2);\ncommunicate a: a.x -> b: b.y;\n"
                   "channel_invariant Perm(\\receiver.buf, 1\\2);\ncommunicate b: b.x -> a: a.y;");
  auto r = rt::run_verification_ir(v, {{"n", rt::Value(1)}});
  CHECK(r.verdict == rt::Verdict::Pass);
  CHECK(r.conservation_checks == 4);

  auto forged = project("channel_invariant Perm(\\receiver.buf, 1\\2);\ncommunicate a: a.x -> b: b.y;");
  auto f = rt::run_verification_ir(forged, {{"n", rt::Value(1)}});
  CHECK(f.verdict == rt::Verdict::Fail);
}

TEST_CASE("cp_method_call_range") {
  auto v = project("endpoint F[i := 0 .. n]: F[i].step();");
  const auto* par = v.body.at(0).as<ParStmt>();
  REQUIRE(par);
  CHECK(par->binder == "i");
  CHECK(pretty(par->hi) == "n");
  CHECK(v.trace == RuleTrace{"CpMethodCallRange"});

  auto empty = project("endpoint F[i := 2 .. 2]: F[i].step();");
  const auto* ep = empty.body.at(0).as<ParStmt>();
  REQUIRE(ep);
  CHECK(pretty(ep->lo) == "2");
  CHECK(pretty(ep->hi) == "2");
  auto r = rt::run_verification_ir(empty, {{"n", rt::Value(3)}});
  CHECK(r.verdict == rt::Verdict::Pass);

  CHECK_THROWS_AS(project("endpoint F[i := 0 .. n]: G[i].step();"), UnsupportedSyntax);
}

TEST_CASE("cp_comm_range on the ring shift") {
  auto v = project_chor(test::corpus("ring"));
  const auto* blk = v.body.at(0).as<BlockStmt>();
  REQUIRE(blk);
  REQUIRE(blk->body.size() == 2);
  const auto* inj = blk->body[0].as<AssertStmt>();
  REQUIRE(inj);
  CHECK(inj->check == "injectivity");
  const auto* par = blk->body[1].as<ParStmt>();
  REQUIRE(par);
  CHECK(par->body.size() == 4);
  CHECK(pretty(par->hi) == "n - 1");
}

TEST_CASE("injectivity helper is falsifiable for constant d") {
  MiniEval ev;
  for (int len = 0; len <= 4; ++len) {
    auto hi = ex::int_lit(len);
    CHECK(static_cast<bool>(ev.eval(injectivity("i", expr("0"), hi, expr("0")))) == (len < 2));
    CHECK(ev.eval(injectivity("i", expr("0"), hi, expr("i + 1"))));
    CHECK(ev.eval(injectivity("i", expr("0"), hi, expr("i"))));
  }
}

TEST_CASE("no choreographic nodes survive projection") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto v = project_chor(test::corpus(name));
    std::size_t hits = 0;
    for (const auto* b : {&v.setup, &v.body})
      for (const auto& s : *b)
        for_each_expr(s, [&](const ExprPtr& e) { hits += any_node(e, choreographic_node); });
    CHECK(hits == 0);
  }
}

TEST_CASE("every communicate yields one exhale and one inhale") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    auto v = project_chor(p);
    auto sites = communicate_sites(p->choreography()->run);
    auto exhales = count_stmts(v.body, [](const Stmt& s) { return s.is<ExhaleStmt>(); });
    auto inhales = count_stmts(v.body, [](const Stmt& s) { return s.is<InhaleStmt>(); });
    CHECK(exhales == sites.size());
    CHECK(inhales == sites.size());
    const Stmt* ex = find_stmt(v.body, [](const Stmt& s) { return s.is<ExhaleStmt>(); });
    const Stmt* in = find_stmt(v.body, [](const Stmt& s) { return s.is<InhaleStmt>(); });
    if (ex && in) CHECK(same(ex->as<ExhaleStmt>()->expr, in->as<InhaleStmt>()->expr));
  }
}

TEST_CASE("projection is total and deterministic on the corpus") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    auto a = project_chor(p), b = project_chor(test::corpus(name));
    CHECK(pretty(a) == pretty(b));
    CHECK(dump(to_json(a)) == dump(to_json(b)));
    CHECK(a.trace == b.trace);
  }
}

TEST_CASE("ring matches the golden verification program") {
  auto v = project_chor(test::corpus("ring"));
  CHECK(pretty(v) == read_file(std::string(CHORCC_GOLDEN_DIR) + "/ring.ir.txt"));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chorcc/json_io.hpp"
#include "support.hpp"

using namespace chorcc;
using chorcc::test::expr;

namespace {

std::string wrap_run(const std::string& body) {
  return "class Node {\n  int x;\n  int y;\n}\n\nchoreography C(int n) {\n"
         "  endpoint a = Node();\n  endpoint b = Node();\n"
         "  endpoint F[i := 0 .. n] = Node();\n\n  run {\n" +
         body + "\n  }\n}\n";
}

const ChorStmt& first_stmt(const Program& p) { return p.choreography()->run.at(0); }

}  // namespace

TEST_CASE("communicate statement parses into sender and receiver") {
  auto p = test::parse_text(wrap_run("communicate a: a.x -> b: b.y;"));
  const auto* c = first_stmt(*p).as<Communicate>();
  REQUIRE(c);
  CHECK(c->sender.is_singular());
  CHECK(c->sender.name == "a");
  CHECK(c->receiver.is_singular());
  CHECK(c->receiver.name == "b");
  CHECK(pretty(c->message) == "a.x");
  CHECK(pretty(c->destination) == "b.y");
  CHECK(c->invariant == nullptr);
}

TEST_CASE("empty file reports a missing choreography") {
  auto r = parse(SourceFile::from_string(""));
  CHECK_FALSE(r.ok());
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].rule == RuleId::MissingChoreography);
}

TEST_CASE("family declaration records binder and size") {
  auto p = test::parse_text(wrap_run(""));
  const auto* f = p->choreography()->find_endpoint("F");
  REQUIRE(f);
  CHECK(f->is_family());
  CHECK(f->binder == "i");
  CHECK(pretty(f->size) == "n");
  CHECK(f->class_name == "Node");
  CHECK_FALSE(p->choreography()->find_endpoint("a")->is_family());
}

TEST_CASE("syntax errors carry locations") {
  auto r = parse(SourceFile::from_string(wrap_run("communicate a: a.x -> ;")));
  CHECK_FALSE(r.ok());
  REQUIRE_FALSE(r.diagnostics.empty());
  CHECK(r.diagnostics[0].rule == RuleId::Syntax);
  CHECK(r.diagnostics[0].begin.line == 12);
}

TEST_CASE("lexer keeps backslash keywords whole") {
  std::vector<Diagnostic> ds;
  auto toks = lex(SourceFile::from_string("(\\endpoint a; \\msg) 1\\2"), ds);
  CHECK(ds.empty());
  REQUIRE(toks.size() >= 8);
  CHECK(toks[1].text == "\\endpoint");
  CHECK(toks[4].text == "\\msg");
}

TEST_CASE("pretty prints fractions and endpoint expressions") {
  CHECK(pretty(expr("Perm(a.x, 1\\2)")) == "Perm(a.x, 1\\2)");
  CHECK(pretty(expr("(\\endpoint F[i := 0 .. n]; F[i].x > 0)")) ==
        "(\\endpoint F[i := 0 .. n]; F[i].x > 0)");
  CHECK(pretty(expr("(\\chor a.x == b.x)")) == "(\\chor a.x == b.x)");
}

TEST_CASE("operator precedence") {
  CHECK(pretty(expr("a ==> b ==> c")) == "a ==> b ==> c");
  auto imp = expr("a ==> b ==> c");
  CHECK(imp->op == Op::Implies);
  CHECK(imp->kid(0)->kind == ExprKind::Var);
  CHECK(imp->kid(1)->op == Op::Implies);

  auto st = expr("p ** q ==> r");
  CHECK(st->op == Op::Implies);
  CHECK(st->kid(0)->op == Op::Star);

  auto an = expr("p && q ** r");
  CHECK(an->op == Op::Star);
  CHECK(an->kid(0)->op == Op::And);

  auto ar = expr("1 + 2 * 3");
  CHECK(ar->op == Op::Add);
  CHECK(ar->kid(1)->op == Op::Mul);

  CHECK(pretty(expr("(1 + 2) * 3")) == "(1 + 2) * 3");
  CHECK(pretty(expr("1 - (2 - 3)")) == "1 - (2 - 3)");
  CHECK_THROWS_AS(expr("1 < 2 < 3"), std::invalid_argument);
}

TEST_CASE("corpus round-trips through pretty") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p1 = test::corpus(name);
    std::string text = pretty(*p1);
    auto p2 = test::parse_text(text);
    CHECK(structurally_equal(*p1, *p2));
    CHECK(pretty(*p2) == text);
  }
}

TEST_CASE("corpus round-trips through JSON") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    json j = to_json(*p);
    CHECK(j["schema"] == 1);
    Program back = program_from_json(j);
    CHECK(back == *p);
    CHECK(dump(to_json(back)) == dump(j));
    CHECK(dump(json::parse(dump(j))) == dump(j));
  }
}

TEST_CASE("parsing is deterministic") {
  std::string text = test::read_corpus("loop");
  CHECK(dump(to_json(*test::parse_text(text))) == dump(to_json(*test::parse_text(text))));
}

TEST_CASE("pragma lines pass through") {
  auto p = test::corpus("ring");
  REQUIRE(p->pragmas.size() == 1);
  CHECK(pretty(*p).rfind("//!", 0) == 0);
}

TEST_CASE("malformed kind is a schema error with a path") {
  json j = to_json(*test::corpus("two_party"));
  std::string text = j.dump();
  auto pos = text.find("\"Communicate\"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 13, "\"Comunicate\"");
  try {
    (void)program_from_json(json::parse(text));
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.path().rfind("/children/", 0) == 0);
    CHECK(e.path().find("/kind") != std::string::npos);
    CHECK(std::string(e.what()).find("Comunicate") != std::string::npos);
  }
}

TEST_CASE("hand-written assert JSON decodes") {
  json j = json::parse(R"({"kind": "ChorAssert", "children": [{"kind": "BoolLit", "value": true}]})");
  ChorStmt s = chor_stmt_from_json(j);
  const auto* a = s.as<ChorAssert>();
  REQUIRE(a);
  CHECK(a->expr->is_true());
}

TEST_CASE("expression JSON round-trip") {
  for (const char* text :
       {"Perm(a.x, 1\\2) ** a.x > 0", "(\\endpoint F[i := 0 .. n]; F[i].x == i)",
        "(\\forall int k = 0 .. n; s[k] >= 0)", "-x + |s| % 3", "!(p || q) ==> r"}) {
    CAPTURE(text);
    auto e = expr(text);
    CHECK(same(expr_from_json(to_json(e)), e));
  }
}

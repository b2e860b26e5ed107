#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chorcc/syntax.hpp"
#include "support.hpp"

using namespace chorcc;
using chorcc::test::expr;

namespace {

const char* kClasses = R"(
class Cell {
  int x;
  int y;

  ensures Perm(this.x, 1);
  Cell(int v) {
    this.x = v;
    this.y = 0;
  }

  void m0() {
    this.y = 1;
  }

  requires Perm(this.x, 1);
  ensures this.x == 3;
  void m1() {
    this.x = 3;
  }

  requires Perm(this.x, 1) ** this.x > 0;
  void m2(int k) {
    this.x = k;
  }
}

choreography C(int n) {
  endpoint a = Cell(1);
  endpoint b = Cell(2);
  endpoint F[i := 0 .. n] = Cell(i);

  run {
  }
}
)";

std::string strip_this(std::string text, const std::string& recv) {
  std::string out;
  const std::string needle = "this";
  std::size_t pos = 0;
  while (true) {
    auto hit = text.find(needle, pos);
    if (hit == std::string::npos) break;
    out += text.substr(pos, hit - pos) + recv;
    pos = hit + needle.size();
  }
  return out + text.substr(pos);
}

bool has_rule(const std::vector<Diagnostic>& ds, RuleId r) {
  for (const auto& d : ds)
    if (d.rule == r) return true;
  return false;
}

}  // namespace

TEST_CASE("sort maps every target shape to its endpoint name") {
  CHECK(sort(Target::singular("a")) == "a");
  CHECK(sort(Target::indexed("F", expr("i"))) == "F");
  CHECK(sort(Target::range("F", "i", expr("0"), expr("N"))) == "F");
}

TEST_CASE("sort agrees on indexed and ranged forms of one family") {
  for (const char* idx : {"0", "i", "k + 2", "n - 1"}) {
    Target a = Target::indexed("F", expr(idx));
    Target b = Target::range("F", "i", expr("0"), expr(idx));
    CHECK(sort(a) == sort(b));
  }
}

TEST_CASE("covers examples") {
  auto range = Target::range("F", "i", expr("0"), expr("N"));
  CHECK(covers(range, Target::singular("b")) == Coverage::No);
  CHECK(covers(range, Target::indexed("F", expr("j"))) == Coverage::Maybe);
  CHECK(covers(Target::indexed("G", expr("5")), Target::indexed("F", expr("5"))) == Coverage::No);
  CHECK(covers(Target::singular("a"), Target::singular("a")) == Coverage::Maybe);
}

TEST_CASE("covers No implies disjoint instance sets for small valuations") {
  struct T {
    Target t;
    std::function<std::set<std::pair<std::string, int>>(int)> denote;
  };
  std::vector<T> targets = {
      {Target::singular("a"), [](int) { return std::set<std::pair<std::string, int>>{{"a", 0}}; }},
      {Target::singular("b"), [](int) { return std::set<std::pair<std::string, int>>{{"b", 0}}; }},
      {Target::indexed("F", expr("1")),
       [](int) { return std::set<std::pair<std::string, int>>{{"F", 1}}; }},
      {Target::indexed("G", expr("1")),
       [](int) { return std::set<std::pair<std::string, int>>{{"G", 1}}; }},
      {Target::range("F", "i", expr("0"), expr("N")),
       [](int n) {
         std::set<std::pair<std::string, int>> s;
         for (int k = 0; k < n; ++k) s.insert({"F", k});
         return s;
       }},
  };
  for (const auto& alpha : targets) {
    for (const auto& r : targets) {
      if (r.t.is_range()) continue;
      if (covers(alpha.t, r.t) != Coverage::No) continue;
      for (int n = 0; n <= 5; ++n) {
        auto x = alpha.denote(n), y = r.denote(n);
        for (const auto& e : x) CHECK(y.count(e) == 0);
      }
    }
  }
}

TEST_CASE("contract_pre and contract_post substitute the receiver") {
  auto p = test::parse_text(kClasses);
  CHECK(contract_pre(*p, {"Cell", "m0"}, expr("a"))->is_true());
  CHECK(pretty(contract_pre(*p, {"Cell", "m1"}, expr("F[j]"))) == "Perm(F[j].x, 1)");
  CHECK(pretty(contract_pre(*p, {"Cell", "m2"}, expr("b"))) == "Perm(b.x, 1) ** b.x > 0");
  CHECK(pretty(contract_post(*p, {"Cell", "m1"}, expr("a"))) == "a.x == 3");
  CHECK(contract_post(*p, {"Cell", "m0"}, expr("F[0]"))->is_true());
  CHECK(pretty(contract_post(*p, {"Cell", ""}, expr("tmp"))) == "Perm(tmp.x, 1)");
}

TEST_CASE("contract substitution matches a textual oracle") {
  auto p = test::parse_text(kClasses);
  const ClassDecl* cell = p->find_class("Cell");
  REQUIRE(cell);
  for (const char* recv : {"a", "b", "F[j]", "F[2]"}) {
    for (const auto& m : cell->methods) {
      auto got = contract_pre(*p, {"Cell", m.name}, expr(recv));
      std::string want = pretty(ex::conj(m.contract.pre, Op::Star));
      CHECK(pretty(got) == strip_this(want, recv));
      auto post = contract_post(*p, {"Cell", m.name}, expr(recv));
      CHECK(pretty(post) == strip_this(pretty(ex::conj(m.contract.post, Op::Star)), recv));
    }
  }
}

TEST_CASE("contract substitution is idempotent") {
  auto p = test::parse_text(kClasses);
  auto once = contract_pre(*p, {"Cell", "m2"}, expr("b"));
  auto twice = replace_this(once, expr("b"));
  CHECK(same(once, twice));
  CHECK_FALSE(any_node(once, [](const Expr& e) { return e.kind == ExprKind::This; }));
}

TEST_CASE("contract lookup errors") {
  auto p = test::parse_text(kClasses);
  CHECK_THROWS_AS(contract_pre(*p, {"Nope", "m0"}, expr("a")), ResolutionError);
  CHECK_THROWS_AS(contract_pre(*p, {"Cell", "nope"}, expr("a")), ResolutionError);
  CHECK_THROWS_AS(contract_pre(*p, {"Cell", "m2"}, expr("F[k]")), ResolutionError);
}

TEST_CASE("sorts_of collects target names") {
  auto p = test::corpus("broadcast");
  const auto& run = p->choreography()->run;
  CHECK(sorts_of(run[0]) == std::set<SortTag>{"l", "F"});
  CHECK(sorts_of(run[1]) == std::set<SortTag>{"F"});
  CHECK(sorts_of(run[2]) == std::set<SortTag>{"F", "G"});
}

TEST_CASE("clean corpus is well-formed") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    CHECK(check_wellformed(*p).empty());
  }
}

TEST_CASE("chor expression in a while condition is rejected") {
  auto text = test::mutate(test::read_corpus("loop"), "while ((\\endpoint a; a.c < a.lim)",
                           "while ((\\endpoint a; a.c < a.lim) && (\\chor a.c == b.c)");
  auto ds = check_wellformed(*test::parse_text(text));
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].rule == RuleId::ChorPlacement);
  CHECK(ds[0].begin.line > 0);
}

TEST_CASE("placeholder in a method body is rejected") {
  auto text = test::mutate(test::read_corpus("ring"), "this.y = -1;", "this.y = \\msg;");
  auto ds = check_wellformed(*test::parse_text(text));
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].rule == RuleId::PlaceholderPlacement);
}

TEST_CASE("negative endpoint expression is rejected") {
  auto text = test::mutate(test::read_corpus("ring"), "assert (\\endpoint G[i := 1 .. n]; G[i].y == i - 1);",
                           "assert !(\\endpoint G[i := 1 .. n]; G[i].y == i - 1);");
  auto ds = check_wellformed(*test::parse_text(text));
  CHECK(has_rule(ds, RuleId::EndpointPositivity));
}

TEST_CASE("condition must be a conjunction of endpoint expressions") {
  auto text = test::mutate(test::read_corpus("loop"), "if ((\\endpoint a; a.c == a.lim) && (\\endpoint b; b.acc >= 0))",
                           "if ((\\endpoint a; a.c == a.lim) || (\\endpoint b; b.acc >= 0))");
  auto ds = check_wellformed(*test::parse_text(text));
  CHECK(has_rule(ds, RuleId::ConditionShape));
}

TEST_CASE("unknown endpoint is unresolved") {
  auto text = test::mutate(test::read_corpus("relay"), "endpoint c: c.v := c.w * 2;", "endpoint d: d.v := 1;");
  auto ds = check_wellformed(*test::parse_text(text));
  CHECK(!ds.empty());
}

TEST_CASE("check_wellformed is deterministic") {
  auto text = test::mutate(test::read_corpus("loop"), "while ((\\endpoint a; a.c < a.lim)",
                           "while ((\\endpoint a; a.c < a.lim) && (\\chor a.c == b.c)");
  text = test::mutate(text, "this.c = this.c + 1;", "this.c = \\msg;");
  auto p = test::parse_text(text);
  auto a = check_wellformed(*p);
  auto b = check_wellformed(*test::parse_text(text));
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].rule == b[k].rule);
    CHECK(a[k].message == b[k].message);
    CHECK(a[k].begin.line == b[k].begin.line);
  }
}

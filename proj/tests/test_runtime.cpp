#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chorcc/runtime.hpp"
#include "support.hpp"

using namespace chorcc;
using namespace chorcc::rt;

namespace {

const Object& member(const Heap& h, const std::string& family, int k) {
  const auto& refs = std::get<Seq>(h.endpoints.at(family).v);
  return h.objects.at(std::get<Ref>(refs.at(k).v).id);
}

const Object& single(const Heap& h, const std::string& name) {
  return h.objects.at(std::get<Ref>(h.endpoints.at(name).v).id);
}

std::size_t count_kind(const RunReport& r, FailureKind k) {
  std::size_t n = 0;
  for (const auto& f : r.failures) n += f.kind == k;
  return n;
}

RunReport ir(const std::string& text, int n) {
  auto p = test::parse_text(text);
  return run_verification_ir(project_chor(p), test::params_for(*p, n));
}

const char* kPair = R"(
class Node {
  int x;
  int y;

  Node(int v) {
    this.x = v;
    this.y = 0;
  }
}

choreography P(int n) {
  endpoint a = Node(7);
  endpoint b = Node(0);

  run {
    RUN
  }
}
)";

std::string pair(const std::string& run) { return test::mutate(kPair, "RUN", run); }

}  // namespace

TEST_CASE("values show and serialize") {
  CHECK(show(Value(5)) == "5");
  CHECK(show(Value(true)) == "true");
  Int big = Int(1) << 100;
  for (const Value& v : {Value(5), Value(-3), Value(big), Value(true), Value(Ref{4}), Value(Ref{}),
                         Value(Fraction(1, 2)), Value(Seq{Value(1), Value(Seq{Value(false)})})}) {
    CAPTURE(show(v));
    CHECK(value_from_json(to_json(v)) == v);
  }
  CHECK(to_json(Value(big)).is_string());
  CHECK(to_json(Value(5)).is_number_integer());
}

TEST_CASE("params parse") {
  auto p = parse_params("n=4, flag=true,k=-2");
  CHECK(p.at("n") == Value(4));
  CHECK(p.at("flag") == Value(true));
  CHECK(p.at("k") == Value(-2));
  CHECK(parse_params("").empty());
  CHECK_THROWS(parse_params("n"));
  CHECK_THROWS(parse_params("n=x"));
}

TEST_CASE("setup allocates objects in declaration order") {
  auto p = test::corpus("ring");
  Heap h = setup(*p, test::params_for(*p, 3));
  CHECK(h.objects.size() == 6);
  CHECK(h.objects.begin()->first == 1);
  CHECK(member(h, "F", 2).fields.at("x") == Value(2));
  CHECK(member(h, "G", 0).fields.at("y") == Value(-1));
  CHECK(member(h, "G", 1).owner == Owner{"G", 1});
  CHECK(heap_from_json(to_json(h)) == h);
}

TEST_CASE("setup checks constructor contracts") {
  auto p = test::corpus("two_party");
  CHECK_NOTHROW(setup(*p, {{"k", Value(3)}}));
  auto bad = test::parse_text(test::mutate(test::read_corpus("two_party"), "this.x = v;", "this.x = v + 1;"));
  CHECK_THROWS_AS(setup(*bad, {{"k", Value(3)}}), RuntimeError);
}

TEST_CASE("reference run copies messages") {
  auto p = test::parse_text(pair("communicate a: a.x -> b: b.y;"));
  Heap h = run_choreography(*p, {{"n", Value(0)}});
  CHECK(single(h, "b").fields.at("y") == Value(7));
}

TEST_CASE("reference run of the ring shift") {
  auto p = test::corpus("ring");
  Heap h = run_choreography(*p, {{"n", Value(4)}});
  for (int i = 0; i <= 2; ++i) CHECK(member(h, "G", i + 1).fields.at("y") == Value(i));
  CHECK(member(h, "G", 0).fields.at("y") == Value(-1));
}

TEST_CASE("family size zero makes ranged statements no-ops") {
  for (const auto& name : {"ring", "broadcast", "par_call"}) {
    CAPTURE(name);
    auto p = test::corpus(name);
    Heap h = run_choreography(*p, test::params_for(*p, 0));
    CHECK(h == setup(*p, test::params_for(*p, 0)));
  }
}

TEST_CASE("reference run raises on failed assertions") {
  auto p = test::parse_text(pair("assert (\\endpoint a; a.x == 8);"));
  CHECK_THROWS_AS(run_choreography(*p, {{"n", Value(0)}}), AssertionFailure);
}

TEST_CASE("arithmetic edge cases") {
  auto p = test::parse_text(pair("endpoint a: a.y := -7 / 2;\nendpoint b: b.y := -7 % 2;"));
  Heap h = run_choreography(*p, {{"n", Value(0)}});
  CHECK(single(h, "a").fields.at("y") == Value(-3));
  CHECK(single(h, "b").fields.at("y") == Value(-1));
  auto z = test::parse_text(pair("endpoint a: a.y := a.x / b.x;"));
  CHECK_THROWS_AS(run_choreography(*z, {{"n", Value(0)}}), RuntimeError);
}

TEST_CASE("IR: clean corpus passes every check") {
  for (const auto& name : test::corpus_names()) {
    for (int n : {0, 1, 4}) {
      CAPTURE(name);
      CAPTURE(n);
      auto p = test::corpus(name);
      auto r = run_verification_ir(project_chor(p), test::params_for(*p, n));
      CHECK(r.verdict == Verdict::Pass);
      CHECK(r.failures.empty());
      CHECK(r.heap == run_choreography(*p, test::params_for(*p, n)));
    }
  }
}

TEST_CASE("IR: exhaling a permission twice fails at the second exhale") {
  auto r = ir(pair("channel_invariant Perm(\\sender.x, 1);\ncommunicate a: a.x -> b: b.y;\n"
                   "channel_invariant Perm(\\sender.x, 1);\ncommunicate a: a.x -> b: b.y;"),
              0);
  REQUIRE(count_kind(r, FailureKind::Permission) == 1);
  const auto& f = *std::find_if(r.failures.begin(), r.failures.end(),
                                [](const Failure& f) { return f.kind == FailureKind::Permission; });
  CHECK(f.loc.line == 19);
  CHECK(r.verdict == Verdict::Fail);
}

TEST_CASE("IR: constant receiver index fails injectivity") {
  auto text = test::mutate(test::read_corpus("ring"), "G[i + 1]: G[i + 1].y", "G[0]: G[0].y");
  auto p = test::parse_text(text);
  auto r = run_verification_ir(project_chor(p), {{"n", Value(3)}});
  CHECK(r.checks["injectivity"].failed == 1);
  CHECK(count_kind(r, FailureKind::ParDisjointness) == 1);
  auto ok = run_verification_ir(project_chor(p), {{"n", Value(2)}});
  CHECK(ok.checks["injectivity"].failed == 0);
}

TEST_CASE("IR: foreign write inside a confined scope trips confinement once") {
  auto text = test::mutate(test::read_corpus("two_party"), "endpoint b: b.x := b.y + 1;",
                           "endpoint a: b.y := a.x + 1;");
  auto p = test::parse_text(text);
  auto r = run_verification_ir(project_chor(p), {{"k", Value(2)}});
  CHECK(count_kind(r, FailureKind::Confinement) == 1);
}

TEST_CASE("IR: inhale without a source is a check failure") {
  auto r = ir(pair("channel_invariant Perm(\\receiver.y, 1\\2);\ncommunicate a: a.x -> b: b.y;"), 0);
  CHECK(count_kind(r, FailureKind::Check) == 1);
  CHECK(count_kind(r, FailureKind::Permission) == 1);
}

TEST_CASE("IR: false channel invariant fails the exhale") {
  auto r = ir(pair("channel_invariant \\msg == 8;\ncommunicate a: a.x -> b: b.y;"), 0);
  CHECK(count_kind(r, FailureKind::Exhale) == 1);
  CHECK(count_kind(r, FailureKind::Check) == 1);
}

TEST_CASE("IR: permissions are conserved") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    auto r = run_verification_ir(project_chor(p), test::params_for(*p, 3));
    CHECK(count_kind(r, FailureKind::Conservation) == 0);
    if (!communicate_sites(p->choreography()->run).empty()) CHECK(r.conservation_checks > 0);
  }
}

TEST_CASE("IR: unanimity failure is recorded") {
  auto text = test::mutate(test::read_corpus("loop"), "endpoint b = Counter(rounds);", "endpoint b = Counter(rounds + 1);");
  auto p = test::parse_text(text);
  auto r = run_verification_ir(project_chor(p), {{"n", Value(1)}, {"rounds", Value(2)}});
  CHECK(r.checks["unanimity"].failed >= 1);
  CHECK(r.verdict == Verdict::Fail);
}

TEST_CASE("IR: report serializes") {
  auto p = test::corpus("relay");
  auto r = run_verification_ir(project_chor(p), {{"k", Value(1)}});
  json j = to_json(r);
  CHECK(j["kind"] == "RunReport");
  CHECK(j["verdict"] == "PASS");
  CHECK(j["mode"] == "ir");
  CHECK(j["conservation_checks"].get<int>() > 0);
}

TEST_CASE("endpoints: single send and receive") {
  auto p = test::parse_text(pair("communicate a: a.x -> b: b.y;"));
  auto run = run_endpoints(*p, project_all(*p), build_channel_table(*p->choreography()), {{"n", Value(0)}});
  CHECK(run.report.verdict == Verdict::Pass);
  CHECK(run.fragments.size() == 2);
  CHECK(single(run.report.heap, "b").fields.at("y") == Value(7));
}

TEST_CASE("endpoints: a missing send deadlocks") {
  auto p = test::corpus("two_party");
  auto programs = project_all(*p);
  auto& a = *std::find_if(programs.begin(), programs.end(), [](const auto& e) { return e.sort == "a"; });
  REQUIRE(a.body.at(0).is<SendStmt>());
  a.body.erase(a.body.begin());
  for (auto sched : {Schedule::RoundRobin, Schedule::Random}) {
    RunOptions o;
    o.schedule = sched;
    auto run = run_endpoints(*p, programs, build_channel_table(*p->choreography()), {{"k", Value(1)}}, o);
    CHECK(run.report.verdict == Verdict::Deadlock);
    CHECK(count_kind(run.report, FailureKind::Deadlock) == 1);
    REQUIRE(run.report.blocked.size() == 2);
    CHECK(run.report.blocked[0] == "a waits on chan(1, 0, 0)");
    CHECK(run.report.blocked[1] == "b waits on chan(0, 0, 0)");
  }
}

TEST_CASE("endpoints: corpus equals the reference heap") {
  for (const auto& name : test::corpus_names()) {
    for (int n : {0, 1, 3, 5}) {
      CAPTURE(name);
      CAPTURE(n);
      auto p = test::corpus(name);
      auto params = test::params_for(*p, n);
      auto run = run_endpoints(*p, project_all(*p), build_channel_table(*p->choreography()), params);
      CHECK(run.report.verdict == Verdict::Pass);
      CHECK(compare(merge(run.fragments), run_choreography(*p, params)).empty());
    }
  }
}

TEST_CASE("endpoints: ring is schedule independent over 100 seeds") {
  auto p = test::corpus("ring");
  auto programs = project_all(*p);
  auto table = build_channel_table(*p->choreography());
  std::string first;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RunOptions o;
    o.schedule = Schedule::Random;
    o.seed = seed;
    auto run = run_endpoints(*p, programs, table, {{"n", Value(4)}}, o);
    REQUIRE(run.report.verdict == Verdict::Pass);
    std::string text = dump(to_json(merge(run.fragments)));
    if (seed == 0) first = text;
    CHECK(text == first);
  }
}

TEST_CASE("endpoints: foreign access is a runtime error") {
  auto p = test::parse_text(pair("endpoint a: a.y := 1;"));
  auto programs = project_all(*p);
  programs[0].body = {make_stmt(AssignStmt{test::expr("b.y"), test::expr("1")})};
  auto run = run_endpoints(*p, programs, {}, {{"n", Value(0)}});
  CHECK(count_kind(run.report, FailureKind::Runtime) == 1);
  CHECK(run.report.verdict == Verdict::Fail);
}

TEST_CASE("merge rejects overlapping fragments") {
  Heap h;
  h.objects[1] = Object{"Node", Owner{"a", 0}, {{"x", Value(1)}}};
  std::map<Owner, Heap> frags{{Owner{"a", 0}, h}, {Owner{"b", 0}, h}};
  CHECK_THROWS_AS(merge(frags), RuntimeError);
}

TEST_CASE("compare lists field differences") {
  Heap want;
  want.objects[1] = Object{"Node", Owner{"a", 0}, {{"x", Value(1)}, {"y", Value(2)}}};
  Heap got = want;
  CHECK(compare(got, want).empty());
  got.objects[1].fields["y"] = Value(3);
  auto d = compare(got, want);
  REQUIRE(d.size() == 1);
  CHECK(d[0].object == 1);
  CHECK(d[0].field == "y");
  CHECK(*d[0].got == Value(3));
  CHECK(*d[0].want == Value(2));

  auto r = merge_and_compare({{Owner{"a", 0}, got}}, want);
  CHECK(r.verdict == Verdict::Fail);
  CHECK(count_kind(r, FailureKind::Diff) == 1);
}

TEST_CASE("equivalence driver") {
  auto p = test::corpus("ring");
  EquivOptions o;
  o.seeds = 5;
  auto r = run_equivalence(p, {{"n", Value(4)}}, o);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.stages.at("equivalence") == "EQUAL");
  CHECK(r.stages.at("chor") == "PASS");
  CHECK(r.stages.at("ir") == "PASS");
  CHECK(r.heap == run_choreography(*p, {{"n", Value(4)}}));
}

TEST_CASE("equivalence driver reports a wrong endpoint program") {
  auto p = test::corpus("two_party");
  auto programs = project_all(*p);
  auto& b = *std::find_if(programs.begin(), programs.end(), [](const auto& e) { return e.sort == "b"; });
  b.body[1] = make_stmt(AssignStmt{test::expr("b.x"), test::expr("b.y + 2")});
  auto r = run_equivalence(p, {{"k", Value(1)}}, {}, &programs);
  CHECK(r.verdict == Verdict::Fail);
  CHECK(r.stages.at("equivalence") == "DIFF");
  CHECK_FALSE(r.diff.empty());
}

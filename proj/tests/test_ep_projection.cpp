#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "chorcc/ep_projection.hpp"
#include "support.hpp"

using namespace chorcc;
using chorcc::test::expr;

namespace {

std::string program(const std::string& run) {
  return "class Node {\n  int x;\n  int y;\n\n  Node(int v) {\n    this.x = v;\n    this.y = 0;\n  }\n}\n\n"
         "choreography C(int n) {\n  endpoint a = Node(1);\n  endpoint b = Node(2);\n"
         "  endpoint c = Node(3);\n  endpoint F[i := 0 .. n] = Node(i);\n"
         "  endpoint G[i := 0 .. n] = Node(0);\n\n  run {\n" +
         run + "\n  }\n}\n";
}

EndpointProgram project(const std::string& run, const SortTag& sort) {
  return project_ep(*test::parse_text(program(run)), sort);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

bool has_trace(const RuleTrace& t, const std::string& rule) {
  return std::find(t.begin(), t.end(), rule) != t.end();
}

}  // namespace

TEST_CASE("assignment is kept by its owner and skipped elsewhere") {
  auto at_a = project("endpoint a: a.x := 1;", "a");
  REQUIRE(at_a.body.size() == 1);
  CHECK(at_a.body[0].is<AssignStmt>());
  CHECK(at_a.trace == RuleTrace{"EpAssign"});

  auto at_b = project("endpoint a: a.x := 1;", "b");
  CHECK(test::is_empty_body(at_b.body));
  CHECK(at_b.trace == RuleTrace{"EpAssignSkip"});
}

TEST_CASE("indexed assignment is guarded by the self index") {
  auto f = project("endpoint F[3]: F[3].x := 1;", "F");
  CHECK(f.family);
  CHECK(f.self == "j");
  REQUIRE(f.body.size() == 1);
  CHECK(pretty(f.body[0]) == "if (j == 3) {\n  F[3].x = 1;\n}\n");
}

TEST_CASE("empty run projects to an empty body") {
  for (const char* s : {"a", "b", "F", "G"}) CHECK(project("", s).body.empty());
}

TEST_CASE("unknown sort is rejected") {
  CHECK_THROWS_AS(project("", "zz"), std::invalid_argument);
}

TEST_CASE("ep_expr examples") {
  auto self_a = Target::singular("a");
  auto self_f = Target::indexed("F", expr("j"));
  CHECK(ep_expr(expr("(\\chor a.x == b.x)"), self_a)->is_true());
  CHECK(pretty(ep_expr(expr("(\\endpoint F[2]; F[2].x > 0)"), self_f)) == "j == 2 ==> F[2].x > 0");
  CHECK(ep_expr(expr("(\\endpoint b; b.x > 0)"), self_a)->is_true());
  CHECK(pretty(ep_expr(expr("(\\endpoint a; a.x > 0)"), self_a)) == "a.x > 0");
  CHECK(pretty(ep_expr(expr("(\\endpoint F[i := 1 .. n]; F[i].x > i)"), self_f)) ==
        "1 <= j && j < n ==> F[j].x > j");
}

TEST_CASE("ep_expr distributes over conjunctions") {
  RuleTrace trace;
  auto e = ep_expr(expr("(\\endpoint a; a.x > 0) && (\\endpoint b; b.x > 1) && (\\chor a.x == b.x)"),
                   Target::singular("a"), &trace);
  CHECK(pretty(e) == "a.x > 0");
  CHECK(has_trace(trace, "EpAnd"));
  CHECK(has_trace(trace, "EpExpr"));
  CHECK(has_trace(trace, "EpExprSkip"));
  CHECK(has_trace(trace, "EpChor"));

  auto r = ep_expr(expr("(\\endpoint a; Perm(a.x, 1)) ** (\\chor a.x == b.x)"), Target::singular("a"));
  CHECK(pretty(r) == "Perm(a.x, 1)");
}

TEST_CASE("if relevant only to another endpoint still projects its body") {
  auto src = "if ((\\endpoint a; a.x > 0)) {\n  communicate a: a.x -> b: b.y;\n} else {\n}";
  auto b = project(src, "b");
  REQUIRE(b.body.size() == 1);
  const auto* i = b.body[0].as<IfStmt>();
  REQUIRE(i);
  CHECK(i->cond->is_true());
  REQUIRE(i->then_branch.size() == 1);
  CHECK(i->then_branch[0].is<RecvStmt>());

  auto c = project(src, "c");
  CHECK(test::is_empty_body(c.body));
}

TEST_CASE("communicate projects to send, receive or nothing") {
  const char* src = "communicate a: a.x -> b: b.y;";
  auto a = project(src, "a");
  REQUIRE(a.body.size() == 1);
  CHECK(a.body[0].is<SendStmt>());
  auto b = project(src, "b");
  REQUIRE(b.body.size() == 1);
  CHECK(b.body[0].is<RecvStmt>());
  auto c = project(src, "c");
  CHECK(test::is_empty_body(c.body));
  CHECK(has_trace(c.trace, "EpCommSkip"));
  CHECK(has_trace(a.trace, "EpSend"));
  CHECK(has_trace(b.trace, "EpReceive"));
}

TEST_CASE("ranged shift guards on the inverted index") {
  const char* src = "communicate F[i := 0 .. n - 1]: F[i].x -> G[i + 1]: G[i + 1].y;";
  auto g = project(src, "G");
  CHECK(pretty(g.body.at(0)) ==
        "if (0 <= j - 1 && j - 1 < n - 1) {\n  G[j - 1 + 1].y = chan(0, j - 1, j).readValue();\n}\n");
  CHECK(has_trace(g.trace, "EpRangeReceive"));
  auto f = project(src, "F");
  CHECK(pretty(f.body.at(0)) == "if (0 <= j && j < n - 1) {\n  chan(0, j, j + 1).writeValue(F[j].x);\n}\n");
  CHECK(has_trace(f.trace, "EpRangeSend"));
}

TEST_CASE("send part precedes receive part") {
  auto f = project("communicate F[0]: F[0].x -> F[n]: F[n].y;", "F");
  REQUIRE(f.body.size() == 1);
  const auto* blk = f.body[0].as<BlockStmt>();
  REQUIRE(blk);
  REQUIRE(blk->body.size() == 2);
  const auto* send = blk->body[0].as<IfStmt>();
  const auto* recv = blk->body[1].as<IfStmt>();
  REQUIRE(send);
  REQUIRE(recv);
  CHECK(send->then_branch.at(0).is<SendStmt>());
  CHECK(recv->then_branch.at(0).is<RecvStmt>());
  CHECK(has_trace(f.trace, "EpIndexSend"));
  CHECK(has_trace(f.trace, "EpIndexReceive"));
}

TEST_CASE("self communication becomes a local assignment") {
  auto a = project("communicate a: a.x -> a: a.y;", "a");
  REQUIRE(a.body.size() == 1);
  CHECK(pretty(a.body[0]) == "a.y = a.x;\n");
}

TEST_CASE("send-before-receive holds across the corpus") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    for (const auto& ep : project_all(*p)) {
      std::function<void(const Block&)> walk = [&](const Block& b) {
        for (const auto& s : b) {
          std::visit(
              [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, BlockStmt>) {
                  bool recv = false;
                  for (const auto& k : n.body) {
                    bool is_send = k.template is<SendStmt>() ||
                                   (k.template is<IfStmt>() &&
                                    !k.template as<IfStmt>()->then_branch.empty() &&
                                    k.template as<IfStmt>()->then_branch[0].template is<SendStmt>());
                    bool is_recv = k.template is<RecvStmt>() ||
                                   (k.template is<IfStmt>() &&
                                    !k.template as<IfStmt>()->then_branch.empty() &&
                                    k.template as<IfStmt>()->then_branch[0].template is<RecvStmt>());
                    if (is_send) CHECK_FALSE(recv);
                    recv = recv || is_recv;
                  }
                  walk(n.body);
                } else if constexpr (std::is_same_v<T, IfStmt>) {
                  walk(n.then_branch);
                  walk(n.else_branch);
                } else if constexpr (std::is_same_v<T, WhileStmt>) {
                  walk(n.body);
                }
              },
              s.node);
        }
      };
      walk(ep.body);
    }
  }
}

TEST_CASE("skip totality on every corpus statement") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    const auto* c = p->choreography();
    for (const auto& s : c->run) {
      auto involved = sorts_of(s);
      Program one = test::with_run(*p, s);
      for (const auto& ep : c->endpoints) {
        if (involved.count(ep.name)) continue;
        CAPTURE(ep.name);
        auto out = project_ep(one, ep.name);
        bool ok = test::is_empty_body(out.body);
        if (!ok && out.body.size() == 1) {
          const auto* a = out.body[0].as<AssertStmt>();
          ok = a && a->expr->is_true();
        }
        CHECK(ok);
      }
    }
  }
}

TEST_CASE("invert_index_expr examples") {
  CHECK(pretty(invert_index_expr(expr("i + 1"), "i")) == "i - 1");
  CHECK(pretty(invert_index_expr(expr("i"), "i")) == "i");
  CHECK(pretty(invert_index_expr(expr("i - 3"), "i")) == "i + 3");
  CHECK(pretty(invert_index_expr(expr("2 + i"), "i")) == "i - 2");
  CHECK(pretty(invert_index_expr(expr("i + k"), "i")) == "i - k");
}

TEST_CASE("inverter round-trips on accepted patterns") {
  for (int c = -5; c <= 5; ++c) {
    std::string cs = c < 0 ? "(" + std::to_string(c) + ")" : std::to_string(c);
    for (const std::string& d : {std::string("i"), "i + " + cs, "i - " + cs, cs + " + i"}) {
      CAPTURE(d);
      auto fwd = expr(d);
      auto inv = invert_index_expr(fwd, "i");
      for (int i = -100; i <= 100; ++i) {
        Int image = test::eval_int(fwd, {{"i", i}});
        CHECK(test::eval_int(inv, {{"i", image}}) == i);
      }
    }
  }
}

TEST_CASE("inverter rejects other shapes") {
  for (const char* d : {"3 - i", "2 * i", "i * i", "i + i", "k", "-i", "i + F[i].x"}) {
    CAPTURE(d);
    CHECK_THROWS_AS(invert_index_expr(expr(d), "i"), NotInvertible);
  }
  try {
    (void)invert_index_expr(expr("2 * i"), "i");
  } catch (const NotInvertible& e) {
    CHECK(std::string(e.what()).find("i + c") != std::string::npos);
  }
}

TEST_CASE("uninvertible receiver index is unsupported") {
  auto text = test::mutate(test::read_corpus("ring"), "G[i + 1]: G[i + 1].y", "G[2 * i]: G[2 * i].y");
  auto p = test::parse_text(text);
  try {
    (void)project_ep(*p, "G");
    FAIL("expected UnsupportedSyntax");
  } catch (const UnsupportedSyntax& e) {
    CHECK(std::string(e.what()).find("i + c") != std::string::npos);
  }
}

TEST_CASE("channel table") {
  auto two = build_channel_table(*test::corpus("two_party")->choreography());
  REQUIRE(two.size() == 2);
  CHECK(two[0] == ChannelEntry{0, "a", "b"});
  CHECK(two[1] == ChannelEntry{1, "b", "a"});
  auto ring = build_channel_table(*test::corpus("ring")->choreography());
  REQUIRE(ring.size() == 1);
  CHECK(ring[0] == ChannelEntry{0, "F", "G"});
  CHECK(build_channel_table(*test::corpus("par_call")->choreography()).empty());
  CHECK(channel_table_from_json(to_json(ring)) == ring);
}

TEST_CASE("channel references resolve in the table") {
  for (const auto& name : test::corpus_names()) {
    CAPTURE(name);
    auto p = test::corpus(name);
    auto table = build_channel_table(*p->choreography());
    for (const auto& ep : project_all(*p)) {
      std::function<void(const Block&)> walk = [&](const Block& b) {
        for (const auto& s : b) {
          if (const auto* snd = s.as<SendStmt>()) {
            REQUIRE(snd->channel.site < static_cast<int>(table.size()));
            CHECK(table[snd->channel.site].sender == ep.sort);
          } else if (const auto* rcv = s.as<RecvStmt>()) {
            REQUIRE(rcv->channel.site < static_cast<int>(table.size()));
            CHECK(table[rcv->channel.site].receiver == ep.sort);
          } else if (const auto* i = s.as<IfStmt>()) {
            walk(i->then_branch);
            walk(i->else_branch);
          } else if (const auto* w = s.as<WhileStmt>()) {
            walk(w->body);
          } else if (const auto* bl = s.as<BlockStmt>()) {
            walk(bl->body);
          }
        }
      };
      walk(ep.body);
    }
  }
}

TEST_CASE("endpoint programs round-trip through JSON") {
  for (const auto& name : test::corpus_names()) {
    auto p = test::corpus(name);
    for (const auto& ep : project_all(*p)) {
      CAPTURE(ep.sort);
      json j = to_json(ep);
      auto back = endpoint_program_from_json(j);
      CHECK(dump(to_json(back)) == dump(j));
      CHECK(pretty(back) == pretty(ep));
      CHECK(back.trace == ep.trace);
    }
  }
}

TEST_CASE("ring goldens") {
  auto p = test::corpus("ring");
  for (const char* s : {"F", "G"}) {
    CAPTURE(s);
    std::string want = read_file(std::string(CHORCC_GOLDEN_DIR) + "/ring." + s + ".ep.txt");
    CHECK(trim(pretty(project_ep(*p, s))) == trim(want));
  }
}

TEST_CASE("self index avoids names in use") {
  auto text = test::mutate(test::read_corpus("ring"), "choreography Ring(int n)", "choreography Ring(int n, int j)");
  auto ep = project_ep(*test::parse_text(text), "F");
  CHECK(ep.self != "j");
  CHECK(ep.self != "n");
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chorcc/ep_projection.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using chorcc::json;

namespace {

struct Result {
  int code;
  std::string out;
};

fs::path scratch() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("chorcc_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result run(const std::string& args) {
  fs::path out = scratch() / "stdout.txt";
  std::string cmd = std::string(CHORCC_BIN) + " " + args + " > " + out.string() + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string corpus(const std::string& name) {
  return (chorcc::test::corpus_dir() / (name + ".chor")).string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("equivalence run on the ring exits 0 and reports EQUAL") {
  auto r = run("run --mode equiv " + corpus("ring") + " --params n=4");
  CHECK(r.code == 0);
  CHECK(r.out.find("EQUAL") != std::string::npos);
  CHECK(r.out.find("verdict: PASS") != std::string::npos);
}

TEST_CASE("missing input exits 3") {
  CHECK(run("parse " + (scratch() / "missing.chor").string()).code == 3);
  CHECK(run("").code == 3);
  CHECK(run("run --mode bogus " + corpus("ring")).code == 3);
}

TEST_CASE("parse and check succeed on the corpus") {
  for (const auto& name : chorcc::test::corpus_names()) {
    CAPTURE(name);
    CHECK(run("parse " + corpus(name)).code == 0);
    CHECK(run("check " + corpus(name)).code == 0);
  }
}

TEST_CASE("check rejects an ill-formed program") {
  auto text = chorcc::test::mutate(chorcc::test::read_corpus("ring"), "this.y = -1;", "this.y = \\msg;");
  fs::path bad = scratch() / "bad.chor";
  std::ofstream(bad) << text;
  CHECK(run("check " + bad.string()).code == 3);
}

TEST_CASE("project-ep --all writes one file per sort and the channel table") {
  fs::path dir = scratch() / "ring_all";
  fs::remove_all(dir);
  auto r = run("project-ep --all " + corpus("ring") + " -o " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "F.ep.json"));
  CHECK(fs::exists(dir / "G.ep.json"));
  CHECK(fs::exists(dir / "channels.json"));
  auto table = chorcc::channel_table_from_json(json::parse(slurp(dir / "channels.json")));
  REQUIRE(table.size() == 1);
  CHECK(table[0].sender == "F");
  auto f = chorcc::endpoint_program_from_json(json::parse(slurp(dir / "F.ep.json")));
  CHECK(f.family);
}

TEST_CASE("project subcommands are idempotent") {
  for (const auto& name : chorcc::test::corpus_names()) {
    CAPTURE(name);
    fs::path a = scratch() / "idem_a", b = scratch() / "idem_b";
    fs::remove_all(a);
    fs::remove_all(b);
    REQUIRE(run("project-ep --all " + corpus(name) + " -o " + a.string()).code == 0);
    REQUIRE(run("project-ep --all " + corpus(name) + " -o " + b.string()).code == 0);
    for (const auto& e : fs::directory_iterator(a)) CHECK(slurp(e.path()) == slurp(b / e.path().filename()));

    fs::path c1 = scratch() / "chor1.json", c2 = scratch() / "chor2.json";
    REQUIRE(run("project-chor --json " + corpus(name) + " -o " + c1.string()).code == 0);
    REQUIRE(run("project-chor --json " + corpus(name) + " -o " + c2.string()).code == 0);
    CHECK(slurp(c1) == slurp(c2));
    CHECK(!slurp(c1).empty());
  }
}

TEST_CASE("removing a send from a projected program deadlocks with exit 2") {
  fs::path dir = scratch() / "deadlock";
  fs::remove_all(dir);
  REQUIRE(run("project-ep --all " + corpus("two_party") + " -o " + dir.string()).code == 0);
  json a = json::parse(slurp(dir / "a.ep.json"));
  auto& kids = a["body"]["children"];
  REQUIRE(kids[0]["kind"] == "Send");
  kids.erase(kids.begin());
  std::ofstream(dir / "a.ep.json") << a.dump(2);
  auto r = run("run --mode endpoints --from-dir " + dir.string() + " " + corpus("two_party") + " --params k=1");
  CHECK(r.code == 2);
  CHECK(r.out.find("DEADLOCK") != std::string::npos);
}

TEST_CASE("failed checks exit 1") {
  auto text = chorcc::test::mutate(chorcc::test::read_corpus("ring"), "G[i + 1]: G[i + 1].y", "G[0]: G[0].y");
  fs::path bad = scratch() / "inj.chor";
  std::ofstream(bad) << text;
  CHECK(run("run --mode ir " + bad.string() + " --params n=3").code == 1);
}

TEST_CASE("config file supplies defaults and flags override it") {
  fs::path cfg = scratch() / "chorcc.toml";
  std::ofstream(cfg) << "# defaults\n[run]\nmode = \"ir\"\nparams = \"n=3\"\nseeds = 4\n";
  auto r = run("run --json --config " + cfg.string() + " " + corpus("ring"));
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["mode"] == "ir");

  auto o = run("run --json --config " + cfg.string() + " --mode chor " + corpus("ring"));
  REQUIRE(o.code == 0);
  CHECK(json::parse(o.out)["mode"] == "chor");
}

TEST_CASE("--json emits a run report") {
  auto r = run("run --json --mode equiv --schedule random --seeds 3 " + corpus("relay") + " --params k=2");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["kind"] == "RunReport");
  CHECK(j["verdict"] == "PASS");
  CHECK(j["stages"]["equivalence"] == "EQUAL");
  CHECK(j["heap"]["objects"].size() == 3);
}

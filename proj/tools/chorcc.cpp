// chorcc: parse, check, project and run choreographies.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "chorcc/chor_projection.hpp"
#include "chorcc/ep_projection.hpp"
#include "chorcc/frontend.hpp"
#include "chorcc/json_io.hpp"
#include "chorcc/runtime.hpp"
#include "chorcc/syntax.hpp"

namespace fs = std::filesystem;
using namespace chorcc;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitDeadlock = 2;
constexpr int kExitUsage = 3;

/// Input problems that end the process with the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Loaded {
  std::shared_ptr<const Program> program;
  std::vector<Diagnostic> diagnostics;
};

Loaded load(const std::string& path, bool require_wellformed) {
  SourceFile src;
  try {
    src = SourceFile::load(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  ParseResult r = parse(src);
  for (const auto& d : r.diagnostics) std::cerr << format(d, path) << "\n";
  if (!r.ok()) throw UsageError("parsing failed");
  Loaded out{std::make_shared<const Program>(std::move(*r.program)), {}};
  out.diagnostics = check_wellformed(*out.program);
  if (require_wellformed) {
    for (const auto& d : out.diagnostics) std::cerr << format(d, path) << "\n";
    if (has_errors(out.diagnostics)) throw UsageError("program is not well-formed");
  }
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write " + p.string());
  out << text;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

int exit_code(rt::Verdict v) {
  switch (v) {
    case rt::Verdict::Pass: return kExitPass;
    case rt::Verdict::Fail: return kExitFail;
    case rt::Verdict::Deadlock: return kExitDeadlock;
  }
  return kExitFail;
}

// --- subcommands -----------------------------------------------------------

struct Common {
  std::string input;
  std::string output;
  bool json = false;
};

int cmd_parse(const Common& c) {
  auto l = load(c.input, false);
  std::string text = c.json ? dump(to_json(*l.program)) : pretty(*l.program);
  if (c.output.empty())
    std::cout << text;
  else
    write_file(c.output, text);
  return kExitPass;
}

int cmd_check(const Common& c) {
  auto l = load(c.input, false);
  if (c.json) {
    json arr = json::array();
    for (const auto& d : l.diagnostics)
      arr.push_back({{"severity", d.severity == Severity::Error ? "error" : "warning"},
                     {"rule", rule_name(d.rule)},
                     {"message", d.message},
                     {"line", d.begin.line},
                     {"col", d.begin.col}});
    std::cout << dump({{"diagnostics", arr}, {"ok", !has_errors(l.diagnostics)}});
  } else {
    for (const auto& d : l.diagnostics) std::cerr << format(d, c.input) << "\n";
    std::cout << (has_errors(l.diagnostics) ? "ill-formed" : "ok") << "\n";
  }
  return has_errors(l.diagnostics) ? kExitUsage : kExitPass;
}

int cmd_project_chor(const Common& c, bool trace) {
  auto l = load(c.input, true);
  VerificationProgram v = project_chor(l.program);
  std::string text = c.json ? dump(to_json(v)) : pretty(v);
  if (c.output.empty()) {
    std::cout << text;
  } else {
    fs::path out = c.output;
    if (fs::is_directory(out)) out /= v.name + (c.json ? ".ir.json" : ".ir");
    write_file(out, text);
  }
  if (trace) {
    for (const auto& r : v.trace) std::cerr << r << "\n";
  }
  return kExitPass;
}

int cmd_project_ep(const Common& c, const std::vector<std::string>& sorts, bool all) {
  auto l = load(c.input, true);
  const Choreography& ch = *l.program->choreography();
  std::vector<EndpointProgram> progs;
  if (all || sorts.empty()) {
    progs = project_all(*l.program);
  } else {
    for (const auto& s : sorts) {
      if (!ch.find_endpoint(s)) throw UsageError("unknown endpoint sort '" + s + "'");
      progs.push_back(project_ep(*l.program, s));
    }
  }
  ChannelTable table = build_channel_table(ch);
  if (c.output.empty() && !all) {
    for (const auto& e : progs) std::cout << (c.json ? dump(to_json(e)) : pretty(e) + "\n");
    return kExitPass;
  }
  fs::path dir = c.output.empty() ? fs::path(".") : fs::path(c.output);
  fs::create_directories(dir);
  for (const auto& e : progs) {
    write_file(dir / (e.sort + ".ep.json"), dump(to_json(e)));
    std::cout << (dir / (e.sort + ".ep.json")).string() << "\n";
  }
  write_file(dir / "channels.json", dump(to_json(table)));
  std::cout << (dir / "channels.json").string() << "\n";
  return kExitPass;
}

struct RunArgs {
  std::string mode = "equiv";
  std::string params;
  std::uint64_t seeds = 1;
  std::uint64_t first_seed = 0;
  std::string schedule = "round-robin";
  std::string from_dir;
  std::uint64_t step_limit = 10'000'000;
};

std::vector<EndpointProgram> load_endpoint_dir(const fs::path& dir, const Choreography& c) {
  std::vector<EndpointProgram> out;
  for (const auto& ep : c.endpoints) {
    fs::path f = dir / (ep.name + ".ep.json");
    try {
      out.push_back(endpoint_program_from_json(read_json(f)));
    } catch (const SchemaError& e) {
      throw UsageError(f.string() + ": " + e.what());
    }
  }
  return out;
}

void summarize(const rt::RunReport& r) {
  std::cout << "mode: " << r.mode << "\n";
  for (const auto& [stage, v] : r.stages) std::cout << stage << ": " << v << "\n";
  for (const auto& [label, c] : r.checks)
    std::cout << "check " << label << ": " << c.passed << " passed, " << c.failed << " failed\n";
  if (r.conservation_checks) std::cout << "conservation checks: " << r.conservation_checks << "\n";
  for (const auto& f : r.failures) {
    std::cout << rt::failure_kind_name(f.kind) << " [" << f.label << "]";
    if (f.loc.line) std::cout << " at " << f.loc.line << ":" << f.loc.col;
    std::cout << ": " << f.message << "\n";
  }
  for (const auto& b : r.blocked) std::cout << "blocked: " << b << "\n";
  if (r.stages.count("equivalence")) std::cout << r.stages.at("equivalence") << "\n";
  std::cout << "verdict: " << rt::verdict_name(r.verdict) << "\n";
}

int cmd_run(const Common& c, const RunArgs& a) {
  auto l = load(c.input, true);
  rt::Params params;
  try {
    params = rt::parse_params(a.params);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (const auto& prm : l.program->choreography()->params)
    if (!params.count(prm.name)) throw UsageError("missing --params value for '" + prm.name + "'");
  rt::Schedule sched = a.schedule == "random" ? rt::Schedule::Random : rt::Schedule::RoundRobin;

  std::vector<EndpointProgram> from_dir;
  if (!a.from_dir.empty()) from_dir = load_endpoint_dir(a.from_dir, *l.program->choreography());
  const std::vector<EndpointProgram>* programs = a.from_dir.empty() ? nullptr : &from_dir;

  rt::RunReport report;
  if (a.mode == "chor") {
    report.mode = "chor";
    try {
      report.heap = rt::run_choreography(*l.program, params);
    } catch (const rt::AssertionFailure& e) {
      report.fail(rt::FailureKind::Assert, "assert", e.what(), e.loc());
    } catch (const rt::RuntimeError& e) {
      report.fail(rt::FailureKind::Runtime, "runtime", e.what(), e.loc());
    }
    report.settle();
  } else if (a.mode == "ir") {
    report = rt::run_verification_ir(project_chor(l.program), params);
  } else if (a.mode == "endpoints") {
    std::vector<EndpointProgram> projected;
    if (!programs) {
      projected = project_all(*l.program);
      programs = &projected;
    }
    ChannelTable table = build_channel_table(*l.program->choreography());
    std::uint64_t runs = sched == rt::Schedule::Random ? std::max<std::uint64_t>(a.seeds, 1) : 1;
    for (std::uint64_t k = 0; k < runs; ++k) {
      rt::RunOptions ro{sched, a.first_seed + k, a.step_limit};
      auto run = rt::run_endpoints(*l.program, *programs, table, params, ro);
      if (k == 0 || run.report.verdict != rt::Verdict::Pass) report = run.report;
      if (run.report.verdict != rt::Verdict::Pass) break;
    }
  } else {
    report = rt::run_equivalence(l.program, params, {sched, a.seeds, a.first_seed, a.step_limit},
                                 programs);
  }

  std::string text = dump(to_json(report));
  if (!c.output.empty()) write_file(c.output, text);
  if (c.json)
    std::cout << text;
  else
    summarize(report);
  return exit_code(report.verdict);
}

/// Fills options not given on the command line from `key = value` lines.
/// Blank lines, `#` comments and `[section]` headers are skipped.
void apply_config(const std::string& path, CLI::App& cmd) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError(path + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(val);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chorcc: choreography compiler and execution harness"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("input", common.input, "source file (.chor)")->required();
    sub->add_option("-o,--output", common.output, "output file or directory");
    sub->add_flag("--json", common.json, "machine-readable output");
  };

  auto* parse_cmd = app.add_subcommand("parse", "parse and pretty-print");
  add_common(parse_cmd);
  auto* check_cmd = app.add_subcommand("check", "well-formedness diagnostics");
  add_common(check_cmd);

  bool trace = false;
  auto* chor_cmd = app.add_subcommand("project-chor", "emit the verification program");
  add_common(chor_cmd);
  chor_cmd->add_flag("--trace", trace, "print the rule trace to stderr");

  std::vector<std::string> sorts;
  bool all = false;
  auto* ep_cmd = app.add_subcommand("project-ep", "emit endpoint programs and the channel table");
  add_common(ep_cmd);
  ep_cmd->add_option("--sort", sorts, "endpoint sort(s) to project");
  ep_cmd->add_flag("--all", all, "project every sort into the output directory");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "execute and check");
  add_common(run_cmd);
  std::string config;
  run_cmd->add_option("--config", config, "key=value file with defaults for run options");
  run_cmd->add_option("--mode", ra.mode, "chor | ir | endpoints | equiv")
      ->check(CLI::IsMember({"chor", "ir", "endpoints", "equiv"}));
  run_cmd->add_option("--params", ra.params, "choreography parameters, k=v,...");
  run_cmd->add_option("--seeds", ra.seeds, "number of random schedules");
  run_cmd->add_option("--first-seed", ra.first_seed, "first random seed");
  run_cmd->add_option("--schedule", ra.schedule, "round-robin | random")
      ->check(CLI::IsMember({"round-robin", "random"}));
  run_cmd->add_option("--from-dir", ra.from_dir, "run endpoint programs read from this directory");
  run_cmd->add_option("--step-limit", ra.step_limit, "abort after this many steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (parse_cmd->parsed()) return cmd_parse(common);
    if (check_cmd->parsed()) return cmd_check(common);
    if (chor_cmd->parsed()) return cmd_project_chor(common, trace);
    if (ep_cmd->parsed()) return cmd_project_ep(common, sorts, all);
    if (run_cmd->parsed()) {
      if (!config.empty()) apply_config(config, *run_cmd);
      return cmd_run(common, ra);
    }
  } catch (const UsageError& e) {
    std::cerr << "chorcc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedSyntax& e) {
    std::cerr << common.input << ":" << e.loc().line << ":" << e.loc().col
              << ": unsupported: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "chorcc: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}

#include "chorcc/runtime.hpp"

namespace chorcc::rt {

namespace {

void absorb(RunReport& into, const RunReport& from, const std::string& stage) {
  for (auto f : from.failures) {
    f.message = stage + ": " + f.message;
    into.failures.push_back(std::move(f));
  }
  for (const auto& [label, c] : from.checks) {
    into.checks[label].passed += c.passed;
    into.checks[label].failed += c.failed;
  }
  into.conservation_checks += from.conservation_checks;
  into.steps += from.steps;
  into.blocked.insert(into.blocked.end(), from.blocked.begin(), from.blocked.end());
}

}  // namespace

RunReport run_equivalence(const std::shared_ptr<const Program>& p, const Params& params,
                          const EquivOptions& opts, const std::vector<EndpointProgram>* programs) {
  RunReport out;
  out.mode = "equiv";
  std::optional<Heap> reference;
  try {
    reference = run_choreography(*p, params);
    out.heap = *reference;
    out.stages["chor"] = "PASS";
  } catch (const RuntimeError& e) {
    out.stages["chor"] = "FAIL";
    out.fail(dynamic_cast<const AssertionFailure*>(&e) ? FailureKind::Assert : FailureKind::Runtime,
             "chor", std::string("chor: ") + e.what(), e.loc());
  }

  try {
    RunReport ir = run_verification_ir(project_chor(p), params);
    out.stages["ir"] = verdict_name(ir.verdict);
    absorb(out, ir, "ir");
  } catch (const UnsupportedSyntax& e) {
    out.stages["ir"] = "FAIL";
    out.fail(FailureKind::Runtime, "projection", std::string("ir: ") + e.what(), e.loc());
  }

  std::vector<EndpointProgram> projected;
  if (!programs) {
    try {
      projected = project_all(*p);
    } catch (const UnsupportedSyntax& e) {
      out.stages["endpoints"] = "FAIL";
      out.fail(FailureKind::Runtime, "projection", std::string("endpoints: ") + e.what(), e.loc());
      out.settle();
      return out;
    }
    programs = &projected;
  }
  ChannelTable table = build_channel_table(*p->choreography());
  RunOptions ro{opts.schedule, opts.first_seed, opts.step_limit};
  std::uint64_t runs = opts.schedule == Schedule::Random ? std::max<std::uint64_t>(opts.seeds, 1) : 1;
  Verdict ep_verdict = Verdict::Pass;
  bool equal = true;
  for (std::uint64_t k = 0; k < runs; ++k) {
    ro.seed = opts.first_seed + k;
    EndpointRun run = run_endpoints(*p, *programs, table, params, ro);
    std::string stage = opts.schedule == Schedule::Random
                            ? "endpoints seed " + std::to_string(ro.seed)
                            : std::string("endpoints");
    absorb(out, run.report, stage);
    if (run.report.verdict != Verdict::Pass) {
      if (ep_verdict != Verdict::Deadlock) ep_verdict = run.report.verdict;
      if (!out.seed) out.seed = ro.seed;
    }
    if (!reference || run.report.verdict == Verdict::Deadlock) continue;
    RunReport cmp = merge_and_compare(run.fragments, *reference);
    if (!cmp.diff.empty()) {
      equal = false;
      if (out.diff.empty()) {
        out.diff = cmp.diff;
        out.seed = ro.seed;
      }
      absorb(out, cmp, stage);
    }
  }
  out.stages["endpoints"] = verdict_name(ep_verdict);
  out.stages["equivalence"] = reference && ep_verdict == Verdict::Pass && equal ? "EQUAL" : "DIFF";
  out.settle();
  return out;
}

}  // namespace chorcc::rt

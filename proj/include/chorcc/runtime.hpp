#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "chorcc/ast.hpp"
#include "chorcc/chor_projection.hpp"
#include "chorcc/ep_projection.hpp"
#include "chorcc/json_io.hpp"

namespace chorcc::rt {

using Fraction = boost::multiprecision::cpp_rational;

/// Object id; 0 is the null reference.
struct Ref {
  std::uint64_t id = 0;
  bool operator==(const Ref&) const = default;
};

struct Value;
using Seq = std::vector<Value>;

struct Value {
  std::variant<Int, bool, Seq, Ref, Fraction> v;

  Value() : v(Int(0)) {}
  Value(Int i) : v(std::move(i)) {}
  Value(int i) : v(Int(i)) {}
  Value(bool b) : v(b) {}
  Value(Seq s) : v(std::move(s)) {}
  Value(Ref r) : v(r) {}
  Value(Fraction f) : v(std::move(f)) {}

  bool operator==(const Value&) const = default;

  bool is_int() const { return std::holds_alternative<Int>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_seq() const { return std::holds_alternative<Seq>(v); }
  bool is_ref() const { return std::holds_alternative<Ref>(v); }
  bool is_fraction() const { return std::holds_alternative<Fraction>(v); }
};

std::string show(const Value& v);
json to_json(const Value& v);
Value value_from_json(const json& j);

/// Endpoint instance: sort plus family index (0 for singular endpoints).
struct Owner {
  SortTag sort;
  std::int64_t index = 0;
  auto operator<=>(const Owner&) const = default;
};

std::string show(const Owner& o);

struct Object {
  std::string class_name;
  Owner owner;
  std::map<std::string, Value> fields;
  bool operator==(const Object&) const = default;
};

/// Objects by id plus the endpoint bindings: a singular endpoint name maps to
/// a Ref, a family name to a Seq of Refs.
struct Heap {
  std::map<std::uint64_t, Object> objects;
  std::map<std::string, Value> endpoints;
  bool operator==(const Heap&) const = default;
};

json to_json(const Heap& h);
Heap heap_from_json(const json& j);

/// Type errors, out-of-range indices, foreign object access and the like.
class RuntimeError : public std::runtime_error {
 public:
  RuntimeError(const std::string& msg, Loc loc = {}) : std::runtime_error(msg), loc_(loc) {}
  Loc loc() const { return loc_; }

 private:
  Loc loc_;
};

/// A failed source assertion or contract in the reference interpreter.
class AssertionFailure : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

using Params = std::map<std::string, Value>;

/// Parses `k=v,k=v`; values are integers or true/false.
Params parse_params(const std::string& text);

/// Objects of every endpoint in declaration order, constructors run.
Heap setup(const Program& p, const Params& params);

// ---------------------------------------------------------------------------

enum class Verdict { Pass, Fail, Deadlock };
const char* verdict_name(Verdict v);

enum class FailureKind {
  Assert,           // label says which check: assert, unanimity, injectivity, ...
  Exhale,           // a pure conjunct of an exhaled resource was false
  Check,            // an inhaled fact was false or its permission had no source
  Permission,       // exhale of a permission the holder does not have
  Confinement,
  ParDisjointness,
  Conservation,
  Deadlock,
  Runtime,
  Diff,
};
const char* failure_kind_name(FailureKind k);

struct Failure {
  FailureKind kind = FailureKind::Runtime;
  std::string label;
  std::string message;
  Loc loc;
};

struct CheckCount {
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
};

struct FieldDiff {
  std::uint64_t object = 0;
  std::string field;
  std::optional<Value> got, want;  // empty when the object or field is missing
};

struct RunReport {
  std::string mode;
  Verdict verdict = Verdict::Pass;
  std::vector<Failure> failures;
  std::map<std::string, CheckCount> checks;
  std::uint64_t conservation_checks = 0;
  std::uint64_t steps = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> blocked;  // tasks blocked at deadlock
  Heap heap;
  std::vector<FieldDiff> diff;
  std::map<std::string, std::string> stages;  // per-stage verdicts of composite runs

  void fail(FailureKind kind, std::string label, std::string message, Loc loc = {});
  /// Sets the verdict from the failure list (Deadlock wins over Fail).
  void settle();
};

json to_json(const RunReport& r);

// ---------------------------------------------------------------------------

/// Global-view execution of the choreography. Throws RuntimeError /
/// AssertionFailure.
Heap run_choreography(const Program& p, const Params& params);

/// Dynamic checking of the verification program: permissions, confinement,
/// asserts, par disjointness and permission conservation.
RunReport run_verification_ir(const VerificationProgram& v, const Params& params);

enum class Schedule { RoundRobin, Random };

struct EndpointRun {
  std::map<Owner, Heap> fragments;
  RunReport report;
};

struct RunOptions {
  Schedule schedule = Schedule::RoundRobin;
  std::uint64_t seed = 0;
  std::uint64_t step_limit = 10'000'000;
};

EndpointRun run_endpoints(const Program& p, const std::vector<EndpointProgram>& programs,
                          const ChannelTable& table, const Params& params,
                          const RunOptions& opts = {});

/// Union of the fragments. Throws RuntimeError if two fragments hold the same
/// object.
Heap merge(const std::map<Owner, Heap>& fragments);

/// Field-level differences; empty iff equal.
std::vector<FieldDiff> compare(const Heap& got, const Heap& want);

/// Merges and compares; Diff failures are appended to the returned report.
RunReport merge_and_compare(const std::map<Owner, Heap>& fragments, const Heap& reference);

struct EquivOptions {
  Schedule schedule = Schedule::Random;
  std::uint64_t seeds = 1;
  std::uint64_t first_seed = 0;
  std::uint64_t step_limit = 10'000'000;
};

/// Reference run, verification-program run, endpoint runs (one per seed) and
/// comparison of every merged endpoint heap against the reference heap.
/// `programs` defaults to the endpoint projection of `p`.
RunReport run_equivalence(const std::shared_ptr<const Program>& p, const Params& params,
                          const EquivOptions& opts = {},
                          const std::vector<EndpointProgram>* programs = nullptr);

}  // namespace chorcc::rt

#include <limits>
#include <set>
#include <sstream>

#include "chorcc/runtime.hpp"

namespace chorcc::rt {

std::string show(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Int>) {
          return x.str();
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, Seq>) {
          std::string out = "[";
          for (std::size_t k = 0; k < x.size(); ++k) out += (k ? ", " : "") + show(x[k]);
          return out + "]";
        } else if constexpr (std::is_same_v<T, Ref>) {
          return x.id ? "#" + std::to_string(x.id) : "null";
        } else {
          return numerator(x).str() + "\\" + denominator(x).str();
        }
      },
      v.v);
}

std::string show(const Owner& o) {
  return o.sort + "[" + std::to_string(o.index) + "]";
}

json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Int>) {
          if (x >= std::numeric_limits<std::int64_t>::min() &&
              x <= std::numeric_limits<std::int64_t>::max())
            return x.template convert_to<std::int64_t>();
          return x.str();
        } else if constexpr (std::is_same_v<T, bool>) {
          return x;
        } else if constexpr (std::is_same_v<T, Seq>) {
          json out = json::array();
          for (const auto& e : x) out.push_back(to_json(e));
          return out;
        } else if constexpr (std::is_same_v<T, Ref>) {
          return {{"ref", x.id}};
        } else {
          return {{"frac", numerator(x).str() + "/" + denominator(x).str()}};
        }
      },
      v.v);
}

Value value_from_json(const json& j) {
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(Int(j.get<std::int64_t>()));
  if (j.is_string()) return Value(Int(j.get<std::string>()));
  if (j.is_array()) {
    Seq s;
    for (const auto& e : j) s.push_back(value_from_json(e));
    return Value(std::move(s));
  }
  if (j.is_object() && j.contains("ref")) return Value(Ref{j.at("ref").get<std::uint64_t>()});
  if (j.is_object() && j.contains("frac")) {
    auto text = j.at("frac").get<std::string>();
    auto slash = text.find('/');
    if (slash == std::string::npos) throw SchemaError("/frac", "expected num/den");
    return Value(Fraction(Int(text.substr(0, slash)), Int(text.substr(slash + 1))));
  }
  throw SchemaError("/", "not a runtime value: " + j.dump());
}

json to_json(const Heap& h) {
  json objs = json::array();
  for (const auto& [id, o] : h.objects) {
    json fields = json::object();
    for (const auto& [f, v] : o.fields) fields[f] = to_json(v);
    objs.push_back({{"id", id},
                    {"class", o.class_name},
                    {"owner", {{"sort", o.owner.sort}, {"index", o.owner.index}}},
                    {"fields", fields}});
  }
  json eps = json::object();
  for (const auto& [n, v] : h.endpoints) eps[n] = to_json(v);
  return {{"objects", objs}, {"endpoints", eps}};
}

Heap heap_from_json(const json& j) {
  Heap h;
  try {
    for (const auto& o : j.at("objects")) {
      Object obj;
      obj.class_name = o.at("class").get<std::string>();
      obj.owner = {o.at("owner").at("sort").get<std::string>(),
                   o.at("owner").at("index").get<std::int64_t>()};
      for (const auto& [f, v] : o.at("fields").items()) obj.fields[f] = value_from_json(v);
      h.objects[o.at("id").get<std::uint64_t>()] = std::move(obj);
    }
    for (const auto& [n, v] : j.at("endpoints").items()) h.endpoints[n] = value_from_json(v);
  } catch (const json::exception& e) {
    throw SchemaError("/", e.what());
  }
  return h;
}

namespace {
std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}
}  // namespace

Params parse_params(const std::string& text) {
  Params out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("expected name=value, got '" + item + "'");
    std::string name = trim(item.substr(0, eq));
    std::string val = trim(item.substr(eq + 1));
    if (val == "true" || val == "false") {
      out[name] = Value(val == "true");
    } else {
      try {
        out[name] = Value(Int(val));
      } catch (const std::exception&) {
        throw std::invalid_argument("parameter '" + name + "' is not an integer or boolean");
      }
    }
  }
  return out;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Deadlock: return "DEADLOCK";
  }
  return "?";
}

const char* failure_kind_name(FailureKind k) {
  switch (k) {
    case FailureKind::Assert: return "ASSERT";
    case FailureKind::Exhale: return "EXHALE";
    case FailureKind::Check: return "CHECK";
    case FailureKind::Permission: return "PERMISSION";
    case FailureKind::Confinement: return "CONFINEMENT";
    case FailureKind::ParDisjointness: return "PAR_DISJOINTNESS";
    case FailureKind::Conservation: return "CONSERVATION";
    case FailureKind::Deadlock: return "DEADLOCK";
    case FailureKind::Runtime: return "RUNTIME";
    case FailureKind::Diff: return "DIFF";
  }
  return "?";
}

void RunReport::fail(FailureKind kind, std::string label, std::string message, Loc loc) {
  failures.push_back({kind, std::move(label), std::move(message), loc});
}

void RunReport::settle() {
  verdict = Verdict::Pass;
  for (const auto& f : failures) {
    if (f.kind == FailureKind::Deadlock) {
      verdict = Verdict::Deadlock;
      return;
    }
    verdict = Verdict::Fail;
  }
}

json to_json(const RunReport& r) {
  json fails = json::array();
  for (const auto& f : r.failures)
    fails.push_back({{"kind", failure_kind_name(f.kind)},
                     {"label", f.label},
                     {"message", f.message},
                     {"line", f.loc.line},
                     {"col", f.loc.col}});
  json checks = json::object();
  for (const auto& [label, c] : r.checks)
    checks[label] = {{"passed", c.passed}, {"failed", c.failed}};
  json diff = json::array();
  for (const auto& d : r.diff)
    diff.push_back({{"object", d.object},
                    {"field", d.field},
                    {"got", d.got ? to_json(*d.got) : json(nullptr)},
                    {"want", d.want ? to_json(*d.want) : json(nullptr)}});
  json out = {{"schema", kJsonSchemaVersion},
              {"kind", "RunReport"},
              {"mode", r.mode},
              {"verdict", verdict_name(r.verdict)},
              {"failures", fails},
              {"checks", checks},
              {"conservation_checks", r.conservation_checks},
              {"steps", r.steps},
              {"seed", r.seed ? json(*r.seed) : json(nullptr)},
              {"blocked", r.blocked},
              {"heap", to_json(r.heap)},
              {"diff", diff},
              {"stages", r.stages}};
  return out;
}

Heap merge(const std::map<Owner, Heap>& fragments) {
  Heap out;
  for (const auto& [who, h] : fragments) {
    for (const auto& [id, o] : h.objects) {
      if (!out.objects.emplace(id, o).second)
        throw RuntimeError("object #" + std::to_string(id) + " appears in more than one fragment (" +
                           show(who) + ")");
    }
    for (const auto& [n, v] : h.endpoints) out.endpoints.emplace(n, v);
  }
  return out;
}

std::vector<FieldDiff> compare(const Heap& got, const Heap& want) {
  std::vector<FieldDiff> out;
  auto fields_of = [](const Object* o) {
    std::set<std::string> names;
    if (o)
      for (const auto& [f, v] : o->fields) names.insert(f);
    return names;
  };
  std::set<std::uint64_t> ids;
  for (const auto& [id, o] : got.objects) ids.insert(id);
  for (const auto& [id, o] : want.objects) ids.insert(id);
  for (auto id : ids) {
    auto g = got.objects.find(id);
    auto w = want.objects.find(id);
    const Object* go = g == got.objects.end() ? nullptr : &g->second;
    const Object* wo = w == want.objects.end() ? nullptr : &w->second;
    if (!go || !wo) {
      out.push_back({id, "", std::nullopt, std::nullopt});
      continue;
    }
    auto names = fields_of(go);
    auto more = fields_of(wo);
    names.insert(more.begin(), more.end());
    for (const auto& f : names) {
      auto gf = go->fields.find(f);
      auto wf = wo->fields.find(f);
      std::optional<Value> gv, wv;
      if (gf != go->fields.end()) gv = gf->second;
      if (wf != wo->fields.end()) wv = wf->second;
      if (gv != wv) out.push_back({id, f, gv, wv});
    }
  }
  return out;
}

RunReport merge_and_compare(const std::map<Owner, Heap>& fragments, const Heap& reference) {
  RunReport r;
  r.mode = "compare";
  r.heap = merge(fragments);
  r.diff = compare(r.heap, reference);
  for (const auto& d : r.diff) {
    std::string msg = d.field.empty()
                          ? "object #" + std::to_string(d.object) + " missing on one side"
                          : "#" + std::to_string(d.object) + "." + d.field + ": got " +
                                (d.got ? show(*d.got) : "<none>") + ", want " +
                                (d.want ? show(*d.want) : "<none>");
    r.fail(FailureKind::Diff, "equivalence", msg);
  }
  r.settle();
  return r;
}

}  // namespace chorcc::rt

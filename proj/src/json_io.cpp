#include "chorcc/json_io.hpp"

#include <array>

#include "chorcc/frontend.hpp"

namespace chorcc {

namespace {

constexpr std::array<std::pair<ExprKind, const char*>, 22> kExprKinds = {{
    {ExprKind::Var, "Var"},
    {ExprKind::IntLit, "IntLit"},
    {ExprKind::BoolLit, "BoolLit"},
    {ExprKind::Field, "Field"},
    {ExprKind::SeqIndex, "SeqIndex"},
    {ExprKind::Unary, "Unary"},
    {ExprKind::Binary, "Binary"},
    {ExprKind::Call, "Call"},
    {ExprKind::PredApply, "PredApply"},
    {ExprKind::MethodCall, "MethodCall"},
    {ExprKind::This, "This"},
    {ExprKind::Perm, "Perm"},
    {ExprKind::Endpoint, "EndpointExpr"},
    {ExprKind::Chor, "ChorExpr"},
    {ExprKind::Msg, "Msg"},
    {ExprKind::Sender, "Sender"},
    {ExprKind::Receiver, "Receiver"},
    {ExprKind::Result, "Result"},
    {ExprKind::Forall, "Forall"},
    {ExprKind::SeqLit, "SeqLit"},
    {ExprKind::SeqLength, "SeqLength"},
    {ExprKind::Confined, "ConfinedExpr"},
}};

constexpr std::array<Op, 18> kOps = {Op::Add, Op::Sub, Op::Mul, Op::Div,     Op::Mod, Op::Frac,
                                     Op::And, Op::Or,  Op::Eq,  Op::Ne,      Op::Lt,  Op::Le,
                                     Op::Gt,  Op::Ge,  Op::Implies, Op::Star, Op::Not, Op::Neg};

const char* kind_name(ExprKind k) {
  for (const auto& [kind, name] : kExprKinds)
    if (kind == k) return name;
  return "?";
}

// -- writing -------------------------------------------------------------------

json node(const char* kind, Loc loc, JsonOptions o) {
  json j = json::object();
  j["kind"] = kind;
  j["children"] = json::array();
  if (o.locations) j["loc"] = {{"line", loc.line}, {"col", loc.col}};
  return j;
}

json params_json(const std::vector<Param>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back({{"type", pretty(p.type)}, {"name", p.name}});
  return a;
}

json exprs_json(const std::vector<ExprPtr>& es, JsonOptions o) {
  json a = json::array();
  for (const auto& e : es) a.push_back(to_json(e, o));
  return a;
}

void put_contract(json& j, const Contract& c, JsonOptions o) {
  j["requires"] = exprs_json(c.pre, o);
  j["ensures"] = exprs_json(c.post, o);
}

json chor_block_json(const ChorBlock& b, JsonOptions o) {
  json j = node("ChorBlock", {}, {false});
  for (const auto& s : b) j["children"].push_back(to_json(s, o));
  return j;
}

json method_json(const MethodDecl& m, const char* kind, JsonOptions o) {
  json j = node(kind, m.loc, o);
  j["name"] = m.name;
  j["params"] = params_json(m.params);
  put_contract(j, m.contract, o);
  for (const auto& s : m.body) j["children"].push_back(to_json(s, o));
  return j;
}

// -- reading -------------------------------------------------------------------

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object node");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SchemaError(path_.empty() ? "/" : path_, msg);
  }

  std::string kind() const { return str("kind"); }
  const std::string& path() const { return path_; }
  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& at(const char* key) const {
    if (!j_.contains(key)) throw SchemaError(path_ + "/" + key, "missing field");
    return j_.at(key);
  }
  std::string str(const char* key) const {
    const auto& v = at(key);
    if (!v.is_string()) throw SchemaError(path_ + "/" + key, "expected a string");
    return v.get<std::string>();
  }
  std::string str_or(const char* key, std::string dflt) const {
    return has(key) ? str(key) : dflt;
  }
  bool boolean(const char* key) const {
    const auto& v = at(key);
    if (!v.is_boolean()) throw SchemaError(path_ + "/" + key, "expected a boolean");
    return v.get<bool>();
  }
  int integer(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) throw SchemaError(path_ + "/" + key, "expected an integer");
    return v.get<int>();
  }
  Loc loc() const {
    if (!j_.contains("loc")) return {};
    Reader l(j_.at("loc"), path_ + "/loc");
    return {l.integer("line"), l.integer("col")};
  }
  const json& children(std::size_t min = 0, std::size_t max = SIZE_MAX) const {
    static const json none = json::array();
    const auto& c = j_.contains("children") ? j_.at("children") : none;
    if (!c.is_array()) throw SchemaError(path_ + "/children", "expected an array");
    if (c.size() < min || c.size() > max)
      throw SchemaError(path_ + "/children", "unexpected number of children (" +
                                                 std::to_string(c.size()) + ")");
    return c;
  }
  std::string child_path(std::size_t i) const { return path_ + "/children/" + std::to_string(i); }
  ExprPtr child_expr(std::size_t i) const {
    return expr_from_json(children().at(i), child_path(i));
  }
  std::vector<ExprPtr> child_exprs(std::size_t from = 0) const {
    std::vector<ExprPtr> out;
    const auto& c = children();
    for (std::size_t i = from; i < c.size(); ++i) out.push_back(child_expr(i));
    return out;
  }
  ExprPtr opt_expr(const char* key) const {
    return has(key) ? expr_from_json(j_.at(key), path_ + "/" + key) : nullptr;
  }
  std::vector<ExprPtr> expr_list(const char* key) const {
    const auto& a = at(key);
    if (!a.is_array()) throw SchemaError(path_ + "/" + key, "expected an array");
    std::vector<ExprPtr> out;
    for (std::size_t i = 0; i < a.size(); ++i)
      out.push_back(expr_from_json(a[i], path_ + "/" + key + "/" + std::to_string(i)));
    return out;
  }
  Contract contract() const { return {expr_list("requires"), expr_list("ensures")}; }
  std::vector<Param> params() const {
    const auto& a = at("params");
    if (!a.is_array()) throw SchemaError(path_ + "/params", "expected an array");
    std::vector<Param> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      Reader p(a[i], path_ + "/params/" + std::to_string(i));
      out.push_back({type_of(p, "type"), p.str("name")});
    }
    return out;
  }
  Type type_of(const Reader& r, const char* key) const {
    try {
      return parse_type(r.str(key));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(r.path() + "/" + key, e.what());
    }
  }
  Type type(const char* key) const { return type_of(*this, key); }
  Target target(const char* key) const {
    return target_from_json(at(key), path_ + "/" + key);
  }

 private:
  const json& j_;
  std::string path_;
};

Block stmts_of(const Reader& r, std::size_t from = 0) {
  Block b;
  const auto& c = r.children();
  for (std::size_t i = from; i < c.size(); ++i) b.push_back(stmt_from_json(c[i], r.child_path(i)));
  return b;
}

Block block_child(const Reader& r, std::size_t i) {
  return block_from_json(r.children().at(i), r.child_path(i));
}

ChorBlock chor_block_of(const json& j, const std::string& path) {
  Reader r(j, path);
  if (r.kind() != "ChorBlock") r.fail("expected a ChorBlock node");
  ChorBlock b;
  const auto& c = r.children();
  for (std::size_t i = 0; i < c.size(); ++i)
    b.push_back(chor_stmt_from_json(c[i], r.child_path(i)));
  return b;
}

MethodDecl method_of(const Reader& r) {
  MethodDecl m;
  m.loc = r.loc();
  m.name = r.str("name");
  m.params = r.params();
  m.contract = r.contract();
  m.body = stmts_of(r);
  return m;
}

}  // namespace

Type parse_type(const std::string& text) {
  if (text.rfind("seq<", 0) == 0) {
    if (text.back() != '>') throw std::invalid_argument("malformed type '" + text + "'");
    return Type::seq(parse_type(text.substr(4, text.size() - 5)));
  }
  if (text.empty() || text.find_first_of("<> ") != std::string::npos)
    throw std::invalid_argument("malformed type '" + text + "'");
  return Type{text, {}};
}

json to_json(const Target& t, JsonOptions o) {
  static const char* names[] = {"Singular", "FamilyIndex", "FamilyRange"};
  json j = node(names[static_cast<int>(t.kind)], t.loc, o);
  j["name"] = t.name;
  if (t.is_indexed()) j["children"].push_back(to_json(t.index, o));
  if (t.is_range()) {
    j["binder"] = t.binder;
    j["children"].push_back(to_json(t.lo, o));
    j["children"].push_back(to_json(t.hi, o));
  }
  return j;
}

json to_json(const ExprPtr& e, JsonOptions o) {
  if (!e) return nullptr;
  json j = node(kind_name(e->kind), e->loc, o);
  for (const auto& k : e->kids) j["children"].push_back(to_json(k, o));
  switch (e->kind) {
    case ExprKind::Var:
    case ExprKind::Field:
    case ExprKind::PredApply:
    case ExprKind::MethodCall:
      j["name"] = e->name;
      break;
    case ExprKind::Call:
      j["name"] = e->name;
      j["heap"] = e->purity >= Purity::Heap;
      break;
    case ExprKind::IntLit:
      j["value"] = e->value.str();
      break;
    case ExprKind::BoolLit:
      j["value"] = e->flag;
      break;
    case ExprKind::Unary:
    case ExprKind::Binary:
      j["op"] = op_symbol(e->op);
      break;
    case ExprKind::Endpoint:
    case ExprKind::Confined:
      j["target"] = to_json(*e->target, o);
      break;
    case ExprKind::Forall:
      j["name"] = e->name;
      j["type"] = pretty(e->type);
      break;
    case ExprKind::SeqLit:
      j["type"] = pretty(e->type);
      break;
    default:
      break;
  }
  return j;
}

json to_json(const Block& b, JsonOptions o) {
  json j = node("Block", {}, {false});
  for (const auto& s : b) j["children"].push_back(to_json(s, o));
  return j;
}

json to_json(const Stmt& s, JsonOptions o) {
  return std::visit(
      [&](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        auto mk = [&](const char* k) { return node(k, s.loc, o); };
        if constexpr (std::is_same_v<T, AssignStmt>) {
          json j = mk("Assign");
          j["children"] = {to_json(n.lhs, o), to_json(n.rhs, o)};
          return j;
        } else if constexpr (std::is_same_v<T, DeclStmt>) {
          json j = mk("Decl");
          j["type"] = pretty(n.type);
          j["name"] = n.name;
          if (n.init) j["children"].push_back(to_json(n.init, o));
          return j;
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          json j = mk("Call");
          j["name"] = n.method;
          j["adapted"] = n.adapted;
          j["children"].push_back(to_json(n.receiver, o));
          for (const auto& a : n.args) j["children"].push_back(to_json(a, o));
          return j;
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          json j = mk("If");
          j["children"] = {to_json(n.cond, o), to_json(n.then_branch, o),
                           to_json(n.else_branch, o)};
          return j;
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          json j = mk("While");
          if (n.invariant) j["invariant"] = to_json(n.invariant, o);
          j["children"] = {to_json(n.cond, o), to_json(n.body, o)};
          return j;
        } else if constexpr (std::is_same_v<T, AssertStmt>) {
          json j = mk("Assert");
          if (!n.check.empty()) j["check"] = n.check;
          j["children"].push_back(to_json(n.expr, o));
          return j;
        } else if constexpr (std::is_same_v<T, InhaleStmt>) {
          json j = mk("Inhale");
          j["children"].push_back(to_json(n.expr, o));
          return j;
        } else if constexpr (std::is_same_v<T, ExhaleStmt>) {
          json j = mk("Exhale");
          j["children"].push_back(to_json(n.expr, o));
          return j;
        } else if constexpr (std::is_same_v<T, BlockStmt>) {
          json j = to_json(n.body, o);
          if (o.locations) j["loc"] = {{"line", s.loc.line}, {"col", s.loc.col}};
          return j;
        } else if constexpr (std::is_same_v<T, ParStmt>) {
          json j = mk("Par");
          j["binder"] = n.binder;
          put_contract(j, n.contract, o);
          j["children"] = {to_json(n.lo, o), to_json(n.hi, o), to_json(n.body, o)};
          return j;
        } else if constexpr (std::is_same_v<T, ConfinedStmt>) {
          json j = mk("Confined");
          j["target"] = to_json(n.target, o);
          j["children"].push_back(to_json(n.body, o));
          return j;
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          json j = mk("Send");
          j["site"] = n.channel.site;
          j["children"] = {to_json(n.channel.sender_index, o),
                           to_json(n.channel.receiver_index, o), to_json(n.value, o)};
          return j;
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          json j = mk("Recv");
          j["site"] = n.channel.site;
          j["children"] = {to_json(n.channel.sender_index, o),
                           to_json(n.channel.receiver_index, o), to_json(n.location, o)};
          return j;
        } else {
          json j = mk("NewEndpoint");
          j["name"] = n.name;
          j["class"] = n.class_name;
          if (n.size) {
            j["binder"] = n.binder;
            j["size"] = to_json(n.size, o);
          }
          j["children"] = exprs_json(n.args, o);
          return j;
        }
      },
      s.node);
}

json to_json(const ChorStmt& s, JsonOptions o) {
  return std::visit(
      [&](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        auto mk = [&](const char* k) { return node(k, s.loc, o); };
        if constexpr (std::is_same_v<T, ChorIf>) {
          json j = mk("ChorIf");
          j["children"] = {to_json(n.cond, o), chor_block_json(n.then_branch, o),
                           chor_block_json(n.else_branch, o)};
          return j;
        } else if constexpr (std::is_same_v<T, ChorWhile>) {
          json j = mk("ChorWhile");
          if (n.invariant) j["invariant"] = to_json(n.invariant, o);
          j["children"] = {to_json(n.cond, o), chor_block_json(n.body, o)};
          return j;
        } else if constexpr (std::is_same_v<T, ChorAssert>) {
          json j = mk("ChorAssert");
          j["children"].push_back(to_json(n.expr, o));
          return j;
        } else if constexpr (std::is_same_v<T, EndpointAssign>) {
          json j = mk("EndpointAssign");
          j["target"] = to_json(n.target, o);
          j["children"] = {to_json(n.location, o), to_json(n.value, o)};
          return j;
        } else if constexpr (std::is_same_v<T, EndpointCall>) {
          json j = mk("EndpointCall");
          j["target"] = to_json(n.target, o);
          j["name"] = n.method;
          j["children"].push_back(to_json(n.receiver, o));
          for (const auto& a : n.args) j["children"].push_back(to_json(a, o));
          return j;
        } else {
          json j = mk("Communicate");
          if (n.invariant) j["invariant"] = to_json(n.invariant, o);
          j["sender"] = to_json(n.sender, o);
          j["receiver"] = to_json(n.receiver, o);
          j["children"] = {to_json(n.message, o), to_json(n.destination, o)};
          return j;
        }
      },
      s.node);
}

json to_json(const Program& p, JsonOptions o) {
  json j = node("Program", {}, {false});
  j["schema"] = kJsonSchemaVersion;
  j["pragmas"] = p.pragmas;
  for (const auto& d : p.decls) {
    json dj = std::visit(
        [&](const auto& decl) -> json {
          using T = std::decay_t<decltype(decl)>;
          if constexpr (std::is_same_v<T, ClassDecl>) {
            json c = node("Class", decl.loc, o);
            c["name"] = decl.name;
            for (const auto& f : decl.fields) {
              json fj = node("FieldDecl", f.loc, o);
              fj["name"] = f.name;
              fj["type"] = pretty(f.type);
              c["children"].push_back(fj);
            }
            if (decl.constructor)
              c["children"].push_back(method_json(*decl.constructor, "Constructor", o));
            for (const auto& m : decl.methods) c["children"].push_back(method_json(m, "Method", o));
            return c;
          } else if constexpr (std::is_same_v<T, PredicateDecl>) {
            json r = node("Predicate", decl.loc, o);
            r["name"] = decl.name;
            r["params"] = params_json(decl.params);
            r["children"].push_back(to_json(decl.body, o));
            return r;
          } else if constexpr (std::is_same_v<T, FunctionDecl>) {
            json f = node("Function", decl.loc, o);
            f["name"] = decl.name;
            f["result"] = pretty(decl.result);
            f["params"] = params_json(decl.params);
            put_contract(f, decl.contract, o);
            f["children"].push_back(to_json(decl.body, o));
            return f;
          } else {
            json c = node("Choreography", decl.loc, o);
            c["name"] = decl.name;
            c["params"] = params_json(decl.params);
            put_contract(c, decl.contract, o);
            for (const auto& ep : decl.endpoints) {
              json e = node("EndpointDecl", ep.loc, o);
              e["name"] = ep.name;
              e["class"] = ep.class_name;
              if (ep.is_family()) {
                e["binder"] = ep.binder;
                e["size"] = to_json(ep.size, o);
              }
              e["children"] = exprs_json(ep.args, o);
              c["children"].push_back(e);
            }
            json run = node("Run", {}, {false});
            put_contract(run, decl.run_contract, o);
            for (const auto& s : decl.run) run["children"].push_back(to_json(s, o));
            c["children"].push_back(run);
            return c;
          }
        },
        d);
    j["children"].push_back(dj);
  }
  return j;
}

Target target_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  auto k = r.kind();
  auto loc = r.loc();
  if (k == "Singular") {
    r.children(0, 0);
    return Target::singular(r.str("name"), loc);
  }
  if (k == "FamilyIndex") {
    r.children(1, 1);
    return Target::indexed(r.str("name"), r.child_expr(0), loc);
  }
  if (k == "FamilyRange") {
    r.children(2, 2);
    return Target::range(r.str("name"), r.str("binder"), r.child_expr(0), r.child_expr(1), loc);
  }
  throw SchemaError(path + "/kind", "unknown target kind '" + k + "'");
}

ExprPtr expr_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  auto k = r.kind();
  auto loc = r.loc();
  std::optional<ExprKind> kind;
  for (const auto& [ek, name] : kExprKinds)
    if (k == name) kind = ek;
  if (!kind) throw SchemaError(path + "/kind", "unknown expression kind '" + k + "'");
  auto op_of = [&]() {
    auto s = r.str("op");
    for (Op op : kOps)
      if (s == op_symbol(op)) return op;
    throw SchemaError(path + "/op", "unknown operator '" + s + "'");
  };
  switch (*kind) {
    case ExprKind::Var:
      r.children(0, 0);
      return ex::var(r.str("name"), loc);
    case ExprKind::IntLit: {
      r.children(0, 0);
      auto s = r.str("value");
      try {
        return ex::int_lit(Int(s), loc);
      } catch (const std::exception&) {
        throw SchemaError(path + "/value", "malformed integer '" + s + "'");
      }
    }
    case ExprKind::BoolLit:
      r.children(0, 0);
      return ex::boolean(r.boolean("value"), loc);
    case ExprKind::Field:
      r.children(1, 1);
      return ex::field(r.child_expr(0), r.str("name"), loc);
    case ExprKind::SeqIndex:
      r.children(2, 2);
      return ex::index(r.child_expr(0), r.child_expr(1), loc);
    case ExprKind::Unary: {
      r.children(1, 1);
      auto sym = r.str("op");
      if (sym != "-" && sym != "!") throw SchemaError(path + "/op", "not a unary operator");
      Op op = sym == "-" ? Op::Neg : Op::Not;
      return ex::unary(op, r.child_expr(0), loc);
    }
    case ExprKind::Binary: {
      r.children(2, 2);
      Op op = op_of();
      if (op == Op::Not) throw SchemaError(path + "/op", "not a binary operator");
      return ex::binary(op, r.child_expr(0), r.child_expr(1), loc);
    }
    case ExprKind::Call:
      return ex::call(r.str("name"), r.child_exprs(),
                      r.has("heap") && r.boolean("heap") ? Purity::Heap : Purity::Pure, loc);
    case ExprKind::PredApply:
      return ex::pred(r.str("name"), r.child_exprs(), loc);
    case ExprKind::MethodCall: {
      r.children(1);
      auto as = r.child_exprs(1);
      return ex::method_call(r.child_expr(0), r.str("name"), std::move(as), loc);
    }
    case ExprKind::This:
      r.children(0, 0);
      return ex::this_(loc);
    case ExprKind::Perm:
      r.children(2, 2);
      return ex::perm(r.child_expr(0), r.child_expr(1), loc);
    case ExprKind::Endpoint:
      r.children(1, 1);
      return ex::endpoint(r.target("target"), r.child_expr(0), loc);
    case ExprKind::Confined:
      r.children(1, 1);
      return ex::confined(r.target("target"), r.child_expr(0), loc);
    case ExprKind::Chor:
      r.children(1, 1);
      return ex::chor(r.child_expr(0), loc);
    case ExprKind::Msg:
    case ExprKind::Sender:
    case ExprKind::Receiver:
    case ExprKind::Result:
      r.children(0, 0);
      return ex::placeholder(*kind, loc);
    case ExprKind::Forall:
      r.children(3, 3);
      return ex::forall(r.type("type"), r.str("name"), r.child_expr(0), r.child_expr(1),
                        r.child_expr(2), loc);
    case ExprKind::SeqLit:
      return ex::seq_lit(r.type("type"), r.child_exprs(), loc);
    case ExprKind::SeqLength:
      r.children(1, 1);
      return ex::seq_len(r.child_expr(0), loc);
  }
  r.fail("unreachable");
}

Block block_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  if (r.kind() != "Block") r.fail("expected a Block node");
  return stmts_of(r);
}

Stmt stmt_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  auto k = r.kind();
  Loc loc = r.loc();
  auto mk = [&](auto n) { return make_stmt(std::move(n), loc); };
  if (k == "Assign") {
    r.children(2, 2);
    return mk(AssignStmt{r.child_expr(0), r.child_expr(1)});
  }
  if (k == "Decl") {
    r.children(0, 1);
    return mk(DeclStmt{r.type("type"), r.str("name"),
                       r.children().empty() ? nullptr : r.child_expr(0)});
  }
  if (k == "Call") {
    r.children(1);
    return mk(CallStmt{r.child_expr(0), r.str("name"), r.child_exprs(1), r.boolean("adapted")});
  }
  if (k == "If") {
    r.children(3, 3);
    return mk(IfStmt{r.child_expr(0), block_child(r, 1), block_child(r, 2)});
  }
  if (k == "While") {
    r.children(2, 2);
    return mk(WhileStmt{r.opt_expr("invariant"), r.child_expr(0), block_child(r, 1)});
  }
  if (k == "Assert") {
    r.children(1, 1);
    return mk(AssertStmt{r.child_expr(0), r.str_or("check", "")});
  }
  if (k == "Inhale") {
    r.children(1, 1);
    return mk(InhaleStmt{r.child_expr(0)});
  }
  if (k == "Exhale") {
    r.children(1, 1);
    return mk(ExhaleStmt{r.child_expr(0)});
  }
  if (k == "Block") return mk(BlockStmt{stmts_of(r)});
  if (k == "Par") {
    r.children(3, 3);
    return mk(ParStmt{r.str("binder"), r.child_expr(0), r.child_expr(1), r.contract(),
                      block_child(r, 2)});
  }
  if (k == "Confined") {
    r.children(1, 1);
    return mk(ConfinedStmt{r.target("target"), block_child(r, 0)});
  }
  if (k == "Send" || k == "Recv") {
    r.children(3, 3);
    ChannelRef ch{r.integer("site"), r.child_expr(0), r.child_expr(1)};
    if (k == "Send") return mk(SendStmt{std::move(ch), r.child_expr(2)});
    return mk(RecvStmt{std::move(ch), r.child_expr(2)});
  }
  if (k == "NewEndpoint") {
    NewEndpointStmt n{r.str("name"), r.str_or("binder", ""), r.opt_expr("size"), r.str("class"),
                      r.child_exprs()};
    return mk(std::move(n));
  }
  throw SchemaError(path + "/kind", "unknown statement kind '" + k + "'");
}

ChorStmt chor_stmt_from_json(const json& j, const std::string& path) {
  Reader r(j, path);
  auto k = r.kind();
  Loc loc = r.loc();
  if (k == "ChorIf") {
    r.children(3, 3);
    return {ChorIf{r.child_expr(0), chor_block_of(r.children()[1], r.child_path(1)),
                   chor_block_of(r.children()[2], r.child_path(2))},
            loc};
  }
  if (k == "ChorWhile") {
    r.children(2, 2);
    return {ChorWhile{r.opt_expr("invariant"), r.child_expr(0),
                      chor_block_of(r.children()[1], r.child_path(1))},
            loc};
  }
  if (k == "ChorAssert") {
    r.children(1, 1);
    return {ChorAssert{r.child_expr(0)}, loc};
  }
  if (k == "EndpointAssign") {
    r.children(2, 2);
    return {EndpointAssign{r.target("target"), r.child_expr(0), r.child_expr(1)}, loc};
  }
  if (k == "EndpointCall") {
    r.children(1);
    return {EndpointCall{r.target("target"), r.child_expr(0), r.str("name"), r.child_exprs(1)},
            loc};
  }
  if (k == "Communicate") {
    r.children(2, 2);
    return {Communicate{r.opt_expr("invariant"), r.target("sender"), r.child_expr(0),
                        r.target("receiver"), r.child_expr(1)},
            loc};
  }
  throw SchemaError(path + "/kind", "unknown choreographic statement kind '" + k + "'");
}

Program program_from_json(const json& j) {
  Reader top(j, "");
  if (top.kind() != "Program") top.fail("expected a Program node");
  if (top.integer("schema") != kJsonSchemaVersion)
    throw SchemaError("/schema", "unsupported schema version");
  Program p;
  const auto& pr = top.at("pragmas");
  if (!pr.is_array()) throw SchemaError("/pragmas", "expected an array");
  for (std::size_t i = 0; i < pr.size(); ++i) {
    if (!pr[i].is_string()) throw SchemaError("/pragmas/" + std::to_string(i), "expected a string");
    p.pragmas.push_back(pr[i].get<std::string>());
  }
  const auto& decls = top.children();
  for (std::size_t i = 0; i < decls.size(); ++i) {
    Reader d(decls[i], top.child_path(i));
    auto k = d.kind();
    if (k == "Class") {
      ClassDecl c;
      c.loc = d.loc();
      c.name = d.str("name");
      const auto& members = d.children();
      for (std::size_t m = 0; m < members.size(); ++m) {
        Reader mr(members[m], d.child_path(m));
        auto mk = mr.kind();
        if (mk == "FieldDecl") {
          c.fields.push_back({mr.type("type"), mr.str("name"), mr.loc()});
        } else if (mk == "Method") {
          c.methods.push_back(method_of(mr));
        } else if (mk == "Constructor") {
          if (c.constructor) mr.fail("duplicate constructor");
          c.constructor = method_of(mr);
        } else {
          throw SchemaError(mr.path() + "/kind", "unknown class member kind '" + mk + "'");
        }
      }
      p.decls.push_back(std::move(c));
    } else if (k == "Predicate") {
      d.children(1, 1);
      p.decls.push_back(PredicateDecl{d.str("name"), d.params(), d.child_expr(0), d.loc()});
    } else if (k == "Function") {
      d.children(1, 1);
      p.decls.push_back(FunctionDecl{d.contract(), d.type("result"), d.str("name"), d.params(),
                                     d.child_expr(0), d.loc()});
    } else if (k == "Choreography") {
      Choreography c;
      c.loc = d.loc();
      c.name = d.str("name");
      c.params = d.params();
      c.contract = d.contract();
      const auto& kids = d.children(1);
      for (std::size_t e = 0; e + 1 < kids.size(); ++e) {
        Reader er(kids[e], d.child_path(e));
        if (er.kind() != "EndpointDecl") er.fail("expected an EndpointDecl node");
        EndpointDecl ep;
        ep.loc = er.loc();
        ep.name = er.str("name");
        ep.class_name = er.str("class");
        ep.size = er.opt_expr("size");
        if (ep.size) ep.binder = er.str("binder");
        ep.args = er.child_exprs();
        c.endpoints.push_back(std::move(ep));
      }
      Reader run(kids.back(), d.child_path(kids.size() - 1));
      if (run.kind() != "Run") run.fail("expected a Run node as last child");
      c.run_contract = run.contract();
      const auto& stmts = run.children();
      for (std::size_t s = 0; s < stmts.size(); ++s)
        c.run.push_back(chor_stmt_from_json(stmts[s], run.child_path(s)));
      p.decls.push_back(std::move(c));
    } else {
      throw SchemaError(d.path() + "/kind", "unknown declaration kind '" + k + "'");
    }
  }
  return p;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

bool structurally_equal(const Program& a, const Program& b) {
  return to_json(a, {false}) == to_json(b, {false});
}

bool operator==(const Program& a, const Program& b) { return to_json(a) == to_json(b); }

}  // namespace chorcc

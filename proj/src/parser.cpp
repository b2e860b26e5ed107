#include <set>
#include <stdexcept>

#include "chorcc/frontend.hpp"

namespace chorcc {

namespace {

struct SyntaxError {
  std::string message;
  Loc loc;
};

const std::set<std::string, std::less<>> kReserved = {
    "class",  "resource", "pure",   "choreography", "endpoint", "run",
    "requires", "ensures", "if",    "else",         "while",    "loop_invariant",
    "assert", "inhale",   "exhale", "communicate",  "channel_invariant",
    "true",   "false",    "this",   "void",         "int",      "boolean",
    "seq",    "par",      "Perm"};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags)
      : toks_(std::move(toks)), diags_(diags) {}

  Program program() {
    Program p;
    while (!at_end()) {
      if (peek().kind == Token::Kind::Pragma) {
        p.pragmas.push_back(next().text);
        continue;
      }
      std::size_t start = pos_;
      try {
        p.decls.push_back(decl());
      } catch (const SyntaxError& e) {
        report(e);
        sync_toplevel(start);
      }
    }
    return p;
  }

  ExprPtr standalone_expression() {
    auto e = expr();
    if (!at_end()) fail("unexpected '" + peek().text + "' after expression");
    return e;
  }

 private:
  // -- token helpers --------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    skip_pragmas();
    return t;
  }
  void skip_pragmas() {
    // pragmas inside declarations are dropped
    while (depth_ > 0 && toks_[pos_].kind == Token::Kind::Pragma && pos_ + 1 < toks_.size())
      ++pos_;
  }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return (t.kind == Token::Kind::Punct || t.kind == Token::Kind::Keyword ||
            t.kind == Token::Kind::Ident) &&
           t.text == text;
  }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    next();
    return true;
  }
  Loc expect(std::string_view text) {
    if (!is(text)) {
      std::string got = at_end() ? "end of input" : "'" + peek().text + "'";
      fail("expected '" + std::string(text) + "' but found " + got);
    }
    return next().loc;
  }
  std::string ident(const char* what = "identifier") {
    const auto& t = peek();
    if (t.kind != Token::Kind::Ident || kReserved.count(t.text))
      fail(std::string("expected ") + what + " but found '" + t.text + "'");
    return next().text;
  }
  [[noreturn]] void fail(std::string msg) const { throw SyntaxError{std::move(msg), peek().loc}; }
  void report(const SyntaxError& e) {
    diags_.push_back({Severity::Error, RuleId::Syntax, e.message, e.loc, e.loc});
  }

  // Skip to the end of the current statement: past the next ';' at the
  // current nesting level, or up to (not past) a closing '}'.
  void sync_statement() {
    int nest = 0;
    while (!at_end()) {
      if (is("{")) ++nest;
      if (is("}")) {
        if (nest == 0) return;
        if (--nest == 0) {
          next();
          return;
        }
      }
      if (is(";") && nest == 0) {
        next();
        return;
      }
      next();
    }
  }

  void sync_toplevel(std::size_t start) {
    if (pos_ == start) next();
    int nest = depth_;
    depth_ = 0;
    while (!at_end()) {
      if (is("{")) ++nest;
      if (is("}")) {
        --nest;
        next();
        if (nest <= 0) return;
        continue;
      }
      if (is(";") && nest <= 0) {
        next();
        return;
      }
      next();
    }
  }

  // -- declarations ---------------------------------------------------------

  Contract contract() {
    Contract c;
    for (;;) {
      if (accept("requires")) {
        c.pre.push_back(expr());
        expect(";");
      } else if (accept("ensures")) {
        c.post.push_back(expr());
        expect(";");
      } else {
        return c;
      }
    }
  }

  Type type() {
    if (accept("int")) return Type::integer();
    if (accept("boolean")) return Type::boolean();
    if (accept("seq")) {
      expect("<");
      auto elem = type();
      expect(">");
      return Type::seq(std::move(elem));
    }
    return Type::cls(ident("type"));
  }

  bool at_type() const {
    if (is("int") || is("boolean") || is("seq")) return true;
    return peek().kind == Token::Kind::Ident && !kReserved.count(peek().text) &&
           peek(1).kind == Token::Kind::Ident && !kReserved.count(peek(1).text);
  }

  std::vector<Param> params() {
    std::vector<Param> ps;
    expect("(");
    if (!is(")")) {
      do {
        auto t = type();
        ps.push_back({std::move(t), ident("parameter name")});
      } while (accept(","));
    }
    expect(")");
    return ps;
  }

  std::vector<ExprPtr> args() {
    std::vector<ExprPtr> as;
    expect("(");
    if (!is(")")) {
      do as.push_back(expr());
      while (accept(","));
    }
    expect(")");
    return as;
  }

  Decl decl() {
    Loc loc = peek().loc;
    auto c = contract();
    if (is("class")) {
      if (!c.empty()) fail("classes cannot carry a contract");
      return class_decl();
    }
    if (accept("resource")) {
      if (!c.empty()) fail("resource predicates cannot carry a contract");
      PredicateDecl p;
      p.loc = loc;
      p.name = ident("predicate name");
      p.params = params();
      expect("=");
      p.body = expr();
      expect(";");
      return p;
    }
    if (accept("pure")) {
      FunctionDecl f;
      f.loc = loc;
      f.contract = std::move(c);
      f.result = type();
      f.name = ident("function name");
      f.params = params();
      expect("=");
      f.body = expr();
      expect(";");
      return f;
    }
    if (accept("choreography")) return choreography(std::move(c), loc);
    fail("expected a declaration but found '" + peek().text + "'");
  }

  ClassDecl class_decl() {
    ClassDecl cls;
    cls.loc = expect("class");
    cls.name = ident("class name");
    expect("{");
    ++depth_;
    while (!is("}") && !at_end()) {
      std::size_t start = pos_;
      try {
        Loc mloc = peek().loc;
        auto c = contract();
        if (is(cls.name) && is("(", 1)) {
          next();
          if (cls.constructor) fail("duplicate constructor for class " + cls.name);
          MethodDecl m;
          m.loc = mloc;
          m.contract = std::move(c);
          m.name = cls.name;
          m.params = params();
          m.body = block();
          cls.constructor = std::move(m);
        } else if (accept("void")) {
          MethodDecl m;
          m.loc = mloc;
          m.contract = std::move(c);
          m.name = ident("method name");
          m.params = params();
          m.body = block();
          cls.methods.push_back(std::move(m));
        } else {
          if (!c.empty()) fail("methods must be declared 'void'");
          auto t = type();
          auto name = ident("field name");
          if (is("(")) fail("methods must be declared 'void'");
          expect(";");
          cls.fields.push_back({std::move(t), std::move(name), mloc});
        }
      } catch (const SyntaxError& e) {
        report(e);
        if (pos_ == start) next();
        sync_statement();
      }
    }
    --depth_;
    expect("}");
    return cls;
  }

  Choreography choreography(Contract c, Loc loc) {
    Choreography ch;
    ch.loc = loc;
    ch.contract = std::move(c);
    if (peek().kind == Token::Kind::Ident && !kReserved.count(peek().text)) ch.name = next().text;
    ch.params = params();
    expect("{");
    ++depth_;
    bool have_run = false;
    while (!is("}") && !at_end()) {
      std::size_t start = pos_;
      try {
        Loc dloc = peek().loc;
        auto rc = contract();
        if (accept("run")) {
          if (have_run) fail("duplicate run declaration");
          have_run = true;
          ch.run_contract = std::move(rc);
          ch.run = chor_block();
        } else if (accept("endpoint")) {
          if (!rc.empty()) fail("endpoint declarations cannot carry a contract");
          ch.endpoints.push_back(endpoint_decl(dloc));
        } else {
          fail("expected 'endpoint' or 'run' but found '" + peek().text + "'");
        }
      } catch (const SyntaxError& e) {
        report(e);
        if (pos_ == start) next();
        sync_statement();
      }
    }
    --depth_;
    expect("}");
    return ch;
  }

  EndpointDecl endpoint_decl(Loc loc) {
    EndpointDecl d;
    d.loc = loc;
    d.name = ident("endpoint name");
    if (accept("[")) {
      d.binder = ident("family binder");
      expect(":=");
      auto lo = expr();
      if (lo->kind != ExprKind::IntLit || lo->value != 0)
        throw SyntaxError{"family ranges in declarations must start at 0", lo->loc};
      expect("..");
      d.size = expr();
      expect("]");
    }
    expect("=");
    d.class_name = ident("class name");
    d.args = args();
    expect(";");
    return d;
  }

  // -- statements ------------------------------------------------------------

  Block block() {
    expect("{");
    ++depth_;
    Block b;
    while (!is("}") && !at_end()) {
      std::size_t start = pos_;
      try {
        b.push_back(stmt());
      } catch (const SyntaxError& e) {
        report(e);
        if (pos_ == start) next();
        sync_statement();
      }
    }
    --depth_;
    expect("}");
    return b;
  }

  Stmt stmt() {
    Loc loc = peek().loc;
    if (is("{")) return make_stmt(BlockStmt{block()}, loc);
    if (accept("assert")) {
      auto e = expr();
      expect(";");
      return make_stmt(AssertStmt{e, ""}, loc);
    }
    if (accept("inhale")) {
      auto e = expr();
      expect(";");
      return make_stmt(InhaleStmt{e}, loc);
    }
    if (accept("exhale")) {
      auto e = expr();
      expect(";");
      return make_stmt(ExhaleStmt{e}, loc);
    }
    if (accept("if")) {
      expect("(");
      auto c = expr();
      expect(")");
      auto then_b = block();
      Block else_b;
      if (accept("else")) {
        if (is("if"))
          else_b.push_back(stmt());
        else
          else_b = block();
      }
      return make_stmt(IfStmt{c, std::move(then_b), std::move(else_b)}, loc);
    }
    if (is("loop_invariant") || is("while")) {
      ExprPtr inv = invariants();
      expect("while");
      expect("(");
      auto c = expr();
      expect(")");
      return make_stmt(WhileStmt{inv, c, block()}, loc);
    }
    if (is("par") || (is("requires") || is("ensures")))
      fail("par blocks are not supported in source programs");
    if (at_type()) {
      auto t = type();
      auto name = ident("variable name");
      ExprPtr init;
      if (accept("=")) init = expr();
      expect(";");
      return make_stmt(DeclStmt{std::move(t), std::move(name), init}, loc);
    }
    auto lhs = postfix();
    if (accept("=")) {
      auto rhs = expr();
      expect(";");
      return make_stmt(AssignStmt{lhs, rhs}, loc);
    }
    if (lhs->kind == ExprKind::MethodCall) {
      expect(";");
      std::vector<ExprPtr> as(lhs->kids.begin() + 1, lhs->kids.end());
      return make_stmt(CallStmt{lhs->kids[0], lhs->name, std::move(as), false}, loc);
    }
    throw SyntaxError{"expected a statement", loc};
  }

  ExprPtr invariants() {
    ExprPtr inv;
    while (accept("loop_invariant")) {
      auto e = expr();
      expect(";");
      inv = inv ? ex::binary(Op::And, inv, e, inv->loc) : e;
    }
    return inv;
  }

  ChorBlock chor_block() {
    expect("{");
    ++depth_;
    ChorBlock b;
    while (!is("}") && !at_end()) {
      std::size_t start = pos_;
      try {
        b.push_back(chor_stmt());
      } catch (const SyntaxError& e) {
        report(e);
        if (pos_ == start) next();
        sync_statement();
      }
    }
    --depth_;
    expect("}");
    return b;
  }

  ChorStmt chor_stmt() {
    Loc loc = peek().loc;
    if (accept("if")) {
      expect("(");
      auto c = expr();
      expect(")");
      auto then_b = chor_block();
      ChorBlock else_b;
      if (accept("else")) {
        if (is("if"))
          else_b.push_back(chor_stmt());
        else
          else_b = chor_block();
      }
      return {ChorIf{c, std::move(then_b), std::move(else_b)}, loc};
    }
    if (is("loop_invariant") || is("while")) {
      ExprPtr inv = invariants();
      expect("while");
      expect("(");
      auto c = expr();
      expect(")");
      return {ChorWhile{inv, c, chor_block()}, loc};
    }
    if (accept("assert")) {
      auto e = expr();
      expect(";");
      return {ChorAssert{e}, loc};
    }
    if (accept("endpoint")) {
      auto t = target();
      expect(":");
      auto lhs = postfix();
      if (accept(":=")) {
        auto rhs = expr();
        expect(";");
        return {EndpointAssign{std::move(t), lhs, rhs}, loc};
      }
      if (lhs->kind == ExprKind::MethodCall) {
        expect(";");
        std::vector<ExprPtr> as(lhs->kids.begin() + 1, lhs->kids.end());
        return {EndpointCall{std::move(t), lhs->kids[0], lhs->name, std::move(as)}, loc};
      }
      fail("expected ':=' or a method call in endpoint statement");
    }
    ExprPtr inv;
    if (accept("channel_invariant")) {
      inv = expr();
      expect(";");
    }
    if (accept("communicate")) {
      auto sender = target();
      expect(":");
      auto msg = expr();
      expect("->");
      auto receiver = target();
      expect(":");
      auto dest = expr();
      expect(";");
      return {Communicate{inv, std::move(sender), msg, std::move(receiver), dest}, loc};
    }
    if (inv) fail("expected 'communicate' after channel invariant");
    if (is("par")) fail("par blocks are not supported in source programs");
    fail("expected a choreographic statement but found '" + peek().text + "'");
  }

  Target target() {
    Loc loc = peek().loc;
    auto name = ident("endpoint name");
    if (!accept("[")) return Target::singular(std::move(name), loc);
    if (peek().kind == Token::Kind::Ident && is(":=", 1)) {
      auto binder = ident("binder");
      expect(":=");
      auto lo = expr();
      expect("..");
      auto hi = expr();
      expect("]");
      return Target::range(std::move(name), std::move(binder), lo, hi, loc);
    }
    auto idx = expr();
    expect("]");
    return Target::indexed(std::move(name), idx, loc);
  }

  // -- expressions -------------------------------------------------------------

  ExprPtr expr() { return implies(); }

  ExprPtr implies() {
    auto l = star();
    if (is("==>")) {
      Loc loc = next().loc;
      return ex::binary(Op::Implies, l, implies(), loc);
    }
    return l;
  }

  ExprPtr star() {
    auto l = disj();
    while (is("**")) {
      Loc loc = next().loc;
      l = ex::binary(Op::Star, l, disj(), loc);
    }
    return l;
  }

  ExprPtr disj() {
    auto l = conj();
    while (is("||")) {
      Loc loc = next().loc;
      l = ex::binary(Op::Or, l, conj(), loc);
    }
    return l;
  }

  ExprPtr conj() {
    auto l = cmp();
    while (is("&&")) {
      Loc loc = next().loc;
      l = ex::binary(Op::And, l, cmp(), loc);
    }
    return l;
  }

  std::optional<Op> cmp_op() const {
    static const std::pair<const char*, Op> ops[] = {{"==", Op::Eq}, {"!=", Op::Ne},
                                                      {"<=", Op::Le}, {">=", Op::Ge},
                                                      {"<", Op::Lt},  {">", Op::Gt}};
    if (peek().kind != Token::Kind::Punct) return std::nullopt;
    for (const auto& [s, op] : ops)
      if (peek().text == s) return op;
    return std::nullopt;
  }

  ExprPtr cmp() {
    auto l = add();
    if (auto op = cmp_op()) {
      Loc loc = next().loc;
      auto r = add();
      if (cmp_op()) fail("comparison operators are non-associative; add parentheses");
      return ex::binary(*op, l, r, loc);
    }
    return l;
  }

  ExprPtr add() {
    auto l = mul();
    for (;;) {
      if (is("+")) {
        Loc loc = next().loc;
        l = ex::binary(Op::Add, l, mul(), loc);
      } else if (is("-")) {
        Loc loc = next().loc;
        l = ex::binary(Op::Sub, l, mul(), loc);
      } else {
        return l;
      }
    }
  }

  ExprPtr mul() {
    auto l = unary();
    for (;;) {
      Op op;
      if (is("*")) op = Op::Mul;
      else if (is("/")) op = Op::Div;
      else if (is("%")) op = Op::Mod;
      else if (is("\\")) op = Op::Frac;
      else return l;
      Loc loc = next().loc;
      l = ex::binary(op, l, unary(), loc);
    }
  }

  ExprPtr unary() {
    if (is("!")) {
      Loc loc = next().loc;
      return ex::unary(Op::Not, unary(), loc);
    }
    if (is("-")) {
      Loc loc = next().loc;
      return ex::unary(Op::Neg, unary(), loc);
    }
    return postfix();
  }

  ExprPtr postfix() {
    auto e = primary();
    for (;;) {
      if (is(".")) {
        Loc loc = next().loc;
        auto name = ident("field or method name");
        if (is("("))
          e = ex::method_call(e, name, args(), loc);
        else
          e = ex::field(e, name, loc);
      } else if (is("[")) {
        Loc loc = next().loc;
        auto i = expr();
        expect("]");
        e = ex::index(e, i, loc);
      } else {
        return e;
      }
    }
  }

  ExprPtr primary() {
    const Token& t = peek();
    Loc loc = t.loc;
    if (t.kind == Token::Kind::Number) {
      next();
      return ex::int_lit(Int(t.text), loc);
    }
    if (accept("true")) return ex::boolean(true, loc);
    if (accept("false")) return ex::boolean(false, loc);
    if (accept("this")) return ex::this_(loc);
    if (accept("\\msg")) return ex::placeholder(ExprKind::Msg, loc);
    if (accept("\\sender")) return ex::placeholder(ExprKind::Sender, loc);
    if (accept("\\receiver")) return ex::placeholder(ExprKind::Receiver, loc);
    if (accept("\\result")) return ex::placeholder(ExprKind::Result, loc);
    if (accept("Perm")) {
      expect("(");
      auto l = expr();
      expect(",");
      auto a = expr();
      expect(")");
      return ex::perm(l, a, loc);
    }
    if (accept("seq")) {
      expect("<");
      auto elem = type();
      expect(">");
      expect("{");
      std::vector<ExprPtr> items;
      if (!is("}")) {
        do items.push_back(expr());
        while (accept(","));
      }
      expect("}");
      return ex::seq_lit(std::move(elem), std::move(items), loc);
    }
    if (accept("|")) {
      auto e = expr();
      expect("|");
      return ex::seq_len(e, loc);
    }
    if (accept("(")) {
      if (accept("\\endpoint")) {
        auto tg = target();
        expect(";");
        auto body = expr();
        expect(")");
        return ex::endpoint(std::move(tg), body, loc);
      }
      if (accept("\\confined")) {
        auto tg = target();
        expect(";");
        auto body = expr();
        expect(")");
        return ex::confined(std::move(tg), body, loc);
      }
      if (accept("\\chor")) {
        auto body = expr();
        expect(")");
        return ex::chor(body, loc);
      }
      if (accept("\\forall")) {
        auto ty = type();
        auto binder = ident("quantified variable");
        expect("=");
        auto lo = expr();
        expect("..");
        auto hi = expr();
        expect(";");
        auto body = expr();
        expect(")");
        return ex::forall(std::move(ty), std::move(binder), lo, hi, body, loc);
      }
      auto e = expr();
      expect(")");
      return e;
    }
    if (t.kind == Token::Kind::Ident && !kReserved.count(t.text)) {
      auto name = next().text;
      if (is("(")) return ex::call(std::move(name), args(), Purity::Pure, loc);
      return ex::var(std::move(name), loc);
    }
    fail(at_end() ? "unexpected end of input in expression"
                  : "unexpected '" + t.text + "' in expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<Diagnostic>& diags_;
};

// -- call resolution ---------------------------------------------------------

bool body_reads_heap(const ExprPtr& body, const std::set<std::string>& heap_fns) {
  return any_node(body, [&](const Expr& n) {
    return n.kind == ExprKind::Field || n.kind == ExprKind::This ||
           (n.kind == ExprKind::Call && heap_fns.count(n.name));
  });
}

ExprPtr resolve_expr(const ExprPtr& e, const Program& p, const std::set<std::string>& heap_fns) {
  return rewrite(e, [&](const ExprPtr& n) -> ExprPtr {
    if (n->kind != ExprKind::Call) return nullptr;
    std::vector<ExprPtr> as;
    for (const auto& a : n->kids) as.push_back(resolve_expr(a, p, heap_fns));
    if (p.find_predicate(n->name)) return ex::pred(n->name, std::move(as), n->loc);
    return ex::call(n->name, std::move(as),
                    heap_fns.count(n->name) ? Purity::Heap : Purity::Pure, n->loc);
  });
}

}  // namespace

void resolve_calls(Program& p) {
  std::set<std::string> heap_fns;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& d : p.decls)
      if (const auto* f = std::get_if<FunctionDecl>(&d))
        if (!heap_fns.count(f->name) && body_reads_heap(f->body, heap_fns)) {
          heap_fns.insert(f->name);
          changed = true;
        }
  }
  ExprMap fn = [&](const ExprPtr& e) { return resolve_expr(e, p, heap_fns); };
  auto fix_contract = [&](Contract& c) {
    for (auto& e : c.pre) e = fn(e);
    for (auto& e : c.post) e = fn(e);
  };
  auto fix_method = [&](MethodDecl& m) {
    fix_contract(m.contract);
    m.body = map_exprs(m.body, fn);
  };
  for (auto& d : p.decls) {
    std::visit(
        [&](auto& decl) {
          using T = std::decay_t<decltype(decl)>;
          if constexpr (std::is_same_v<T, ClassDecl>) {
            for (auto& m : decl.methods) fix_method(m);
            if (decl.constructor) fix_method(*decl.constructor);
          } else if constexpr (std::is_same_v<T, PredicateDecl>) {
            decl.body = fn(decl.body);
          } else if constexpr (std::is_same_v<T, FunctionDecl>) {
            fix_contract(decl.contract);
            decl.body = fn(decl.body);
          } else {
            fix_contract(decl.contract);
            fix_contract(decl.run_contract);
            for (auto& ep : decl.endpoints) {
              if (ep.size) ep.size = fn(ep.size);
              for (auto& a : ep.args) a = fn(a);
            }
            decl.run = map_exprs(decl.run, fn);
          }
        },
        d);
  }
}

ParseResult parse(const SourceFile& src) {
  ParseResult r;
  auto toks = lex(src, r.diagnostics);
  Parser parser(std::move(toks), r.diagnostics);
  Program p = parser.program();
  int chors = 0;
  for (const auto& d : p.decls) {
    if (const auto* c = std::get_if<Choreography>(&d)) {
      if (++chors == 2)
        r.diagnostics.push_back({Severity::Error, RuleId::DuplicateChoreography,
                                 "more than one choreography in compilation unit", c->loc,
                                 c->loc});
    }
  }
  if (chors == 0 && !has_errors(r.diagnostics)) {
    Loc end = src.loc_of(src.text.size());
    r.diagnostics.push_back(
        {Severity::Error, RuleId::MissingChoreography, "missing choreography", end, end});
  }
  if (has_errors(r.diagnostics)) return r;
  resolve_calls(p);
  r.program = std::move(p);
  return r;
}

ExprPtr parse_expression(std::string_view text) {
  std::vector<Diagnostic> diags;
  auto src = SourceFile::from_string(std::string(text));
  auto toks = lex(src, diags);
  if (has_errors(diags)) throw std::invalid_argument(format(diags.front()));
  Parser parser(std::move(toks), diags);
  try {
    return parser.standalone_expression();
  } catch (const SyntaxError& e) {
    throw std::invalid_argument(std::to_string(e.loc.line) + ":" + std::to_string(e.loc.col) +
                                ": " + e.message);
  }
}

}  // namespace chorcc

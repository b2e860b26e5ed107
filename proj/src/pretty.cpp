#include <sstream>

#include "chorcc/frontend.hpp"

namespace chorcc {

namespace {

enum Prec : int {
  kImplies = 1,
  kStar = 2,
  kOr = 3,
  kAnd = 4,
  kCmp = 5,
  kAdd = 6,
  kMul = 7,
  kUnary = 8,
  kPostfix = 9,
  kPrimary = 10,
};

int prec_of(Op op) {
  switch (op) {
    case Op::Implies: return kImplies;
    case Op::Star: return kStar;
    case Op::Or: return kOr;
    case Op::And: return kAnd;
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: return kCmp;
    case Op::Add:
    case Op::Sub: return kAdd;
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
    case Op::Frac: return kMul;
    case Op::Not:
    case Op::Neg: return kUnary;
  }
  return kPrimary;
}

int prec_of(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary: return prec_of(e.op);
    case ExprKind::Unary: return kUnary;
    case ExprKind::Field:
    case ExprKind::SeqIndex:
    case ExprKind::MethodCall: return kPostfix;
    case ExprKind::IntLit: return e.value < 0 ? kUnary : kPrimary;
    default: return kPrimary;
  }
}

void print(std::ostream& os, const ExprPtr& e, int min_prec);

void print_list(std::ostream& os, const std::vector<ExprPtr>& xs, std::size_t from = 0) {
  for (std::size_t i = from; i < xs.size(); ++i) {
    if (i > from) os << ", ";
    print(os, xs[i], 0);
  }
}

void print_target(std::ostream& os, const Target& t) {
  os << t.name;
  if (t.is_indexed()) {
    os << '[';
    print(os, t.index, 0);
    os << ']';
  } else if (t.is_range()) {
    os << '[' << t.binder << " := ";
    print(os, t.lo, 0);
    os << " .. ";
    print(os, t.hi, 0);
    os << ']';
  }
}

void print_inner(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case ExprKind::Var: os << e.name; return;
    case ExprKind::IntLit: os << e.value; return;
    case ExprKind::BoolLit: os << (e.flag ? "true" : "false"); return;
    case ExprKind::This: os << "this"; return;
    case ExprKind::Msg: os << "\\msg"; return;
    case ExprKind::Sender: os << "\\sender"; return;
    case ExprKind::Receiver: os << "\\receiver"; return;
    case ExprKind::Result: os << "\\result"; return;
    case ExprKind::Field:
      print(os, e.kids[0], kPostfix);
      os << '.' << e.name;
      return;
    case ExprKind::SeqIndex:
      print(os, e.kids[0], kPostfix);
      os << '[';
      print(os, e.kids[1], 0);
      os << ']';
      return;
    case ExprKind::MethodCall:
      print(os, e.kids[0], kPostfix);
      os << '.' << e.name << '(';
      print_list(os, e.kids, 1);
      os << ')';
      return;
    case ExprKind::Unary:
      os << op_symbol(e.op);
      print(os, e.kids[0], kUnary);
      return;
    case ExprKind::Binary: {
      int p = prec_of(e.op);
      int lp = p, rp = p + 1;
      if (e.op == Op::Implies) lp = p + 1, rp = p;
      if (p == kCmp) lp = rp = p + 1;
      print(os, e.kids[0], lp);
      // fractions render as num\den; a letter after '\' would lex as a keyword
      if (e.op == Op::Frac && e.kids[1]->kind == ExprKind::IntLit && e.kids[1]->value >= 0)
        os << op_symbol(e.op);
      else
        os << ' ' << op_symbol(e.op) << ' ';
      print(os, e.kids[1], rp);
      return;
    }
    case ExprKind::Call:
    case ExprKind::PredApply:
      os << e.name << '(';
      print_list(os, e.kids);
      os << ')';
      return;
    case ExprKind::Perm:
      os << "Perm(";
      print_list(os, e.kids);
      os << ')';
      return;
    case ExprKind::Endpoint:
    case ExprKind::Confined:
      os << (e.kind == ExprKind::Endpoint ? "(\\endpoint " : "(\\confined ");
      print_target(os, *e.target);
      os << "; ";
      print(os, e.kids[0], 0);
      os << ')';
      return;
    case ExprKind::Chor:
      os << "(\\chor ";
      print(os, e.kids[0], 0);
      os << ')';
      return;
    case ExprKind::Forall:
      os << "(\\forall " << pretty(e.type) << ' ' << e.name << " = ";
      print(os, e.kids[0], 0);
      os << " .. ";
      print(os, e.kids[1], 0);
      os << "; ";
      print(os, e.kids[2], 0);
      os << ')';
      return;
    case ExprKind::SeqLit:
      os << "seq<" << pretty(e.type) << ">{";
      print_list(os, e.kids);
      os << '}';
      return;
    case ExprKind::SeqLength:
      os << '|';
      print(os, e.kids[0], 0);
      os << '|';
      return;
  }
}

void print(std::ostream& os, const ExprPtr& e, int min_prec) {
  if (!e) {
    os << "<null>";
    return;
  }
  bool paren = prec_of(*e) < min_prec;
  if (paren) os << '(';
  print_inner(os, *e);
  if (paren) os << ')';
}

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

void print_contract(std::ostream& os, const Contract& c, int indent) {
  for (const auto& e : c.pre) os << pad(indent) << "requires " << pretty(e) << ";\n";
  for (const auto& e : c.post) os << pad(indent) << "ensures " << pretty(e) << ";\n";
}

void print_block(std::ostream& os, const Block& b, int indent);

std::string channel(const ChannelRef& c) {
  return "chan(" + std::to_string(c.site) + ", " + pretty(c.sender_index) + ", " +
         pretty(c.receiver_index) + ")";
}

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
  std::string p = pad(indent);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AssignStmt>) {
          os << p << pretty(n.lhs) << " = " << pretty(n.rhs) << ";\n";
        } else if constexpr (std::is_same_v<T, DeclStmt>) {
          os << p << pretty(n.type) << ' ' << n.name;
          if (n.init) os << " = " << pretty(n.init);
          os << ";\n";
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          os << p;
          print(os, n.receiver, kPostfix);
          os << '.' << n.method << '(';
          print_list(os, n.args);
          os << ')' << (n.adapted ? " /* adapted */" : "") << ";\n";
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          os << p << "if (" << pretty(n.cond) << ") ";
          print_block(os, n.then_branch, indent);
          if (!n.else_branch.empty()) {
            os << " else ";
            print_block(os, n.else_branch, indent);
          }
          os << '\n';
        } else if constexpr (std::is_same_v<T, WhileStmt>) {
          if (n.invariant) os << p << "loop_invariant " << pretty(n.invariant) << ";\n";
          os << p << "while (" << pretty(n.cond) << ") ";
          print_block(os, n.body, indent);
          os << '\n';
        } else if constexpr (std::is_same_v<T, AssertStmt>) {
          os << p << "assert";
          if (!n.check.empty()) os << '[' << n.check << ']';
          os << ' ' << pretty(n.expr) << ";\n";
        } else if constexpr (std::is_same_v<T, InhaleStmt>) {
          os << p << "inhale " << pretty(n.expr) << ";\n";
        } else if constexpr (std::is_same_v<T, ExhaleStmt>) {
          os << p << "exhale " << pretty(n.expr) << ";\n";
        } else if constexpr (std::is_same_v<T, BlockStmt>) {
          os << p;
          print_block(os, n.body, indent);
          os << '\n';
        } else if constexpr (std::is_same_v<T, ParStmt>) {
          print_contract(os, n.contract, indent);
          os << p << "par (int " << n.binder << " = " << pretty(n.lo) << " .. " << pretty(n.hi)
             << ") ";
          print_block(os, n.body, indent);
          os << '\n';
        } else if constexpr (std::is_same_v<T, ConfinedStmt>) {
          os << p << "confined (" << pretty(n.target) << ") ";
          print_block(os, n.body, indent);
          os << '\n';
        } else if constexpr (std::is_same_v<T, SendStmt>) {
          os << p << channel(n.channel) << ".writeValue(" << pretty(n.value) << ");\n";
        } else if constexpr (std::is_same_v<T, RecvStmt>) {
          os << p << pretty(n.location) << " = " << channel(n.channel) << ".readValue();\n";
        } else {
          os << p << "endpoint " << n.name;
          if (n.size) os << '[' << n.binder << " := 0 .. " << pretty(n.size) << ']';
          os << " = " << n.class_name << '(';
          print_list(os, n.args);
          os << ");\n";
        }
      },
      s.node);
}

void print_block(std::ostream& os, const Block& b, int indent) {
  if (b.empty()) {
    os << "{ }";
    return;
  }
  os << "{\n";
  for (const auto& s : b) print_stmt(os, s, indent + 1);
  os << pad(indent) << '}';
}

void print_chor_block(std::ostream& os, const ChorBlock& b, int indent);

void print_chor(std::ostream& os, const ChorStmt& s, int indent) {
  std::string p = pad(indent);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ChorIf>) {
          os << p << "if (" << pretty(n.cond) << ") ";
          print_chor_block(os, n.then_branch, indent);
          if (!n.else_branch.empty()) {
            os << " else ";
            print_chor_block(os, n.else_branch, indent);
          }
          os << '\n';
        } else if constexpr (std::is_same_v<T, ChorWhile>) {
          if (n.invariant) os << p << "loop_invariant " << pretty(n.invariant) << ";\n";
          os << p << "while (" << pretty(n.cond) << ") ";
          print_chor_block(os, n.body, indent);
          os << '\n';
        } else if constexpr (std::is_same_v<T, ChorAssert>) {
          os << p << "assert " << pretty(n.expr) << ";\n";
        } else if constexpr (std::is_same_v<T, EndpointAssign>) {
          os << p << "endpoint " << pretty(n.target) << ": " << pretty(n.location)
             << " := " << pretty(n.value) << ";\n";
        } else if constexpr (std::is_same_v<T, EndpointCall>) {
          os << p << "endpoint " << pretty(n.target) << ": ";
          print(os, n.receiver, kPostfix);
          os << '.' << n.method << '(';
          print_list(os, n.args);
          os << ");\n";
        } else {
          if (n.invariant) os << p << "channel_invariant " << pretty(n.invariant) << ";\n";
          os << p << "communicate " << pretty(n.sender) << ": " << pretty(n.message) << " -> "
             << pretty(n.receiver) << ": " << pretty(n.destination) << ";\n";
        }
      },
      s.node);
}

void print_chor_block(std::ostream& os, const ChorBlock& b, int indent) {
  if (b.empty()) {
    os << "{ }";
    return;
  }
  os << "{\n";
  for (const auto& s : b) print_chor(os, s, indent + 1);
  os << pad(indent) << '}';
}

std::string params_str(const std::vector<Param>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ", ";
    out += pretty(ps[i].type) + " " + ps[i].name;
  }
  return out;
}

void print_method(std::ostream& os, const MethodDecl& m, bool ctor, int indent) {
  print_contract(os, m.contract, indent);
  os << pad(indent) << (ctor ? "" : "void ") << m.name << '(' << params_str(m.params) << ") ";
  print_block(os, m.body, indent);
  os << '\n';
}

}  // namespace

std::string pretty(const ExprPtr& e) {
  std::ostringstream os;
  print(os, e, 0);
  return os.str();
}

std::string pretty(const Target& t) {
  std::ostringstream os;
  print_target(os, t);
  return os.str();
}

std::string pretty(const Type& t) {
  if (t.is_seq()) return "seq<" + (t.args.empty() ? std::string("int") : pretty(t.args[0])) + ">";
  return t.name;
}

std::string pretty(const Stmt& s, int indent) {
  std::ostringstream os;
  print_stmt(os, s, indent);
  return os.str();
}

std::string pretty(const Block& b, int indent) {
  std::ostringstream os;
  for (const auto& s : b) print_stmt(os, s, indent);
  return os.str();
}

std::string pretty(const ChorStmt& s, int indent) {
  std::ostringstream os;
  print_chor(os, s, indent);
  return os.str();
}

std::string pretty(const Program& prog) {
  std::ostringstream os;
  for (const auto& p : prog.pragmas) os << "//!" << p << '\n';
  if (!prog.pragmas.empty()) os << '\n';
  bool first = true;
  for (const auto& d : prog.decls) {
    if (!first) os << '\n';
    first = false;
    std::visit(
        [&](const auto& decl) {
          using T = std::decay_t<decltype(decl)>;
          if constexpr (std::is_same_v<T, ClassDecl>) {
            os << "class " << decl.name << " {\n";
            for (const auto& f : decl.fields)
              os << "  " << pretty(f.type) << ' ' << f.name << ";\n";
            if (decl.constructor) print_method(os, *decl.constructor, true, 1);
            for (const auto& m : decl.methods) print_method(os, m, false, 1);
            os << "}\n";
          } else if constexpr (std::is_same_v<T, PredicateDecl>) {
            os << "resource " << decl.name << '(' << params_str(decl.params)
               << ") = " << pretty(decl.body) << ";\n";
          } else if constexpr (std::is_same_v<T, FunctionDecl>) {
            print_contract(os, decl.contract, 0);
            os << "pure " << pretty(decl.result) << ' ' << decl.name << '('
               << params_str(decl.params) << ") = " << pretty(decl.body) << ";\n";
          } else {
            print_contract(os, decl.contract, 0);
            os << "choreography";
            if (!decl.name.empty()) os << ' ' << decl.name;
            os << '(' << params_str(decl.params) << ") {\n";
            for (const auto& ep : decl.endpoints) {
              os << "  endpoint " << ep.name;
              if (ep.is_family()) os << '[' << ep.binder << " := 0 .. " << pretty(ep.size) << ']';
              os << " = " << ep.class_name << '(';
              print_list(os, ep.args);
              os << ");\n";
            }
            print_contract(os, decl.run_contract, 1);
            os << "  run ";
            print_chor_block(os, decl.run, 1);
            os << "\n}\n";
          }
        },
        d);
  }
  return os.str();
}

}  // namespace chorcc

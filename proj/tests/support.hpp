#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "chorcc/frontend.hpp"
#include "chorcc/runtime.hpp"

namespace chorcc::test {

inline std::filesystem::path corpus_dir() { return CHORCC_CORPUS_DIR; }

inline std::vector<std::string> corpus_names() {
  return {"two_party", "relay", "broadcast", "ring", "par_call", "loop", "indexed"};
}

inline std::shared_ptr<const Program> parse_text(const std::string& text) {
  ParseResult r = parse(SourceFile::from_string(text));
  if (!r.ok()) {
    std::string msg = "parse failed:";
    for (const auto& d : r.diagnostics) msg += "\n  " + format(d);
    throw std::runtime_error(msg);
  }
  return std::make_shared<const Program>(std::move(*r.program));
}

inline std::string read_corpus(const std::string& name) {
  return SourceFile::load((corpus_dir() / (name + ".chor")).string()).text;
}

inline std::shared_ptr<const Program> corpus(const std::string& name) {
  return parse_text(read_corpus(name));
}

/// `n` for the family-size parameter, 3 for every other parameter.
inline rt::Params params_for(const Program& p, int n) {
  rt::Params out;
  for (const auto& prm : p.choreography()->params) out[prm.name] = rt::Value(prm.name == "n" ? n : 3);
  return out;
}

/// Replaces the first occurrence of `from` in `text`; throws if absent.
inline std::string mutate(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw std::runtime_error("mutation anchor not found: " + from);
  return text.replace(pos, from.size(), to);
}

inline ExprPtr expr(const std::string& text) { return parse_expression(text); }

/// Integer arithmetic over literals and bound variables.
inline Int eval_int(const ExprPtr& e, const std::map<std::string, Int>& env) {
  switch (e->kind) {
    case ExprKind::IntLit:
      return e->value;
    case ExprKind::Var:
      return env.at(e->name);
    case ExprKind::Unary:
      if (e->op == Op::Neg) return -eval_int(e->kid(0), env);
      break;
    case ExprKind::Binary: {
      Int a = eval_int(e->kid(0), env), b = eval_int(e->kid(1), env);
      if (e->op == Op::Add) return a + b;
      if (e->op == Op::Sub) return a - b;
      if (e->op == Op::Mul) return a * b;
      break;
    }
    default:
      break;
  }
  throw std::runtime_error("eval_int: unsupported node " + pretty(e));
}

inline bool is_empty_body(const Block& b) {
  for (const auto& s : b)
    if (!is_empty_block(s)) return false;
  return true;
}

/// Program whose run body is the single statement `s`.
inline Program with_run(const Program& p, const ChorStmt& s) {
  Program out = p;
  for (auto& d : out.decls)
    if (auto* c = std::get_if<Choreography>(&d)) {
      c->run = {s};
      c->run_contract = {};
    }
  return out;
}

}  // namespace chorcc::test

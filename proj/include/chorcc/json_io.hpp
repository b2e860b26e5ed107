#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "chorcc/ast.hpp"

namespace chorcc {

using json = nlohmann::json;

inline constexpr int kJsonSchemaVersion = 1;

/// Raised by the `*_from_json` readers; `path` is a JSON pointer to the
/// offending node.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct JsonOptions {
  bool locations = true;
};

json to_json(const ExprPtr& e, JsonOptions opts = {});
json to_json(const Target& t, JsonOptions opts = {});
json to_json(const Stmt& s, JsonOptions opts = {});
json to_json(const Block& b, JsonOptions opts = {});
json to_json(const ChorStmt& s, JsonOptions opts = {});
json to_json(const Program& p, JsonOptions opts = {});

ExprPtr expr_from_json(const json& j, const std::string& path = "");
Target target_from_json(const json& j, const std::string& path = "");
Stmt stmt_from_json(const json& j, const std::string& path = "");
Block block_from_json(const json& j, const std::string& path = "");
ChorStmt chor_stmt_from_json(const json& j, const std::string& path = "");
Program program_from_json(const json& j);

/// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string dump(const json& j);

Type parse_type(const std::string& text);

/// Structural equality of programs with source locations ignored.
bool structurally_equal(const Program& a, const Program& b);
bool operator==(const Program& a, const Program& b);

}  // namespace chorcc

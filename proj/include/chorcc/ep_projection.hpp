#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "chorcc/ast.hpp"
#include "chorcc/chor_projection.hpp"
#include "chorcc/json_io.hpp"
#include "chorcc/syntax.hpp"

namespace chorcc {

/// Local program of one endpoint sort. Families are projected once, with
/// `self` naming the instance index.
struct EndpointProgram {
  SortTag sort;
  std::string class_name;
  bool family = false;
  std::string self;  // empty for singular endpoints
  Block body;
  RuleTrace trace;
};

struct ChannelEntry {
  int site = 0;
  SortTag sender;
  SortTag receiver;
  bool operator==(const ChannelEntry&) const = default;
};

/// One entry per communicate site, in lexical order. At run time a channel is
/// identified by (site, sender index, receiver index); singular endpoints use
/// index 0.
using ChannelTable = std::vector<ChannelEntry>;

ChannelTable build_channel_table(const Choreography& c);

class NotInvertible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse of `d` in `binder` for d in {i, i + c, i - c, c + i} where c does
/// not mention the binder. The result is again an expression in `binder`.
ExprPtr invert_index_expr(const ExprPtr& d, const std::string& binder);

/// Throws UnsupportedSyntax (e.g. for receiver indices outside the invertible
/// pattern set) and std::invalid_argument for unknown sorts.
EndpointProgram project_ep(const Program& p, const SortTag& target);
std::vector<EndpointProgram> project_all(const Program& p);

/// Endpoint projection of an H_chor / R_chor expression. `self` is the
/// projection target: a singular target, or `F[j]` for families.
ExprPtr ep_expr(const ExprPtr& h, const Target& self, RuleTrace* trace = nullptr);

std::string pretty(const EndpointProgram& e);
json to_json(const EndpointProgram& e, JsonOptions opts = {});
EndpointProgram endpoint_program_from_json(const json& j);
json to_json(const ChannelTable& t);
ChannelTable channel_table_from_json(const json& j);

}  // namespace chorcc

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fact {

enum class NodeKind {
  Function,  // root: entry function with a single patch parameter
  Assign,
  If,
  For,
  Return,
  ExprStmt,
  Literal,
  Name,
  Attribute,
  Index,
  Call,
  MethodCall,
  Unary,
  Binary,
  ListLit,
};

const char* node_kind_name(NodeKind kind);
bool is_statement(NodeKind kind);

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct SourceSpan {
  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;
};

using LiteralValue = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

// Kind-specific payload lives in `text` (name, operator, attribute, callee,
// method, loop variable, entry parameter), `literal`, and for If nodes the arm
// layout: children are [cond0, body0..., cond1, body1..., else...] with
// `arm_sizes[i]` statements in arm i (the else arm last when `has_else`).
struct AstNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::ExprStmt;
  std::vector<NodeId> children;
  std::string text;
  std::string label;  // Function: entry name when written with a `def` header
  LiteralValue literal;
  std::vector<int> arm_sizes;
  bool has_else = false;
  SourceSpan span;
};

// Rooted tree (V, E); nodes are stored so that nodes[i].id == i.
struct Ast {
  std::vector<AstNode> nodes;
  NodeId root = 0;

  const AstNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes.size(); }
  std::vector<std::pair<NodeId, NodeId>> edges() const;
  // parents()[id] is the parent of id, kNoNode for the root.
  std::vector<NodeId> parents() const;
  // Walks up to the nearest statement node (Assign, If, For, Return, ExprStmt).
  NodeId enclosing_statement(NodeId id, const std::vector<NodeId>& parents) const;
};

// Compares kind and payload recursively; ids and spans are ignored.
bool structurally_equal(const Ast& a, const Ast& b);

// Raises SchemaError on a violated tree or arity invariant.
void validate_ast(const Ast& ast);

}  // namespace fact

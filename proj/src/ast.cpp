#include "fact/ast.hpp"

#include <numeric>

#include "fact/errors.hpp"

namespace fact {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Function: return "Function";
    case NodeKind::Assign: return "Assign";
    case NodeKind::If: return "If";
    case NodeKind::For: return "For";
    case NodeKind::Return: return "Return";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::Literal: return "Literal";
    case NodeKind::Name: return "Name";
    case NodeKind::Attribute: return "Attribute";
    case NodeKind::Index: return "Index";
    case NodeKind::Call: return "Call";
    case NodeKind::MethodCall: return "MethodCall";
    case NodeKind::Unary: return "Unary";
    case NodeKind::Binary: return "Binary";
    case NodeKind::ListLit: return "ListLit";
  }
  return "?";
}

bool is_statement(NodeKind kind) {
  switch (kind) {
    case NodeKind::Assign:
    case NodeKind::If:
    case NodeKind::For:
    case NodeKind::Return:
    case NodeKind::ExprStmt: return true;
    default: return false;
  }
}

std::vector<std::pair<NodeId, NodeId>> Ast::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const auto& n : nodes) {
    for (NodeId c : n.children) out.emplace_back(n.id, c);
  }
  return out;
}

std::vector<NodeId> Ast::parents() const {
  std::vector<NodeId> out(nodes.size(), kNoNode);
  for (const auto& n : nodes) {
    for (NodeId c : n.children) out.at(static_cast<std::size_t>(c)) = n.id;
  }
  return out;
}

NodeId Ast::enclosing_statement(NodeId id, const std::vector<NodeId>& parents) const {
  while (id != kNoNode && !is_statement(node(id).kind)) id = parents.at(static_cast<std::size_t>(id));
  return id;
}

namespace {

bool equal_rec(const Ast& a, NodeId x, const Ast& b, NodeId y) {
  const AstNode& n = a.node(x);
  const AstNode& m = b.node(y);
  if (n.kind != m.kind || n.text != m.text || n.label != m.label || n.literal != m.literal ||
      n.arm_sizes != m.arm_sizes || n.has_else != m.has_else || n.children.size() != m.children.size())
    return false;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (!equal_rec(a, n.children[i], b, m.children[i])) return false;
  }
  return true;
}

std::size_t expected_children(const AstNode& n, bool& exact) {
  exact = true;
  switch (n.kind) {
    case NodeKind::Literal:
    case NodeKind::Name: return 0;
    case NodeKind::Assign:
    case NodeKind::Return:
    case NodeKind::ExprStmt:
    case NodeKind::Attribute:
    case NodeKind::Unary: return 1;
    case NodeKind::Index:
    case NodeKind::Binary: return 2;
    case NodeKind::MethodCall: exact = false; return 1;
    case NodeKind::For: exact = false; return 2;
    case NodeKind::If: {
      const std::size_t conditions = n.arm_sizes.size() - (n.has_else ? 1 : 0);
      return conditions + static_cast<std::size_t>(std::accumulate(n.arm_sizes.begin(), n.arm_sizes.end(), 0));
    }
    case NodeKind::Function: exact = false; return 1;
    case NodeKind::Call:
    case NodeKind::ListLit: exact = false; return 0;
  }
  return 0;
}

}  // namespace

bool structurally_equal(const Ast& a, const Ast& b) {
  if (a.nodes.empty() || b.nodes.empty()) return a.nodes.empty() && b.nodes.empty();
  return equal_rec(a, a.root, b, b.root);
}

void validate_ast(const Ast& ast) {
  const auto n = ast.nodes.size();
  if (n == 0) throw SchemaError("ast: empty");
  for (std::size_t i = 0; i < n; ++i) {
    if (ast.nodes[i].id != static_cast<NodeId>(i)) throw SchemaError("ast: node ids must equal their index");
  }
  const auto edges = ast.edges();
  if (edges.size() != n - 1) throw SchemaError("ast: |E| must equal |V| - 1");
  std::vector<int> indegree(n, 0);
  for (const auto& [parent, child] : edges) {
    if (child < 0 || static_cast<std::size_t>(child) >= n) throw SchemaError("ast: edge to unknown node");
    ++indegree[static_cast<std::size_t>(child)];
  }
  if (indegree[static_cast<std::size_t>(ast.root)] != 0) throw SchemaError("ast: root has a parent");
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{ast.root};
  std::size_t reached = 0;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(id)]) throw SchemaError("ast: node reached twice");
    seen[static_cast<std::size_t>(id)] = true;
    ++reached;
    for (NodeId c : ast.node(id).children) stack.push_back(c);
  }
  if (reached != n) throw SchemaError("ast: node unreachable from root");
  for (const auto& node : ast.nodes) {
    if (node.kind == NodeKind::Function && node.id != ast.root) throw SchemaError("ast: Function must be the root");
    if (node.kind == NodeKind::If && node.arm_sizes.empty()) throw SchemaError("ast: If without arms");
    bool exact = true;
    const std::size_t want = expected_children(node, exact);
    if (exact ? node.children.size() != want : node.children.size() < want)
      throw SchemaError(std::string("ast: wrong arity for ") + node_kind_name(node.kind) + " node " +
                        std::to_string(node.id));
  }
}

}  // namespace fact

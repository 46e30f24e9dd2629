#include "fact/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>

namespace fact {

ParseError::ParseError(Kind kind, int line, int col, const std::string& message)
    : Error((kind == Kind::Lexical ? "lexical error at line " : "syntax error at line ") + std::to_string(line) +
            " col " + std::to_string(col) + ": " + message),
      kind_(kind),
      line_(line),
      col_(col) {}

namespace {

// --- lexer ----------------------------------------------------------------------

enum class Tok { Name, Int, Float, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0;
  int col = 0;
  int end_line = 0;
  int end_col = 0;
  std::int64_t int_value = 0;
  double float_value = 0.0;
};

const std::set<std::string, std::less<>> kKeywords = {"if", "elif", "else", "for", "in", "return", "and",
                                                      "or", "not", "True", "False", "def"};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::Newline: return "end of line";
    case Tok::Indent: return "indent";
    case Tok::Dedent: return "dedent";
    case Tok::End: return "end of input";
    case Tok::String: return "string literal";
    default: return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view source) : source_(source) {}

  std::vector<Token> run() {
    std::vector<int> indents{0};
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= source_.size()) {
      const std::size_t eol = std::min(source_.find('\n', pos), source_.size());
      std::string_view line = source_.substr(pos, eol - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      ++line_no;
      lex_line(line, line_no, indents);
      if (eol == source_.size()) break;
      pos = eol + 1;
    }
    const int last_line = line_no + 1;
    while (indents.size() > 1) {
      indents.pop_back();
      push(Tok::Dedent, "", last_line, 1, last_line, 1);
    }
    push(Tok::End, "", last_line, 1, last_line, 1);
    return std::move(tokens_);
  }

 private:
  void push(Tok kind, std::string text, int line, int col, int end_line, int end_col) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line;
    t.col = col;
    t.end_line = end_line;
    t.end_col = end_col;
    tokens_.push_back(std::move(t));
  }

  void lex_line(std::string_view line, int line_no, std::vector<int>& indents) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == ' ') ++i;
    if (i < line.size() && line[i] == '\t')
      throw ParseError(ParseError::Kind::Lexical, line_no, static_cast<int>(i) + 1, "tabs are not allowed for indentation");
    if (i == line.size() || line[i] == '#') return;  // blank or comment-only

    const int indent = static_cast<int>(i);
    if (indent % 4 != 0)
      throw ParseError(ParseError::Kind::Lexical, line_no, indent + 1, "bad indent: expected a multiple of 4 spaces");
    if (indent > indents.back()) {
      if (indent != indents.back() + 4)
        throw ParseError(ParseError::Kind::Lexical, line_no, indent + 1, "bad indent: expected one level (4 spaces) deeper");
      indents.push_back(indent);
      push(Tok::Indent, "", line_no, 1, line_no, indent + 1);
    } else {
      while (indent < indents.back()) {
        indents.pop_back();
        push(Tok::Dedent, "", line_no, 1, line_no, indent + 1);
      }
      if (indent != indents.back())
        throw ParseError(ParseError::Kind::Lexical, line_no, indent + 1, "bad indent: does not match an enclosing block");
    }

    while (i < line.size()) {
      const char c = line[i];
      const int col = static_cast<int>(i) + 1;
      if (c == ' ') {
        ++i;
        continue;
      }
      if (c == '#') break;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
        push(Tok::Name, std::string(line.substr(i, j - i)), line_no, col, line_no, static_cast<int>(j) + 1);
        i = j;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        i = lex_number(line, i, line_no);
        continue;
      }
      if (c == '"' || c == '\'') {
        i = lex_string(line, i, line_no);
        continue;
      }
      static const char* const two_char[] = {"==", "!=", "<=", ">="};
      bool matched = false;
      for (const char* op : two_char) {
        if (line.substr(i, 2) == op) {
          push(Tok::Op, op, line_no, col, line_no, col + 2);
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("()[],:.=<>+-*/").find(c) != std::string_view::npos) {
        push(Tok::Op, std::string(1, c), line_no, col, line_no, col + 1);
        ++i;
        continue;
      }
      throw ParseError(ParseError::Kind::Lexical, line_no, col, std::string("unknown token '") + c + "'");
    }
    push(Tok::Newline, "", line_no, static_cast<int>(line.size()) + 1, line_no, static_cast<int>(line.size()) + 1);
  }

  std::size_t lex_number(std::string_view line, std::size_t i, int line_no) {
    std::size_t j = i;
    bool is_float = false;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j + 1 < line.size() && line[j] == '.' && std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
      is_float = true;
      ++j;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    }
    if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
      if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
        is_float = true;
        j = k;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      }
    }
    const std::string text(line.substr(i, j - i));
    const int col = static_cast<int>(i) + 1;
    push(is_float ? Tok::Float : Tok::Int, text, line_no, col, line_no, static_cast<int>(j) + 1);
    Token& t = tokens_.back();
    if (is_float) {
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t.float_value);
      if (ec != std::errc() || !std::isfinite(t.float_value))
        throw ParseError(ParseError::Kind::Lexical, line_no, col, "float literal out of range");
    } else {
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t.int_value);
      if (ec != std::errc()) throw ParseError(ParseError::Kind::Lexical, line_no, col, "integer literal out of range");
    }
    return j;
  }

  std::size_t lex_string(std::string_view line, std::size_t i, int line_no) {
    const char quote = line[i];
    std::string value;
    std::size_t j = i + 1;
    while (true) {
      if (j >= line.size())
        throw ParseError(ParseError::Kind::Lexical, line_no, static_cast<int>(i) + 1, "unterminated string literal");
      const char c = line[j];
      if (c == quote) break;
      if (c == '\\') {
        if (j + 1 >= line.size())
          throw ParseError(ParseError::Kind::Lexical, line_no, static_cast<int>(j) + 1, "unterminated escape");
        const char e = line[j + 1];
        switch (e) {
          case 'n': value.push_back('\n'); break;
          case 't': value.push_back('\t'); break;
          case '\\':
          case '"':
          case '\'': value.push_back(e); break;
          default:
            throw ParseError(ParseError::Kind::Lexical, line_no, static_cast<int>(j) + 1,
                             std::string("unknown escape '\\") + e + "'");
        }
        j += 2;
        continue;
      }
      value.push_back(c);
      ++j;
    }
    push(Tok::String, std::move(value), line_no, static_cast<int>(i) + 1, line_no, static_cast<int>(j) + 2);
    return j + 1;
  }

  std::string_view source_;
  std::vector<Token> tokens_;
};

// --- parser ---------------------------------------------------------------------

// Nodes are built in an arena and renumbered in preorder at the end.
class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Ast run() {
    AstNode root;
    root.kind = NodeKind::Function;
    root.text = kEntryParameter;
    root.span = {peek().line, peek().col, 0, 0};
    bool header = false;
    if (at_name("def")) {
      header = true;
      advance();
      root.label = expect_name("function name").text;
      expect_op("(");
      root.text = expect_name("parameter name").text;
      expect_op(")");
      expect_op(":");
      expect(Tok::Newline, "end of line");
      expect(Tok::Indent, "indented function body");
    }
    while (peek().kind != Tok::End && !(header && peek().kind == Tok::Dedent)) root.children.push_back(statement());
    if (header) expect(Tok::Dedent, "end of function body");
    if (peek().kind != Tok::End) fail("end of input");
    if (root.children.empty()) fail("a statement");
    root.span.end_line = last_.end_line;
    root.span.end_col = last_.end_col;
    const NodeId arena_root = add(std::move(root));
    return renumber(arena_root);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() {
    last_ = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return last_;
  }
  bool at_op(std::string_view op) const { return peek().kind == Tok::Op && peek().text == op; }
  bool at_name(std::string_view name) const { return peek().kind == Tok::Name && peek().text == name; }

  [[noreturn]] void fail(const std::string& expected) const {
    throw ParseError(ParseError::Kind::Syntax, peek().line, peek().col,
                     "expected " + expected + ", found " + describe(peek()));
  }
  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail(what);
    return advance();
  }
  const Token& expect_op(std::string_view op) {
    if (!at_op(op)) fail("'" + std::string(op) + "'");
    return advance();
  }
  const Token& expect_keyword(std::string_view word) {
    if (!at_name(word)) fail("'" + std::string(word) + "'");
    return advance();
  }
  const Token& expect_name(const std::string& what) {
    if (peek().kind != Tok::Name || kKeywords.contains(peek().text)) fail(what);
    return advance();
  }

  NodeId add(AstNode node) {
    node.id = static_cast<NodeId>(arena_.size());
    arena_.push_back(std::move(node));
    return arena_.back().id;
  }
  AstNode& at(NodeId id) { return arena_[static_cast<std::size_t>(id)]; }

  AstNode start(NodeKind kind, const Token& first) {
    AstNode n;
    n.kind = kind;
    n.span = {first.line, first.col, first.end_line, first.end_col};
    return n;
  }
  void finish(AstNode& n) {
    n.span.end_line = last_.end_line;
    n.span.end_col = last_.end_col;
  }

  std::vector<NodeId> block() {
    expect_op(":");
    expect(Tok::Newline, "end of line after ':'");
    expect(Tok::Indent, "an indented block");
    std::vector<NodeId> body;
    while (peek().kind != Tok::Dedent && peek().kind != Tok::End) body.push_back(statement());
    expect(Tok::Dedent, "end of block");
    return body;
  }

  NodeId statement() {
    const Token first = peek();
    if (at_name("if")) {
      AstNode n = start(NodeKind::If, first);
      advance();
      n.children.push_back(expression());
      auto body = block();
      n.arm_sizes.push_back(static_cast<int>(body.size()));
      n.children.insert(n.children.end(), body.begin(), body.end());
      while (at_name("elif")) {
        advance();
        n.children.push_back(expression());
        body = block();
        n.arm_sizes.push_back(static_cast<int>(body.size()));
        n.children.insert(n.children.end(), body.begin(), body.end());
      }
      if (at_name("else")) {
        advance();
        body = block();
        n.has_else = true;
        n.arm_sizes.push_back(static_cast<int>(body.size()));
        n.children.insert(n.children.end(), body.begin(), body.end());
      }
      finish(n);
      return add(std::move(n));
    }
    if (at_name("for")) {
      AstNode n = start(NodeKind::For, first);
      advance();
      n.text = expect_name("loop variable").text;
      expect_keyword("in");
      n.children.push_back(expression());
      auto body = block();
      n.children.insert(n.children.end(), body.begin(), body.end());
      finish(n);
      return add(std::move(n));
    }
    if (at_name("return")) {
      AstNode n = start(NodeKind::Return, first);
      advance();
      n.children.push_back(expression());
      finish(n);
      expect(Tok::Newline, "end of line");
      return add(std::move(n));
    }
    if (at_name("elif") || at_name("else")) fail("a statement");
    if (peek().kind == Tok::Name && !kKeywords.contains(peek().text) && peek(1).kind == Tok::Op && peek(1).text == "=") {
      AstNode n = start(NodeKind::Assign, first);
      n.text = advance().text;
      advance();  // '='
      n.children.push_back(expression());
      finish(n);
      expect(Tok::Newline, "end of line");
      return add(std::move(n));
    }
    AstNode n = start(NodeKind::ExprStmt, first);
    n.children.push_back(expression());
    finish(n);
    expect(Tok::Newline, "end of line");
    return add(std::move(n));
  }

  NodeId binary(NodeId left, const Token& first, std::string op, NodeId right) {
    AstNode n = start(NodeKind::Binary, first);
    n.text = std::move(op);
    n.children = {left, right};
    finish(n);
    return add(std::move(n));
  }

  NodeId expression() { return or_expr(); }

  NodeId or_expr() {
    const Token first = peek();
    NodeId left = and_expr();
    while (at_name("or")) {
      advance();
      left = binary(left, first, "or", and_expr());
    }
    return left;
  }

  NodeId and_expr() {
    const Token first = peek();
    NodeId left = not_expr();
    while (at_name("and")) {
      advance();
      left = binary(left, first, "and", not_expr());
    }
    return left;
  }

  NodeId not_expr() {
    if (at_name("not")) {
      AstNode n = start(NodeKind::Unary, peek());
      advance();
      n.text = "not";
      n.children.push_back(not_expr());
      finish(n);
      return add(std::move(n));
    }
    return comparison();
  }

  NodeId comparison() {
    const Token first = peek();
    NodeId left = additive();
    static const std::set<std::string, std::less<>> ops = {"==", "!=", "<", "<=", ">", ">="};
    if ((peek().kind == Tok::Op && ops.contains(peek().text)) || at_name("in")) {
      std::string op = advance().text;
      return binary(left, first, std::move(op), additive());
    }
    return left;
  }

  NodeId additive() {
    const Token first = peek();
    NodeId left = term();
    while (at_op("+") || at_op("-")) {
      std::string op = advance().text;
      left = binary(left, first, std::move(op), term());
    }
    return left;
  }

  NodeId term() {
    const Token first = peek();
    NodeId left = unary();
    while (at_op("*") || at_op("/")) {
      std::string op = advance().text;
      left = binary(left, first, std::move(op), unary());
    }
    return left;
  }

  NodeId unary() {
    if (at_op("-")) {
      AstNode n = start(NodeKind::Unary, peek());
      advance();
      n.text = "-";
      n.children.push_back(unary());
      finish(n);
      return add(std::move(n));
    }
    return postfix();
  }

  std::vector<NodeId> arguments(std::string_view close) {
    std::vector<NodeId> args;
    if (!at_op(close)) {
      args.push_back(expression());
      while (at_op(",")) {
        advance();
        args.push_back(expression());
      }
    }
    expect_op(close);
    return args;
  }

  NodeId postfix() {
    const Token first = peek();
    NodeId node = atom();
    while (true) {
      if (at_op(".")) {
        advance();
        const std::string member = expect_name("attribute or method name").text;
        if (at_op("(")) {
          advance();
          AstNode n = start(NodeKind::MethodCall, first);
          n.text = member;
          n.children.push_back(node);
          auto args = arguments(")");
          n.children.insert(n.children.end(), args.begin(), args.end());
          finish(n);
          node = add(std::move(n));
        } else {
          AstNode n = start(NodeKind::Attribute, first);
          n.text = member;
          n.children.push_back(node);
          finish(n);
          node = add(std::move(n));
        }
      } else if (at_op("[")) {
        advance();
        AstNode n = start(NodeKind::Index, first);
        n.children.push_back(node);
        n.children.push_back(expression());
        expect_op("]");
        finish(n);
        node = add(std::move(n));
      } else if (at_op("(")) {
        if (at(node).kind != NodeKind::Name || node + 1 != static_cast<NodeId>(arena_.size()))
          fail("a callable name before '('");
        // The callee Name node is folded into the Call payload.
        std::string callee = at(node).text;
        arena_.pop_back();
        advance();
        AstNode n = start(NodeKind::Call, first);
        n.text = std::move(callee);
        n.children = arguments(")");
        finish(n);
        node = add(std::move(n));
      } else {
        return node;
      }
    }
  }

  NodeId atom() {
    const Token& t = peek();
    AstNode n = start(NodeKind::Literal, t);
    switch (t.kind) {
      case Tok::Int:
        n.literal = t.int_value;
        advance();
        return add(std::move(n));
      case Tok::Float:
        n.literal = t.float_value;
        advance();
        return add(std::move(n));
      case Tok::String:
        n.literal = t.text;
        advance();
        return add(std::move(n));
      case Tok::Name:
        if (t.text == "True" || t.text == "False") {
          n.literal = (t.text == "True");
          advance();
          return add(std::move(n));
        }
        if (kKeywords.contains(t.text)) fail("an expression");
        n.kind = NodeKind::Name;
        n.text = t.text;
        advance();
        return add(std::move(n));
      case Tok::Op:
        if (t.text == "(") {
          advance();
          NodeId inner = expression();
          expect_op(")");
          return inner;
        }
        if (t.text == "[") {
          advance();
          n.kind = NodeKind::ListLit;
          n.children = arguments("]");
          finish(n);
          return add(std::move(n));
        }
        break;
      default: break;
    }
    fail("an expression");
  }

  Ast renumber(NodeId arena_root) {
    Ast ast;
    std::vector<NodeId> new_id(arena_.size(), kNoNode);
    std::vector<NodeId> order;
    std::vector<NodeId> stack{arena_root};
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      new_id[static_cast<std::size_t>(id)] = static_cast<NodeId>(order.size());
      order.push_back(id);
      const auto& children = at(id).children;
      for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
    }
    ast.nodes.reserve(order.size());
    for (NodeId old : order) {
      AstNode n = at(old);
      n.id = new_id[static_cast<std::size_t>(old)];
      for (auto& c : n.children) c = new_id[static_cast<std::size_t>(c)];
      ast.nodes.push_back(std::move(n));
    }
    ast.root = 0;
    return ast;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Token last_;
  std::vector<AstNode> arena_;
};

// --- renderer -------------------------------------------------------------------

int binary_precedence(std::string_view op) {
  if (op == "or") return 1;
  if (op == "and") return 2;
  if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=" || op == "in") return 4;
  if (op == "+" || op == "-") return 5;
  return 6;  // * /
}

constexpr int kNotPrecedence = 3;
constexpr int kNegPrecedence = 7;
constexpr int kPostfixPrecedence = 8;
constexpr int kAtomPrecedence = 9;

std::string format_float(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  std::string text(buffer, ptr);
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out += '"';
  return out;
}

struct Rendered {
  std::string text;
  int precedence;
};

Rendered render_expr(const Ast& ast, NodeId id);

std::string wrap(const Rendered& r, bool parens) { return parens ? "(" + r.text + ")" : r.text; }

std::string render_list(const Ast& ast, const std::vector<NodeId>& ids, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < ids.size(); ++i) {
    if (i > from) out += ", ";
    out += render_expr(ast, ids[i]).text;
  }
  return out;
}

Rendered render_expr(const Ast& ast, NodeId id) {
  const AstNode& n = ast.node(id);
  switch (n.kind) {
    case NodeKind::Literal:
      return std::visit(
          [](const auto& v) -> Rendered {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>) return {std::to_string(v), kAtomPrecedence};
            else if constexpr (std::is_same_v<T, double>) return {format_float(v), kAtomPrecedence};
            else if constexpr (std::is_same_v<T, std::string>) return {quote(v), kAtomPrecedence};
            else if constexpr (std::is_same_v<T, bool>) return {v ? "True" : "False", kAtomPrecedence};
            else return {"None", kAtomPrecedence};
          },
          n.literal);
    case NodeKind::Name: return {n.text, kAtomPrecedence};
    case NodeKind::ListLit: return {"[" + render_list(ast, n.children) + "]", kAtomPrecedence};
    case NodeKind::Call: return {n.text + "(" + render_list(ast, n.children) + ")", kPostfixPrecedence};
    case NodeKind::Attribute: {
      const auto obj = render_expr(ast, n.children[0]);
      return {wrap(obj, obj.precedence < kPostfixPrecedence) + "." + n.text, kPostfixPrecedence};
    }
    case NodeKind::MethodCall: {
      const auto obj = render_expr(ast, n.children[0]);
      return {wrap(obj, obj.precedence < kPostfixPrecedence) + "." + n.text + "(" + render_list(ast, n.children, 1) + ")",
              kPostfixPrecedence};
    }
    case NodeKind::Index: {
      const auto obj = render_expr(ast, n.children[0]);
      return {wrap(obj, obj.precedence < kPostfixPrecedence) + "[" + render_expr(ast, n.children[1]).text + "]",
              kPostfixPrecedence};
    }
    case NodeKind::Unary: {
      const auto operand = render_expr(ast, n.children[0]);
      if (n.text == "not") return {"not " + wrap(operand, operand.precedence < kNotPrecedence), kNotPrecedence};
      return {"-" + wrap(operand, operand.precedence < kNegPrecedence), kNegPrecedence};
    }
    case NodeKind::Binary: {
      const int p = binary_precedence(n.text);
      const auto left = render_expr(ast, n.children[0]);
      const auto right = render_expr(ast, n.children[1]);
      // Comparisons do not chain, so an equal-precedence left operand needs parens too.
      const bool left_parens = p == 4 ? left.precedence <= p : left.precedence < p;
      return {wrap(left, left_parens) + " " + n.text + " " + wrap(right, right.precedence <= p), p};
    }
    default: break;
  }
  return {"<" + std::string(node_kind_name(n.kind)) + ">", kAtomPrecedence};
}

void render_statement(const Ast& ast, NodeId id, int depth, std::vector<std::string>& lines) {
  const AstNode& n = ast.node(id);
  const std::string pad(static_cast<std::size_t>(depth) * 4, ' ');
  switch (n.kind) {
    case NodeKind::Assign: lines.push_back(pad + n.text + " = " + render_expr(ast, n.children[0]).text); break;
    case NodeKind::Return: lines.push_back(pad + "return " + render_expr(ast, n.children[0]).text); break;
    case NodeKind::ExprStmt: lines.push_back(pad + render_expr(ast, n.children[0]).text); break;
    case NodeKind::For:
      lines.push_back(pad + "for " + n.text + " in " + render_expr(ast, n.children[0]).text + ":");
      for (std::size_t i = 1; i < n.children.size(); ++i) render_statement(ast, n.children[i], depth + 1, lines);
      break;
    case NodeKind::If: {
      std::size_t cursor = 0;
      for (std::size_t arm = 0; arm < n.arm_sizes.size(); ++arm) {
        const bool is_else = n.has_else && arm + 1 == n.arm_sizes.size();
        if (is_else) {
          lines.push_back(pad + "else:");
        } else {
          lines.push_back(pad + (arm == 0 ? "if " : "elif ") + render_expr(ast, n.children[cursor]).text + ":");
          ++cursor;
        }
        for (int s = 0; s < n.arm_sizes[arm]; ++s) render_statement(ast, n.children[cursor++], depth + 1, lines);
      }
      break;
    }
    default: lines.push_back(pad + render_expr(ast, id).text); break;
  }
}

}  // namespace

Ast parse(std::string_view source) {
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ParseError(ParseError::Kind::Syntax, 1, 1, "expected a statement, found end of input");
  Ast ast = Parser(Lexer(source).run()).run();
  validate_ast(ast);
  return ast;
}

std::string render_expression(const Ast& ast, NodeId id) { return render_expr(ast, id).text; }

std::string render_source(const Ast& ast) {
  std::vector<std::string> lines;
  const AstNode& root = ast.node(ast.root);
  int depth = 0;
  if (root.kind == NodeKind::Function) {
    if (!root.label.empty()) {
      lines.push_back("def " + root.label + "(" + root.text + "):");
      depth = 1;
    }
    for (NodeId c : root.children) render_statement(ast, c, depth, lines);
  } else {
    render_statement(ast, ast.root, 0, lines);
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace fact

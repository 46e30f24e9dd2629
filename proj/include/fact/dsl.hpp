#pragma once

#include <string>
#include <string_view>

#include "fact/ast.hpp"
#include "fact/errors.hpp"

namespace fact {

class ParseError : public Error {
 public:
  enum class Kind { Lexical, Syntax };
  ParseError(Kind kind, int line, int col, const std::string& message);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  Kind kind_;
  int line_;
  int col_;
};

inline constexpr const char* kEntryParameter = "image";

// Parses a program body (or a `def name(param):` entry function) written in
// the indentation-delimited visual program language. Blocks use 4 spaces.
Ast parse(std::string_view source);

// Canonical source; parse(render_source(ast)) is structurally equal to ast.
std::string render_source(const Ast& ast);

// Canonical text of one expression subtree.
std::string render_expression(const Ast& ast, NodeId id);

}  // namespace fact

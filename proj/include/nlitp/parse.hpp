#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nlitp/poly.hpp"

namespace nlitp {

struct SourcePos {
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, SourcePos pos);
  SourcePos pos() const { return pos_; }
  const std::string& bare_message() const { return bare_; }

 private:
  SourcePos pos_;
  std::string bare_;
};

// One node of an s-expression. Lists keep the byte span of their source so
// that embedded infix expressions can be re-read with their parentheses.
struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  SourcePos pos;
  std::size_t begin = 0;  // offset of '(' or first atom byte
  std::size_t end = 0;    // offset one past ')' or last atom byte

  bool is_atom(std::string_view text) const { return !is_list && atom == text; }
  // Head symbol of a list, or "" when not a list with an atom head.
  std::string_view head() const;
};

// Reads every top-level form. ';' starts a comment running to end of line.
std::vector<SExpr> read_sexprs(std::string_view text);

// Tokenizer + recursive-descent reader for infix polynomials
// (+ - * / ^, parentheses, decimal literals, identifiers). Division is only
// allowed by a non-zero constant.
class InfixReader {
 public:
  // `text` is the whole source, [begin, end) the slice to read.
  InfixReader(std::string_view text, std::size_t begin, std::size_t end, VarSpace& space, bool allow_new_vars);

  bool at_end() const;
  // Reads one expression. Juxtaposed operands end it, so "p 0" reads as two
  // expressions; a '-' preceded by space but not followed by one opens a
  // new operand ("x -1").
  Polynomial read_expression();
  SourcePos position() const;

 private:
  struct Token {
    enum Kind { Number, Ident, Op, LParen, RParen, End } kind;
    std::string text;
    std::size_t offset;
    bool space_before;
    bool space_after;
  };

  void tokenize();
  const Token& peek() const { return tokens_[cursor_]; }
  Token next() { return tokens_[cursor_++]; }
  bool is_binary_minus(const Token& t) const;
  Polynomial sum();
  Polynomial product();
  Polynomial unary();
  Polynomial power();
  Polynomial primary();
  [[noreturn]] void fail(const std::string& message, std::size_t offset) const;

  std::string_view text_;
  std::size_t begin_;
  std::size_t end_;
  VarSpace& space_;
  bool allow_new_vars_;
  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
  int depth_ = 0;
};

SourcePos position_of(std::string_view text, std::size_t offset);

// Parses a standalone polynomial; unknown identifiers are interned when
// allow_new_vars is set, otherwise they are an error.
Polynomial parse_polynomial(std::string_view text, VarSpace& space, bool allow_new_vars = true);

}  // namespace nlitp

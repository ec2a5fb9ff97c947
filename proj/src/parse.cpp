#include "nlitp/parse.hpp"

#include <cctype>

namespace nlitp {

ParseError::ParseError(const std::string& message, SourcePos pos)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
      pos_(pos),
      bare_(message) {}

std::string_view SExpr::head() const {
  if (!is_list || items.empty() || items.front().is_list) return {};
  return items.front().atom;
}

SourcePos position_of(std::string_view text, std::size_t offset) {
  SourcePos pos;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
  }
  return pos;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> forms;
    skip();
    while (pos_ < text_.size()) {
      forms.push_back(read());
      skip();
    }
    return forms;
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      if (is_space(text_[pos_])) {
        ++pos_;
      } else if (text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  SExpr read() {
    SExpr node;
    node.begin = pos_;
    node.pos = position_of(text_, pos_);
    if (text_[pos_] == ')') throw ParseError("unexpected ')'", node.pos);
    if (text_[pos_] == '(') {
      node.is_list = true;
      ++pos_;
      skip();
      while (true) {
        if (pos_ >= text_.size()) throw ParseError("unterminated list", node.pos);
        if (text_[pos_] == ')') break;
        node.items.push_back(read());
        skip();
      }
      ++pos_;
      node.end = pos_;
      return node;
    }
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')' &&
           text_[pos_] != ';') {
      ++pos_;
    }
    node.atom = std::string(text_.substr(node.begin, pos_ - node.begin));
    node.end = pos_;
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<SExpr> read_sexprs(std::string_view text) { return SExprReader(text).read_all(); }

InfixReader::InfixReader(std::string_view text, std::size_t begin, std::size_t end, VarSpace& space,
                         bool allow_new_vars)
    : text_(text), begin_(begin), end_(end), space_(space), allow_new_vars_(allow_new_vars) {
  tokenize();
}

void InfixReader::tokenize() {
  std::size_t i = begin_;
  auto space_at = [&](std::size_t k) { return k < begin_ || k >= end_ || is_space(text_[k]); };
  while (true) {
    while (i < end_ && is_space(text_[i])) ++i;
    if (i >= end_) break;
    const std::size_t start = i;
    const char c = text_[i];
    Token tok{Token::Op, "", start, space_at(start - 1) || start == begin_, false};
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < end_ && std::isdigit(static_cast<unsigned char>(text_[i + 1])))) {
      tok.kind = Token::Number;
      while (i < end_ && (std::isdigit(static_cast<unsigned char>(text_[i])) || text_[i] == '.')) ++i;
      if (i < end_ && (text_[i] == 'e' || text_[i] == 'E')) {
        std::size_t k = i + 1;
        if (k < end_ && (text_[k] == '+' || text_[k] == '-')) ++k;
        if (k < end_ && std::isdigit(static_cast<unsigned char>(text_[k]))) {
          i = k;
          while (i < end_ && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i;
        }
      }
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      tok.kind = Token::Ident;
      while (i < end_ && (std::isalnum(static_cast<unsigned char>(text_[i])) || text_[i] == '_' || text_[i] == '\'')) ++i;
    } else if (c == '(') {
      tok.kind = Token::LParen;
      ++i;
    } else if (c == ')') {
      tok.kind = Token::RParen;
      ++i;
    } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      ++i;
    } else {
      fail(std::string("unexpected character '") + c + "'", start);
    }
    tok.text = std::string(text_.substr(start, i - start));
    tok.space_after = space_at(i);
    tokens_.push_back(std::move(tok));
  }
  tokens_.push_back(Token{Token::End, "", end_, true, true});
}

bool InfixReader::at_end() const { return peek().kind == Token::End; }

SourcePos InfixReader::position() const { return position_of(text_, peek().offset); }

void InfixReader::fail(const std::string& message, std::size_t offset) const {
  throw ParseError(message, position_of(text_, offset));
}

bool InfixReader::is_binary_minus(const Token& t) const {
  if (t.kind != Token::Op || t.text != "-") return false;
  return depth_ > 0 || !(t.space_before && !t.space_after);
}

Polynomial InfixReader::read_expression() {
  if (at_end()) fail("expected an expression", peek().offset);
  return sum();
}

Polynomial InfixReader::sum() {
  Polynomial acc = product();
  while (true) {
    const Token& t = peek();
    if (t.kind == Token::Op && t.text == "+") {
      next();
      acc += product();
    } else if (is_binary_minus(t)) {
      next();
      acc -= product();
    } else {
      return acc;
    }
  }
}

Polynomial InfixReader::product() {
  Polynomial acc = unary();
  while (peek().kind == Token::Op && (peek().text == "*" || peek().text == "/")) {
    const Token op = next();
    Polynomial rhs = unary();
    if (op.text == "*") {
      acc = acc * rhs;
    } else {
      if (!rhs.is_constant() || rhs.is_zero()) fail("division only by a non-zero constant", op.offset);
      acc *= Rational(1) / rhs.constant_term();
    }
  }
  return acc;
}

Polynomial InfixReader::unary() {
  if (peek().kind == Token::Op && (peek().text == "-" || peek().text == "+")) {
    const bool negate = next().text == "-";
    Polynomial p = unary();
    return negate ? -p : p;
  }
  return power();
}

Polynomial InfixReader::power() {
  Polynomial base = primary();
  if (peek().kind == Token::Op && peek().text == "^") {
    next();
    const Token e = next();
    if (e.kind != Token::Number || e.text.find_first_not_of("0123456789") != std::string::npos) {
      fail("exponent must be a non-negative integer", e.offset);
    }
    if (e.text.size() > 4) fail("exponent too large", e.offset);
    return base.pow(static_cast<unsigned>(std::stoul(e.text)));
  }
  return base;
}

Polynomial InfixReader::primary() {
  const Token t = next();
  switch (t.kind) {
    case Token::Number:
      try {
        return Polynomial::constant(parse_decimal(t.text));
      } catch (const std::invalid_argument& e) {
        fail(e.what(), t.offset);
      }
    case Token::Ident: {
      auto v = space_.find(t.text);
      if (!v) {
        if (!allow_new_vars_) fail("undeclared variable '" + t.text + "'", t.offset);
        v = space_.intern(t.text);
      }
      return Polynomial::variable(*v);
    }
    case Token::LParen: {
      ++depth_;
      Polynomial inner = sum();
      --depth_;
      if (peek().kind != Token::RParen) fail("expected ')'", peek().offset);
      next();
      return inner;
    }
    case Token::End:
      fail("unexpected end of expression", t.offset);
    default:
      fail("unexpected '" + t.text + "'", t.offset);
  }
}

Polynomial parse_polynomial(std::string_view text, VarSpace& space, bool allow_new_vars) {
  InfixReader reader(text, 0, text.size(), space, allow_new_vars);
  Polynomial p = reader.read_expression();
  if (!reader.at_end()) throw ParseError("trailing input in polynomial", reader.position());
  return p;
}

}  // namespace nlitp

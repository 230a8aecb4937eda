#include "peakbound/expr.hpp"

#include <cctype>
#include <cmath>

namespace peakbound {
namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string text;   // lexeme for Number/Ident
  double value = 0;   // Number only
  bool is_integer = false;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    std::size_t start = i_;
    if (i_ >= s_.size()) return {Tok::End, start, "", 0, false};
    char c = s_[i_];
    switch (c) {
      case '+': ++i_; return {Tok::Plus, start, "+", 0, false};
      case '-': ++i_; return {Tok::Minus, start, "-", 0, false};
      case '*': ++i_; return {Tok::Star, start, "*", 0, false};
      case '/': ++i_; return {Tok::Slash, start, "/", 0, false};
      case '^': ++i_; return {Tok::Caret, start, "^", 0, false};
      case '(': ++i_; return {Tok::LParen, start, "(", 0, false};
      case ')': ++i_; return {Tok::RParen, start, ")", 0, false};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number(start);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        ++i_;
      return {Tok::Ident, start, s_.substr(start, i_ - start), 0, false};
    }
    throw ParseError(start, std::string("unexpected character '") + c + "'");
  }

 private:
  Token lex_number(std::size_t start) {
    bool integer = true, any_digit = false;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
      ++i_;
      any_digit = true;
    }
    if (i_ < s_.size() && s_[i_] == '.') {
      integer = false;
      ++i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
        any_digit = true;
      }
    }
    if (!any_digit) throw ParseError(start, "malformed number");
    if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      integer = false;
      std::size_t j = i_ + 1;
      if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
      if (j >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[j])))
        throw ParseError(i_, "malformed exponent in number literal");
      i_ = j;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    std::string text = s_.substr(start, i_ - start);
    return {Tok::Number, start, text, std::stod(text), integer};
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

class Parser {
 public:
  Parser(const std::string& text, const ContextPtr& ctx) : lex_(text), ctx_(ctx) { advance(); }

  Polynomial parse() {
    Polynomial p = parse_sum();
    if (cur_.kind != Tok::End) throw ParseError(cur_.pos, "unexpected trailing input");
    return p;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  // After a complete operand, a value token signals implicit multiplication.
  void reject_implicit() const {
    if (cur_.kind == Tok::Number || cur_.kind == Tok::Ident || cur_.kind == Tok::LParen)
      throw ParseError(cur_.pos, "implicit multiplication is not supported; use '*'");
    if (cur_.kind == Tok::Slash)
      throw ParseError(cur_.pos, "division is not supported");
  }

  Polynomial parse_sum() {
    Polynomial lhs = parse_product();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      bool add = cur_.kind == Tok::Plus;
      advance();
      Polynomial rhs = parse_product();
      lhs = add ? lhs + rhs : lhs - rhs;
    }
    return lhs;
  }

  Polynomial parse_product() {
    Polynomial lhs = parse_unary();
    while (cur_.kind == Tok::Star) {
      advance();
      lhs = lhs * parse_unary();
    }
    return lhs;
  }

  Polynomial parse_unary() {
    if (cur_.kind == Tok::Minus) {
      advance();
      return -parse_unary();
    }
    return parse_primary();
  }

  Polynomial parse_primary() {
    Polynomial base(ctx_);
    switch (cur_.kind) {
      case Tok::Number:
        base = Polynomial::constant(ctx_, cur_.value);
        advance();
        break;
      case Tok::Ident: {
        auto idx = ctx_->index_of(cur_.text);
        if (!idx) throw ParseError(cur_.pos, "unknown identifier '" + cur_.text + "'");
        base = Polynomial::variable(ctx_, *idx);
        advance();
        break;
      }
      case Tok::LParen: {
        advance();
        base = parse_sum();
        if (cur_.kind != Tok::RParen) throw ParseError(cur_.pos, "expected ')'");
        advance();
        break;
      }
      case Tok::Slash:
        throw ParseError(cur_.pos, "division is not supported");
      default:
        throw ParseError(cur_.pos, "expected a number, identifier, or '('");
    }
    while (cur_.kind == Tok::Caret) {
      advance();
      if (cur_.kind != Tok::Number || !cur_.is_integer)
        throw ParseError(cur_.pos, "exponent must be a nonnegative integer literal");
      double v = cur_.value;
      if (v != std::floor(v) || v < 0 || v > 255)
        throw ParseError(cur_.pos, "exponent must be an integer in [0, 255]");
      base = base.pow(static_cast<int>(v));
      advance();
    }
    reject_implicit();
    return base;
  }

  Lexer lex_;
  ContextPtr ctx_;
  Token cur_;
};

}  // namespace

Polynomial parse_polynomial(const std::string& text, const ContextPtr& ctx) {
  return Parser(text, ctx).parse();
}

}  // namespace peakbound

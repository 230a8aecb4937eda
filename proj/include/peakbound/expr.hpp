#pragma once

#include <stdexcept>
#include <string>

#include "peakbound/poly.hpp"

namespace peakbound {

// Thrown on any lexical or syntactic problem; `position` is the 0-based byte
// offset into the input where the problem was detected.
struct ParseError : std::runtime_error {
  std::size_t position;
  ParseError(std::size_t pos, const std::string& msg)
      : std::runtime_error("parse error at byte " + std::to_string(pos) + ": " + msg),
        position(pos) {}
};

// Parses an arithmetic expression over the context's variables into a
// Polynomial. Supported: decimal/scientific number literals, identifiers,
// unary minus, binary + - *, ^ with a nonnegative integer literal exponent,
// and parentheses. Division and implicit multiplication are rejected.
// Precedence, tightest first: ^, unary minus, *, binary + and -.
Polynomial parse_polynomial(const std::string& text, const ContextPtr& ctx);

}  // namespace peakbound

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace peakbound {

// Ordered list of variable names. Polynomials keep a pointer to the context
// they live in; two contexts are interchangeable when their name lists match.
class VariableContext {
 public:
  explicit VariableContext(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> index_of(const std::string& name) const;
  bool same_as(const VariableContext& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
};

using ContextPtr = std::shared_ptr<const VariableContext>;

ContextPtr make_context(std::vector<std::string> names);

// Exponent vector, one entry per context variable. Exponents are capped at
// 255; arithmetic that would exceed the cap throws.
struct Monomial {
  std::vector<std::uint8_t> exps;

  Monomial() = default;
  explicit Monomial(int nvars) : exps(nvars, 0) {}

  int degree() const;
  bool operator==(const Monomial& o) const { return exps == o.exps; }
};

// Graded lexicographic order: lower total degree first; within a degree
// class the monomial whose leading exponent is larger comes first, so for
// [x1, x2] the order is 1, x1, x2, x1^2, x1*x2, x2^2, ...
bool grlex_less(const Monomial& a, const Monomial& b);

struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const { return grlex_less(a, b); }
};

// All monomials in `nvars` variables of total degree <= deg, in graded-lex
// order. Size is C(nvars + deg, nvars).
std::vector<Monomial> monomial_basis(int nvars, int deg);

// Sparse multivariate polynomial with real coefficients. Terms whose
// coefficient magnitude drops to 1e-14 or below are pruned after arithmetic.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(ContextPtr ctx) : ctx_(std::move(ctx)) {}

  static Polynomial constant(ContextPtr ctx, double c);
  static Polynomial variable(ContextPtr ctx, int index);
  static Polynomial term(ContextPtr ctx, Monomial m, double c);

  const ContextPtr& context() const { return ctx_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int term_count() const { return static_cast<int>(terms_.size()); }

  // Total degree; the zero polynomial reports degree 0.
  int degree() const;
  double coeff(const Monomial& m) const;
  void set_coeff(const Monomial& m, double c);
  void add_term(const Monomial& m, double c);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  Polynomial scaled(double s) const;
  Polynomial pow(int n) const;

  Polynomial partial(int var) const;
  double evaluate(const std::vector<double>& point) const;

  // Fix variable `var` to `value` (the variable stays in the context with
  // exponent zero).
  Polynomial substitute(int var, double value) const;
  // Replace variable `var` by factor*var, i.e. scale each term by
  // factor^exponent. Used for time rescaling.
  Polynomial scale_variable(int var, double factor) const;

  // Re-express in `target`; every variable carrying a nonzero exponent must
  // exist there by name.
  Polynomial map_to(const ContextPtr& target) const;

  void prune(double tol = 1e-14);
  std::string to_string() const;

 private:
  void check_same_context(const Polynomial& o) const;

  ContextPtr ctx_;
  TermMap terms_;
};

// Component-wise polynomial vector (e.g. a vector field or gradient).
using PolyVector = std::vector<Polynomial>;

// Max total degree across components; 0 for an empty or all-zero vector.
int degree(const PolyVector& v);

// Dot product of two equally sized vectors.
Polynomial dot(const PolyVector& a, const PolyVector& b);

// Gradient with respect to the listed variable indices.
PolyVector gradient(const Polynomial& p, const std::vector<int>& vars);

// n choose k as a long-double-safe integer (throws on overflow of int64).
long long binomial(int n, int k);

}  // namespace peakbound

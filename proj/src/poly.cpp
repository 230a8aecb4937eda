#include "peakbound/poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace peakbound {

VariableContext::VariableContext(std::vector<std::string> names) : names_(std::move(names)) {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw std::invalid_argument("empty variable name");
    for (size_t j = i + 1; j < names_.size(); ++j)
      if (names_[i] == names_[j])
        throw std::invalid_argument("duplicate variable name: " + names_[i]);
  }
}

std::optional<int> VariableContext::index_of(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

ContextPtr make_context(std::vector<std::string> names) {
  return std::make_shared<VariableContext>(std::move(names));
}

int Monomial::degree() const {
  int d = 0;
  for (auto e : exps) d += e;
  return d;
}

bool grlex_less(const Monomial& a, const Monomial& b) {
  int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Same degree: bigger exponent on the earliest differing variable first.
  const size_t n = std::min(a.exps.size(), b.exps.size());
  for (size_t i = 0; i < n; ++i)
    if (a.exps[i] != b.exps[i]) return a.exps[i] > b.exps[i];
  return a.exps.size() < b.exps.size();
}

static void basis_rec(int nvars, int deg, int var, Monomial& cur, std::vector<Monomial>& out) {
  if (var == nvars) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= deg; ++e) {
    cur.exps[var] = static_cast<std::uint8_t>(e);
    basis_rec(nvars, deg - e, var + 1, cur, out);
  }
  cur.exps[var] = 0;
}

std::vector<Monomial> monomial_basis(int nvars, int deg) {
  if (nvars < 0 || deg < 0) throw std::invalid_argument("monomial_basis: negative argument");
  if (deg > 255) throw std::invalid_argument("monomial_basis: degree exceeds exponent cap");
  std::vector<Monomial> out;
  out.reserve(static_cast<size_t>(binomial(nvars + deg, nvars)));
  Monomial cur(nvars);
  basis_rec(nvars, deg, 0, cur, out);
  std::sort(out.begin(), out.end(), GrlexLess{});
  return out;
}

Polynomial Polynomial::constant(ContextPtr ctx, double c) {
  Polynomial p(std::move(ctx));
  if (c != 0.0) p.terms_[Monomial(p.ctx_->size())] = c;
  return p;
}

Polynomial Polynomial::variable(ContextPtr ctx, int index) {
  if (index < 0 || index >= ctx->size()) throw std::out_of_range("variable index");
  Polynomial p(std::move(ctx));
  Monomial m(p.ctx_->size());
  m.exps[index] = 1;
  p.terms_[m] = 1.0;
  return p;
}

Polynomial Polynomial::term(ContextPtr ctx, Monomial m, double c) {
  if (static_cast<int>(m.exps.size()) != ctx->size())
    throw std::invalid_argument("monomial size does not match context");
  Polynomial p(std::move(ctx));
  if (c != 0.0) p.terms_[std::move(m)] = c;
  return p;
}

int Polynomial::degree() const {
  if (terms_.empty()) return 0;
  // Grlex order puts the highest total degree last.
  return terms_.rbegin()->first.degree();
}

double Polynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::set_coeff(const Monomial& m, double c) {
  if (c == 0.0)
    terms_.erase(m);
  else
    terms_[m] = c;
}

void Polynomial::add_term(const Monomial& m, double c) {
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

void Polynomial::check_same_context(const Polynomial& o) const {
  if (!ctx_ || !o.ctx_ || !ctx_->same_as(*o.ctx_))
    throw std::invalid_argument("polynomial context mismatch");
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  check_same_context(o);
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  r.prune();
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  check_same_context(o);
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
  r.prune();
  return r;
}

Polynomial Polynomial::operator-() const { return scaled(-1.0); }

Polynomial Polynomial::scaled(double s) const {
  Polynomial r(ctx_);
  if (s == 0.0) return r;
  for (const auto& [m, c] : terms_) r.terms_[m] = c * s;
  r.prune();
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  check_same_context(o);
  Polynomial r(ctx_);
  const int n = ctx_->size();
  Monomial prod(n);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      for (int i = 0; i < n; ++i) {
        int e = int(ma.exps[i]) + int(mb.exps[i]);
        if (e > 255) throw std::overflow_error("monomial exponent exceeds 255");
        prod.exps[i] = static_cast<std::uint8_t>(e);
      }
      r.add_term(prod, ca * cb);
    }
  }
  r.prune();
  return r;
}

Polynomial Polynomial::pow(int n) const {
  if (n < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial r = Polynomial::constant(ctx_, 1.0);
  for (int i = 0; i < n; ++i) r = r * (*this);
  return r;
}

Polynomial Polynomial::partial(int var) const {
  if (var < 0 || var >= ctx_->size()) throw std::out_of_range("partial: variable index");
  Polynomial r(ctx_);
  for (const auto& [m, c] : terms_) {
    if (m.exps[var] == 0) continue;
    Monomial d = m;
    int e = d.exps[var];
    d.exps[var] = static_cast<std::uint8_t>(e - 1);
    r.add_term(d, c * e);
  }
  r.prune();
  return r;
}

double Polynomial::evaluate(const std::vector<double>& point) const {
  if (static_cast<int>(point.size()) != ctx_->size())
    throw std::invalid_argument("evaluate: point dimension mismatch");
  double acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (size_t i = 0; i < m.exps.size(); ++i) {
      for (int e = 0; e < m.exps[i]; ++e) t *= point[i];
    }
    acc += t;
  }
  return acc;
}

Polynomial Polynomial::substitute(int var, double value) const {
  if (var < 0 || var >= ctx_->size()) throw std::out_of_range("substitute: variable index");
  Polynomial r(ctx_);
  for (const auto& [m, c] : terms_) {
    double f = 1.0;
    for (int e = 0; e < m.exps[var]; ++e) f *= value;
    Monomial t = m;
    t.exps[var] = 0;
    r.add_term(t, c * f);
  }
  r.prune();
  return r;
}

Polynomial Polynomial::scale_variable(int var, double factor) const {
  if (var < 0 || var >= ctx_->size()) throw std::out_of_range("scale_variable: variable index");
  Polynomial r(ctx_);
  for (const auto& [m, c] : terms_) {
    double f = 1.0;
    for (int e = 0; e < m.exps[var]; ++e) f *= factor;
    r.add_term(m, c * f);
  }
  r.prune();
  return r;
}

Polynomial Polynomial::map_to(const ContextPtr& target) const {
  std::vector<int> where(ctx_->size(), -1);
  for (int i = 0; i < ctx_->size(); ++i) {
    auto idx = target->index_of(ctx_->name(i));
    if (idx) where[i] = *idx;
  }
  Polynomial r(target);
  Monomial t(target->size());
  for (const auto& [m, c] : terms_) {
    std::fill(t.exps.begin(), t.exps.end(), 0);
    for (size_t i = 0; i < m.exps.size(); ++i) {
      if (m.exps[i] == 0) continue;
      if (where[i] < 0)
        throw std::invalid_argument("map_to: variable " + ctx_->name(int(i)) +
                                    " missing from target context");
      t.exps[where[i]] = m.exps[i];
    }
    r.add_term(t, c);
  }
  r.prune();
  return r;
}

void Polynomial::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= tol)
      it = terms_.erase(it);
    else
      ++it;
  }
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  char buf[64];
  for (const auto& [m, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    std::snprintf(buf, sizeof(buf), "%.17g", c);
    os << buf;
    for (size_t i = 0; i < m.exps.size(); ++i) {
      if (m.exps[i] == 0) continue;
      os << "*" << ctx_->name(int(i));
      if (m.exps[i] > 1) os << "^" << int(m.exps[i]);
    }
  }
  return os.str();
}

int degree(const PolyVector& v) {
  int d = 0;
  for (const auto& p : v) d = std::max(d, p.degree());
  return d;
}

Polynomial dot(const PolyVector& a, const PolyVector& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("dot: size mismatch or empty");
  Polynomial r = a[0] * b[0];
  for (size_t i = 1; i < a.size(); ++i) r = r + a[i] * b[i];
  return r;
}

PolyVector gradient(const Polynomial& p, const std::vector<int>& vars) {
  PolyVector g;
  g.reserve(vars.size());
  for (int v : vars) g.push_back(p.partial(v));
  return g;
}

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i);
    if (r < 0) throw std::overflow_error("binomial overflow");
    r /= i;
  }
  return r;
}

}  // namespace peakbound

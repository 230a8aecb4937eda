#include "peakbound/semialg.hpp"

#include <cmath>

namespace peakbound {

SemialgebraicSet box_set(const ContextPtr& ctx, const std::vector<double>& lo,
                         const std::vector<double>& hi) {
  const int n = ctx->size();
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw std::invalid_argument("box_set: bound dimension mismatch");
  SemialgebraicSet s;
  s.ctx = ctx;
  for (int i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw std::invalid_argument("box_set: lo > hi");
    Polynomial xi = Polynomial::variable(ctx, i);
    if (lo[i] == hi[i]) {
      s.equalities.push_back(xi - Polynomial::constant(ctx, lo[i]));
    } else {
      Polynomial g = (xi - Polynomial::constant(ctx, lo[i])) *
                     (Polynomial::constant(ctx, hi[i]) - xi);
      s.inequalities.push_back(g);
    }
  }
  s.box_lo = lo;
  s.box_hi = hi;
  return s;
}

SemialgebraicSet disc_set(const ContextPtr& ctx, const std::vector<double>& center,
                          double radius) {
  const int n = ctx->size();
  if (static_cast<int>(center.size()) != n)
    throw std::invalid_argument("disc_set: center dimension mismatch");
  if (radius < 0) throw std::invalid_argument("disc_set: negative radius");
  SemialgebraicSet s;
  s.ctx = ctx;
  Polynomial g = Polynomial::constant(ctx, radius * radius);
  for (int i = 0; i < n; ++i) {
    Polynomial d = Polynomial::variable(ctx, i) - Polynomial::constant(ctx, center[i]);
    g = g - d * d;
  }
  s.inequalities.push_back(g);
  std::vector<double> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = center[i] - radius;
    hi[i] = center[i] + radius;
  }
  s.box_lo = lo;
  s.box_hi = hi;
  return s;
}

SemialgebraicSet with_ball(const SemialgebraicSet& s, const std::vector<double>& center,
                           double radius) {
  if (static_cast<int>(center.size()) != s.ctx->size())
    throw std::invalid_argument("with_ball: center dimension mismatch");
  SemialgebraicSet r = s;
  Polynomial g = Polynomial::constant(s.ctx, radius * radius);
  for (int i = 0; i < s.ctx->size(); ++i) {
    Polynomial d = Polynomial::variable(s.ctx, i) - Polynomial::constant(s.ctx, center[i]);
    g = g - d * d;
  }
  r.inequalities.push_back(g);
  return r;
}

bool contains(const SemialgebraicSet& s, const std::vector<double>& point, double tol) {
  for (const auto& g : s.inequalities)
    if (g.evaluate(point) < -tol) return false;
  for (const auto& h : s.equalities)
    if (std::abs(h.evaluate(point)) > tol) return false;
  return true;
}

SemialgebraicSet lift_set(const SemialgebraicSet& s, const ContextPtr& target) {
  SemialgebraicSet r;
  r.ctx = target;
  for (const auto& g : s.inequalities) r.inequalities.push_back(g.map_to(target));
  for (const auto& h : s.equalities) r.equalities.push_back(h.map_to(target));
  if (s.ctx->same_as(*target)) {
    r.box_lo = s.box_lo;
    r.box_hi = s.box_hi;
  }
  return r;
}

std::optional<std::pair<int, double>> single_variable_equality(const Polynomial& h) {
  int var = -1;
  double a = 0, b = 0;
  for (const auto& [m, c] : h.terms()) {
    int d = m.degree();
    if (d == 0) {
      b = c;
    } else if (d == 1) {
      for (size_t i = 0; i < m.exps.size(); ++i) {
        if (m.exps[i] == 1) {
          if (var >= 0 && var != static_cast<int>(i)) return std::nullopt;
          var = static_cast<int>(i);
          a = c;
        }
      }
    } else {
      return std::nullopt;
    }
  }
  if (var < 0 || a == 0) return std::nullopt;
  return std::make_pair(var, -b / a);
}

}  // namespace peakbound

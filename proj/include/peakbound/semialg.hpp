#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "peakbound/poly.hpp"

namespace peakbound {

// Basic closed semialgebraic set {x : g_i(x) >= 0, h_j(x) = 0}. Equalities
// are kept separate so downstream certificates can attach free-sign
// multipliers to them.
struct SemialgebraicSet {
  ContextPtr ctx;
  std::vector<Polynomial> inequalities;
  std::vector<Polynomial> equalities;

  // Axis-aligned bounding box when one is known (box and disc constructors
  // record it; used for grid scans and sampling).
  std::optional<std::vector<double>> box_lo, box_hi;
};

// Box {lo_i <= x_i <= hi_i} as per-coordinate quadratics
// (x_i - lo_i)(hi_i - x_i) >= 0. A degenerate coordinate lo_i == hi_i is
// emitted as the equality x_i - lo_i = 0.
SemialgebraicSet box_set(const ContextPtr& ctx, const std::vector<double>& lo,
                         const std::vector<double>& hi);

// Closed disc/ball {r^2 - ||x - c||^2 >= 0} over all context variables.
SemialgebraicSet disc_set(const ContextPtr& ctx, const std::vector<double>& center,
                          double radius);

// Copy of the set with the redundant constraint R^2 - ||x - c||^2 >= 0
// appended (makes the description explicitly ball-constrained).
SemialgebraicSet with_ball(const SemialgebraicSet& s, const std::vector<double>& center,
                           double radius);

// Membership test: every inequality >= -tol and every |equality| <= tol.
bool contains(const SemialgebraicSet& s, const std::vector<double>& point, double tol = 1e-9);

// Re-express all constraint polynomials in `target` (variables matched by
// name). The bounding box is dropped unless contexts are identical.
SemialgebraicSet lift_set(const SemialgebraicSet& s, const ContextPtr& target);

// Recognizes an equality of the form a*x_i + b = 0 touching exactly one
// variable; returns (i, -b/a).
std::optional<std::pair<int, double>> single_variable_equality(const Polynomial& h);

}  // namespace peakbound

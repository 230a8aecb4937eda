#pragma once

#include <string>
#include <vector>

#include "peakbound/semialg.hpp"

namespace peakbound {

// One rational summand N_l(t,x) / D_l(t,x) of the vector field. The
// numerator has one component per state coordinate.
struct RationalTerm {
  PolyVector numerator;
  Polynomial denominator;
};

// dx/dt = f0(t,x) + sum_l N_l(t,x)/D_l(t,x). All polynomials live in the
// time-state context [t, x1..xn]; time is variable 0.
struct RationalDynamics {
  ContextPtr tx_ctx;
  PolyVector f0;
  std::vector<RationalTerm> terms;

  int state_dim() const { return static_cast<int>(f0.size()); }
};

// Peak estimation problem data: bound max p(x(t)) over t in [0,T] and
// trajectories started in X0, with state constrained to X.
struct PeakProblem {
  std::string name;
  ContextPtr state_ctx;  // [x1..xn]
  ContextPtr tx_ctx;     // [t, x1..xn]
  RationalDynamics dynamics;
  SemialgebraicSet state_set;    // X, over state_ctx
  SemialgebraicSet initial_set;  // X0, over state_ctx
  Polynomial objective;          // p, over state_ctx
  double horizon = 0;            // T

  int state_dim() const { return state_ctx->size(); }
  // Throws std::invalid_argument on structural inconsistencies.
  void validate() const;
};

// Lie derivative along the polynomial part: d/dt v + f0 . grad_x v.
Polynomial lie_f0(const RationalDynamics& dyn, const Polynomial& v);

// N_l . grad_x v for term l.
Polynomial numerator_dot_grad(const RationalDynamics& dyn, int l, const Polynomial& v);

// Degree bookkeeping. Numerator degree is the max over coordinates.
int f0_degree(const RationalDynamics& dyn);
int numerator_degree(const RationalDynamics& dyn, int l);

// eps_l = max(deg D_l, deg N_l - 1); drives the truncation bump of the
// per-term constraint in the sum-of-rational program.
int epsilon_degree(const RationalDynamics& dyn, int l);

// Phi = prod_l D_l and Phi_l = prod_{l' != l} D_l'.
struct ClearingPolys {
  Polynomial phi;
  std::vector<Polynomial> phi_l;
};
ClearingPolys clearing_polys(const RationalDynamics& dyn);

// Y = max(deg f0 - 1, max_l deg N_l), clamped at 0; drives the truncation
// bump of the lifted program's Lie constraint.
int lift_degree_Y(const RationalDynamics& dyn);

// Evaluate the full right-hand side at (t, x). Throws std::domain_error if
// any denominator magnitude falls below 1e-12.
std::vector<double> evaluate_rhs(const RationalDynamics& dyn, double t,
                                 const std::vector<double>& x);

// Rescale time onto [0,1]: t -> T*t inside every dynamic polynomial, f0 and
// numerators multiplied by T, horizon set to 1. Sets and objective are
// untouched (they do not involve t).
PeakProblem time_rescaled(const PeakProblem& p);

// Two-stage positivity check for denominator l over [0,T] x X.
// Stage 1 scans a uniform grid (resolution points per dimension) over the
// recorded bounding box. Stage 2 (optional) maximizes delta subject to
// D_l - delta being weighted-SOS over [0,T] x X at the given truncation.
struct DenominatorCheck {
  double grid_min = 0;
  double grid_max = 0;
  bool sos_ran = false;
  double sos_delta = 0;  // best certified margin, valid when sos_ran
  bool certified = false;
};
DenominatorCheck certify_denominator_positivity(const PeakProblem& p, int l,
                                                int grid_resolution = 21,
                                                bool run_sos_stage = true,
                                                int sos_truncation = 2);

}  // namespace peakbound

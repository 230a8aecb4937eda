#include "peakbound/system.hpp"

#include <cmath>

#include "peakbound/sdp_solver.hpp"
#include "peakbound/sos.hpp"

namespace peakbound {

void PeakProblem::validate() const {
  const int n = state_dim();
  if (n < 1) throw std::invalid_argument("problem has no state variables");
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
  if (tx_ctx->size() != n + 1 || tx_ctx->name(0) != "t")
    throw std::invalid_argument("time-state context must be [t, x1..xn]");
  for (int i = 0; i < n; ++i)
    if (tx_ctx->name(i + 1) != state_ctx->name(i))
      throw std::invalid_argument("state variable order mismatch between contexts");
  if (!dynamics.tx_ctx || !dynamics.tx_ctx->same_as(*tx_ctx))
    throw std::invalid_argument("dynamics context mismatch");
  if (dynamics.state_dim() != n) throw std::invalid_argument("f0 dimension mismatch");
  for (const auto& f : dynamics.f0)
    if (!f.context() || !f.context()->same_as(*tx_ctx))
      throw std::invalid_argument("f0 component context mismatch");
  for (const auto& term : dynamics.terms) {
    if (static_cast<int>(term.numerator.size()) != n)
      throw std::invalid_argument("rational term numerator dimension mismatch");
    if (term.denominator.is_zero())
      throw std::invalid_argument("rational term denominator is identically zero");
    if (!term.denominator.context()->same_as(*tx_ctx))
      throw std::invalid_argument("denominator context mismatch");
    for (const auto& nc : term.numerator)
      if (!nc.context()->same_as(*tx_ctx))
        throw std::invalid_argument("numerator context mismatch");
  }
  if (!objective.context() || !objective.context()->same_as(*state_ctx))
    throw std::invalid_argument("objective must live in the state context");
  if (!state_set.ctx->same_as(*state_ctx) || !initial_set.ctx->same_as(*state_ctx))
    throw std::invalid_argument("set context mismatch");
}

static std::vector<int> state_indices(const RationalDynamics& dyn) {
  std::vector<int> idx(dyn.state_dim());
  for (int i = 0; i < dyn.state_dim(); ++i) idx[i] = i + 1;  // variable 0 is time
  return idx;
}

Polynomial lie_f0(const RationalDynamics& dyn, const Polynomial& v) {
  PolyVector grad = gradient(v, state_indices(dyn));
  return v.partial(0) + dot(dyn.f0, grad);
}

Polynomial numerator_dot_grad(const RationalDynamics& dyn, int l, const Polynomial& v) {
  if (l < 0 || l >= static_cast<int>(dyn.terms.size()))
    throw std::out_of_range("rational term index");
  PolyVector grad = gradient(v, state_indices(dyn));
  return dot(dyn.terms[l].numerator, grad);
}

int f0_degree(const RationalDynamics& dyn) { return degree(dyn.f0); }

int numerator_degree(const RationalDynamics& dyn, int l) {
  if (l < 0 || l >= static_cast<int>(dyn.terms.size()))
    throw std::out_of_range("rational term index");
  return degree(dyn.terms[l].numerator);
}

int epsilon_degree(const RationalDynamics& dyn, int l) {
  if (l < 0 || l >= static_cast<int>(dyn.terms.size()))
    throw std::out_of_range("rational term index");
  return std::max(dyn.terms[l].denominator.degree(), numerator_degree(dyn, l) - 1);
}

ClearingPolys clearing_polys(const RationalDynamics& dyn) {
  ClearingPolys out;
  out.phi = Polynomial::constant(dyn.tx_ctx, 1.0);
  for (const auto& term : dyn.terms) out.phi = out.phi * term.denominator;
  for (size_t l = 0; l < dyn.terms.size(); ++l) {
    Polynomial p = Polynomial::constant(dyn.tx_ctx, 1.0);
    for (size_t m = 0; m < dyn.terms.size(); ++m)
      if (m != l) p = p * dyn.terms[m].denominator;
    out.phi_l.push_back(p);
  }
  return out;
}

int lift_degree_Y(const RationalDynamics& dyn) {
  int y = f0_degree(dyn) - 1;
  for (size_t l = 0; l < dyn.terms.size(); ++l)
    y = std::max(y, numerator_degree(dyn, static_cast<int>(l)));
  return std::max(y, 0);
}

std::vector<double> evaluate_rhs(const RationalDynamics& dyn, double t,
                                 const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != dyn.state_dim())
    throw std::invalid_argument("evaluate_rhs: state dimension mismatch");
  std::vector<double> pt(x.size() + 1);
  pt[0] = t;
  for (size_t i = 0; i < x.size(); ++i) pt[i + 1] = x[i];

  std::vector<double> out(dyn.state_dim());
  for (int i = 0; i < dyn.state_dim(); ++i) out[i] = dyn.f0[i].evaluate(pt);
  for (const auto& term : dyn.terms) {
    double d = term.denominator.evaluate(pt);
    if (std::abs(d) < 1e-12)
      throw std::domain_error("denominator magnitude below 1e-12 at evaluation point");
    for (int i = 0; i < dyn.state_dim(); ++i) out[i] += term.numerator[i].evaluate(pt) / d;
  }
  return out;
}

PeakProblem time_rescaled(const PeakProblem& p) {
  PeakProblem r = p;
  const double T = p.horizon;
  auto stretch = [&](const Polynomial& q) { return q.scale_variable(0, T); };
  for (auto& f : r.dynamics.f0) f = stretch(f).scaled(T);
  for (auto& term : r.dynamics.terms) {
    for (auto& nc : term.numerator) nc = stretch(nc).scaled(T);
    term.denominator = stretch(term.denominator);
  }
  r.horizon = 1.0;
  return r;
}

// Uniform grid over [0,T] x X using the recorded bounding box of X.
static void scan_denominator(const PeakProblem& p, const Polynomial& d, int resolution,
                             double* out_min, double* out_max) {
  if (!p.state_set.box_lo || !p.state_set.box_hi)
    throw std::invalid_argument("state set has no recorded bounding box for grid scans");
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  const int n = p.state_dim();
  std::vector<double> lo(n + 1), hi(n + 1);
  lo[0] = 0;
  hi[0] = p.horizon;
  for (int i = 0; i < n; ++i) {
    lo[i + 1] = (*p.state_set.box_lo)[i];
    hi[i + 1] = (*p.state_set.box_hi)[i];
  }
  std::vector<int> idx(n + 1, 0);
  std::vector<double> pt(n + 1);
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  while (true) {
    for (int i = 0; i <= n; ++i)
      pt[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / double(resolution - 1);
    double v = d.evaluate(pt);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    int i = 0;
    while (i <= n && ++idx[i] == resolution) idx[i++] = 0;
    if (i > n) break;
  }
  *out_min = mn;
  *out_max = mx;
}

DenominatorCheck certify_denominator_positivity(const PeakProblem& p, int l,
                                                int grid_resolution, bool run_sos_stage,
                                                int sos_truncation) {
  if (l < 0 || l >= static_cast<int>(p.dynamics.terms.size()))
    throw std::out_of_range("rational term index");
  const Polynomial& d = p.dynamics.terms[l].denominator;

  DenominatorCheck check;
  scan_denominator(p, d, grid_resolution, &check.grid_min, &check.grid_max);

  if (run_sos_stage) {
    // maximize delta subject to D_l - delta in WSOS([0,T] x X).
    SemialgebraicSet slab = lift_set(p.state_set, p.tx_ctx);
    Polynomial t = Polynomial::variable(p.tx_ctx, 0);
    slab.inequalities.insert(slab.inequalities.begin(),
                             t * (Polynomial::constant(p.tx_ctx, p.horizon) - t));
    ProgramBuilder builder;
    SlotId delta = builder.new_scalar("delta");
    LinearPolyExpr expr;
    expr.constant = d;
    expr.add_term(delta, Polynomial::constant(p.tx_ctx, -1.0));
    builder.assert_wsos(expr, slab, sos_truncation, "denominator margin");
    builder.minimize({{delta, -1.0}});
    SDPSolution sol = solve_sdp(builder.compile());
    check.sos_ran = true;
    check.sos_delta = sol.status == SolveStatus::Optimal ? -sol.primal_obj : 0.0;
    if (sol.status != SolveStatus::Optimal) check.sos_delta = 0.0;
  }
  check.certified =
      check.grid_min > 0 && (!check.sos_ran || check.sos_delta > 1e-7);
  return check;
}

}  // namespace peakbound

#include "peakbound/formulations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace peakbound {

const char* method_name(Method m) {
  switch (m) {
    case Method::SumOfRational: return "sor";
    case Method::Cleared: return "cleared";
    case Method::Lifted: return "lifted";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "sor" || name == "sum-of-rational") return Method::SumOfRational;
  if (name == "cleared") return Method::Cleared;
  if (name == "lifted") return Method::Lifted;
  return std::nullopt;
}

namespace {

// t * (T - t), the time slab inequality over a context whose first variable
// is time.
Polynomial time_slab(const ContextPtr& ctx, double T) {
  Polynomial t = Polynomial::variable(ctx, 0);
  return t * (Polynomial::constant(ctx, T) - t);
}

SemialgebraicSet make_slab(const PeakProblem& problem, const BallOption& ball) {
  SemialgebraicSet slab;
  slab.ctx = problem.tx_ctx;
  slab.inequalities.push_back(time_slab(problem.tx_ctx, problem.horizon));
  SemialgebraicSet lifted = lift_set(problem.state_set, problem.tx_ctx);
  for (auto& g : lifted.inequalities) slab.inequalities.push_back(std::move(g));
  for (auto& h : lifted.equalities) slab.equalities.push_back(std::move(h));
  if (ball.mode != BallOption::None) {
    if (!problem.state_set.box_lo)
      throw std::invalid_argument("state ball option requires box bounds on the state set");
    const auto& lo = *problem.state_set.box_lo;
    const auto& hi = *problem.state_set.box_hi;
    std::vector<double> center{problem.horizon / 2};
    double r2 = problem.horizon * problem.horizon / 4;
    for (size_t i = 0; i < lo.size(); ++i) {
      center.push_back((lo[i] + hi[i]) / 2);
      r2 += (hi[i] - lo[i]) * (hi[i] - lo[i]) / 4;
    }
    double radius = ball.mode == BallOption::Auto ? std::sqrt(r2) : ball.radius;
    slab = with_ball(slab, center, radius);
  }
  return slab;
}

SemialgebraicSet make_initial(const PeakProblem& problem, const BallOption& ball) {
  SemialgebraicSet init = problem.initial_set;
  if (ball.mode != BallOption::None) {
    if (!init.box_lo)
      throw std::invalid_argument("initial ball option requires box bounds on the initial set");
    const auto& lo = *init.box_lo;
    const auto& hi = *init.box_hi;
    std::vector<double> center;
    double r2 = 0;
    for (size_t i = 0; i < lo.size(); ++i) {
      center.push_back((lo[i] + hi[i]) / 2);
      r2 += (hi[i] - lo[i]) * (hi[i] - lo[i]) / 4;
    }
    double radius = ball.mode == BallOption::Auto ? std::sqrt(r2) : ball.radius;
    init = with_ball(init, center, radius);
  }
  return init;
}

// gamma - v(0, x) as a linear expression over the state context.
LinearPolyExpr initial_expr(const PeakProblem& problem, SlotId gamma, const PolyVar& v) {
  const ContextPtr& sx = problem.state_ctx;
  LinearPolyExpr e;
  e.constant = Polynomial(sx);
  e.add_term(gamma, Polynomial::constant(sx, 1.0));
  for (int i = 0; i < v.count(); ++i) {
    const Monomial& mono = v.basis[i];
    if (mono.exps[0] != 0) continue;  // t^j with j >= 1 vanishes at t = 0
    Monomial sm;
    sm.exps.assign(mono.exps.begin() + 1, mono.exps.end());
    e.add_term(v.first + i, Polynomial::term(sx, sm, -1.0));
  }
  return e;
}

LinearPolyExpr objective_gap_expr(const PeakProblem& problem, const PolyVar& v) {
  LinearPolyExpr e = ProgramBuilder::expr_of(v);
  e.constant = e.constant - problem.objective.map_to(problem.tx_ctx);
  return e;
}

// floor((d - 1) / 2) clamped at zero; integer division truncates toward
// zero, so handle d = 0 explicitly.
int lie_shift(int f0_deg) { return f0_deg <= 0 ? 0 : (f0_deg - 1) / 2; }

// Truncation actually used for an assertion: the nominal hierarchy degree,
// raised to the smallest even degree that covers the asserted expression.
// A Gram certificate truncated below the expression's degree cannot
// represent its top coefficients at all — coefficient matching would force
// them to vanish, over-constraining the program instead of certifying it.
int covering_truncation(int nominal, const LinearPolyExpr& e) {
  int d = e.degree();
  return std::max(nominal, d + (d & 1));
}

BuiltProgram finalize(ProgramBuilder& builder, Method method, int k, SlotId gamma,
                      PolyVar v, std::vector<PolyVar> q,
                      std::vector<std::pair<double, double>> y_bounds) {
  BuiltProgram bp;
  bp.instance = builder.compile();
  bp.method = method;
  bp.k = k;
  bp.gamma_slot = gamma;
  bp.v = std::move(v);
  bp.q = std::move(q);
  bp.y_bounds = std::move(y_bounds);
  bp.row_count = static_cast<long>(bp.instance.rows.size());
  for (const auto& rec : bp.instance.recovery.assertions) {
    AssertionLedgerEntry entry;
    entry.label = rec.label;
    entry.truncation = rec.truncation;
    entry.rows = static_cast<long>(rec.rows.size());
    bp.ledger.push_back(std::move(entry));
  }
  for (const auto& gram : bp.instance.recovery.grams) {
    bp.ledger[gram.assertion].gram_sides.push_back(gram.side);
    bp.largest_psd_side = std::max(bp.largest_psd_side, gram.side);
  }
  for (const auto& em : bp.instance.recovery.eq_mults)
    bp.ledger[em.assertion].eq_mult_degrees.push_back(em.degree);
  return bp;
}

}  // namespace

BuiltProgram build_sum_of_rational(const PeakProblem& problem, int k,
                                   const BuildOptions& options) {
  if (k < 1) throw std::invalid_argument("degree k must be at least 1");
  problem.validate();
  const RationalDynamics& dyn = problem.dynamics;
  const ContextPtr& tx = problem.tx_ctx;
  const size_t L = dyn.terms.size();

  ProgramBuilder builder;
  SlotId gamma = builder.new_scalar("gamma");
  PolyVar v = builder.new_poly_var(tx, 2 * k, "v");
  std::vector<PolyVar> q;
  for (size_t l = 0; l < L; ++l)
    q.push_back(builder.new_poly_var(tx, 2 * k, "q" + std::to_string(l + 1)));

  SemialgebraicSet init = make_initial(problem, options.initial_ball);
  SemialgebraicSet slab = make_slab(problem, options.state_ball);

  LinearPolyExpr init_e = initial_expr(problem, gamma, v);
  builder.assert_wsos(init_e, init, covering_truncation(2 * k, init_e), "initial",
                      {{"mu0", Polynomial::constant(problem.state_ctx, 1.0)}});
  LinearPolyExpr obj_e = objective_gap_expr(problem, v);
  builder.assert_wsos(obj_e, slab, covering_truncation(2 * k, obj_e), "objective",
                      {{"mu_p", Polynomial::constant(tx, 1.0)}});

  LinearPolyExpr lie;
  lie.constant = Polynomial(tx);
  for (int i = 0; i < v.count(); ++i) {
    Polynomial mono = Polynomial::term(tx, v.basis[i], 1.0);
    lie.add_term(v.first + i, -lie_f0(dyn, mono));
  }
  for (size_t l = 0; l < L; ++l)
    for (int i = 0; i < q[l].count(); ++i)
      lie.add_term(q[l].first + i, Polynomial::term(tx, q[l].basis[i], -1.0));
  int lie_trunc = covering_truncation(2 * k + 2 * lie_shift(f0_degree(dyn)), lie);
  builder.assert_wsos(lie, slab, lie_trunc, "lie",
                      {{"mu", Polynomial::constant(tx, 1.0)}});

  for (size_t l = 0; l < L; ++l) {
    LinearPolyExpr e;
    e.constant = Polynomial(tx);
    const Polynomial& D = dyn.terms[l].denominator;
    for (int i = 0; i < q[l].count(); ++i)
      e.add_term(q[l].first + i, D * Polynomial::term(tx, q[l].basis[i], 1.0));
    for (int i = 0; i < v.count(); ++i) {
      Polynomial mono = Polynomial::term(tx, v.basis[i], 1.0);
      e.add_term(v.first + i, -numerator_dot_grad(dyn, l, mono));
    }
    int trunc = covering_truncation(2 * k + 2 * (epsilon_degree(dyn, l) / 2), e);
    builder.assert_wsos(e, slab, trunc, "rational" + std::to_string(l + 1),
                        {{"nu_" + std::to_string(l + 1), Polynomial::constant(tx, 1.0)}});
  }

  builder.minimize({{gamma, 1.0}});
  return finalize(builder, Method::SumOfRational, k, gamma, std::move(v),
                  std::move(q), {});
}

BuiltProgram build_cleared(const PeakProblem& problem, int k, const BuildOptions& options) {
  if (k < 1) throw std::invalid_argument("degree k must be at least 1");
  problem.validate();
  const RationalDynamics& dyn = problem.dynamics;
  const size_t L = dyn.terms.size();
  if (L == 0) {
    // Common denominator is 1; the program coincides with the plain one.
    BuiltProgram bp = build_sum_of_rational(problem, k, options);
    bp.method = Method::Cleared;
    return bp;
  }
  const ContextPtr& tx = problem.tx_ctx;

  ProgramBuilder builder;
  SlotId gamma = builder.new_scalar("gamma");
  PolyVar v = builder.new_poly_var(tx, 2 * k, "v");

  SemialgebraicSet init = make_initial(problem, options.initial_ball);
  SemialgebraicSet slab = make_slab(problem, options.state_ball);

  LinearPolyExpr init_e = initial_expr(problem, gamma, v);
  builder.assert_wsos(init_e, init, covering_truncation(2 * k, init_e), "initial",
                      {{"mu0", Polynomial::constant(problem.state_ctx, 1.0)}});
  LinearPolyExpr obj_e = objective_gap_expr(problem, v);
  builder.assert_wsos(obj_e, slab, covering_truncation(2 * k, obj_e), "objective",
                      {{"mu_p", Polynomial::constant(tx, 1.0)}});

  auto [phi, phis] = clearing_polys(dyn);
  LinearPolyExpr lie;
  lie.constant = Polynomial(tx);
  for (int i = 0; i < v.count(); ++i) {
    Polynomial mono = Polynomial::term(tx, v.basis[i], 1.0);
    Polynomial w = phi * lie_f0(dyn, mono);
    for (size_t l = 0; l < L; ++l) w = w + phis[l] * numerator_dot_grad(dyn, l, mono);
    lie.add_term(v.first + i, -w);
  }
  std::vector<std::pair<std::string, Polynomial>> measures;
  measures.emplace_back("mu", phi);
  for (size_t l = 0; l < L; ++l)
    measures.emplace_back("nu_" + std::to_string(l + 1), phis[l]);
  // The cleared certificate keeps sigma_0 at the nominal truncation and caps
  // every inequality multiplier at that same degree, so the products reach
  // the expression's top coefficients without raising the Gram degree.
  int trunc = 2 * k + 2 * lie_shift(phi.degree());
  builder.assert_wsos(lie, slab, trunc, "lie", std::move(measures),
                      ProgramBuilder::MultiplierCap::Uniform);

  builder.minimize({{gamma, 1.0}});
  return finalize(builder, Method::Cleared, k, gamma, std::move(v), {}, {});
}

BuiltProgram build_lifted(const PeakProblem& problem, int k, const BuildOptions& options) {
  if (k < 1) throw std::invalid_argument("degree k must be at least 1");
  problem.validate();
  const RationalDynamics& dyn = problem.dynamics;
  const size_t L = dyn.terms.size();
  if (L == 0) {
    BuiltProgram bp = build_sum_of_rational(problem, k, options);
    bp.method = Method::Lifted;
    return bp;
  }
  const ContextPtr& tx = problem.tx_ctx;

  // reciprocal-variable bounds
  std::vector<std::pair<double, double>> yb = options.y_bounds;
  if (!yb.empty() && yb.size() != L)
    throw std::invalid_argument("y_bounds must list one interval per rational term");
  if (yb.empty()) {
    for (size_t l = 0; l < L; ++l) {
      DenominatorCheck chk =
          certify_denominator_positivity(problem, l, options.a5_grid_resolution, false);
      if (chk.grid_min <= 0)
        throw std::runtime_error(
            "denominator " + std::to_string(l + 1) +
            " is not positive on the sample grid; provide explicit y bounds");
      yb.emplace_back((1.0 / chk.grid_max) / 1.1, (1.0 / chk.grid_min) * 1.1);
    }
  }

  std::vector<std::string> names = tx->names();
  for (size_t l = 0; l < L; ++l) {
    std::string name = "y" + std::to_string(l + 1);
    if (std::find(names.begin(), names.end(), name) != names.end())
      throw std::invalid_argument("variable name " + name +
                                  " collides with a reciprocal-lift variable");
    names.push_back(name);
  }
  ContextPtr txy = make_context(names);
  const int ny_base = tx->size();

  ProgramBuilder builder;
  SlotId gamma = builder.new_scalar("gamma");
  PolyVar v = builder.new_poly_var(tx, 2 * k, "v");

  SemialgebraicSet init = make_initial(problem, options.initial_ball);
  SemialgebraicSet slab = make_slab(problem, options.state_ball);

  SemialgebraicSet omega;
  omega.ctx = txy;
  for (const Polynomial& g : slab.inequalities) omega.inequalities.push_back(g.map_to(txy));
  if (options.lifted_y_box)
    for (size_t l = 0; l < L; ++l) {
      Polynomial y = Polynomial::variable(txy, ny_base + static_cast<int>(l));
      omega.inequalities.push_back((y - Polynomial::constant(txy, yb[l].first)) *
                                   (Polynomial::constant(txy, yb[l].second) - y));
    }
  for (const Polynomial& h : slab.equalities) omega.equalities.push_back(h.map_to(txy));
  for (size_t l = 0; l < L; ++l) {
    Polynomial y = Polynomial::variable(txy, ny_base + static_cast<int>(l));
    omega.equalities.push_back(y * dyn.terms[l].denominator.map_to(txy) -
                               Polynomial::constant(txy, 1.0));
  }

  LinearPolyExpr init_e = initial_expr(problem, gamma, v);
  builder.assert_wsos(init_e, init, covering_truncation(2 * k, init_e), "initial",
                      {{"mu0", Polynomial::constant(problem.state_ctx, 1.0)}});
  LinearPolyExpr obj_e = objective_gap_expr(problem, v);
  builder.assert_wsos(obj_e, slab, covering_truncation(2 * k, obj_e), "objective",
                      {{"mu_p", Polynomial::constant(tx, 1.0)}});

  LinearPolyExpr lie;
  lie.constant = Polynomial(txy);
  for (int i = 0; i < v.count(); ++i) {
    Polynomial mono = Polynomial::term(tx, v.basis[i], 1.0);
    Polynomial w = lie_f0(dyn, mono).map_to(txy);
    for (size_t l = 0; l < L; ++l) {
      Polynomial y = Polynomial::variable(txy, ny_base + static_cast<int>(l));
      w = w + y * numerator_dot_grad(dyn, l, mono).map_to(txy);
    }
    lie.add_term(v.first + i, -w);
  }
  std::vector<std::pair<std::string, Polynomial>> measures;
  measures.emplace_back("mu", Polynomial::constant(txy, 1.0));
  for (size_t l = 0; l < L; ++l)
    measures.emplace_back("nu_" + std::to_string(l + 1),
                          Polynomial::variable(txy, ny_base + static_cast<int>(l)));
  // Same multiplier policy as the cleared program: uniform caps at the
  // nominal truncation, products allowed past it.
  int trunc = 2 * k + 2 * (lift_degree_Y(dyn) / 2);
  builder.assert_wsos(lie, omega, trunc, "lie", std::move(measures),
                      ProgramBuilder::MultiplierCap::Uniform);

  builder.minimize({{gamma, 1.0}});
  return finalize(builder, Method::Lifted, k, gamma, std::move(v), {},
                  std::move(yb));
}

BuiltProgram build_program(const PeakProblem& problem, Method method, int k,
                           const BuildOptions& options) {
  switch (method) {
    case Method::SumOfRational: return build_sum_of_rational(problem, k, options);
    case Method::Cleared: return build_cleared(problem, k, options);
    case Method::Lifted: return build_lifted(problem, k, options);
  }
  throw std::invalid_argument("unknown method");
}

int expected_largest_side(const PeakProblem& problem, Method method, int k) {
  const RationalDynamics& dyn = problem.dynamics;
  const int n = dyn.state_dim();
  const size_t L = dyn.terms.size();
  if (L == 0) method = Method::SumOfRational;
  // sigma_0 half-degree of the objective-gap assertion over (t, x): the
  // nominal k raised to cover v - p.
  const int half_obj = std::max(k, (problem.objective.degree() + 1) / 2);
  const int df = f0_degree(dyn);
  switch (method) {
    case Method::SumOfRational: {
      // Lie expression degree max(2k, 2k - 1 + deg f0); covering shift is
      // ceil((df - 1)/2) = floor(df/2). Rational assertion l has expression
      // degree exactly 2k + eps_l, so its covering shift is ceil(eps_l/2).
      int shift = df / 2;
      for (size_t l = 0; l < L; ++l)
        shift = std::max(shift, (epsilon_degree(dyn, l) + 1) / 2);
      int half = std::max(k + shift, half_obj);
      return static_cast<int>(binomial(n + 1 + half, n + 1));
    }
    case Method::Cleared: {
      // Uniform multiplier caps: every Gram of the cleared Lie assertion,
      // sigma_0 included, has half-degree k + floor((deg Phi - 1)/2).
      auto [phi, phis] = clearing_polys(dyn);
      (void)phis;
      int half = std::max(k + lie_shift(phi.degree()), half_obj);
      return static_cast<int>(binomial(n + 1 + half, n + 1));
    }
    case Method::Lifted: {
      // Uniform multiplier caps over the lifted space: half-degree
      // k + floor(Y/2) in n+1+L variables.
      int nl = n + 1 + static_cast<int>(L);
      int half = k + lift_degree_Y(dyn) / 2;
      int lifted_side = static_cast<int>(binomial(nl + half, nl));
      int obj_side = static_cast<int>(binomial(n + 1 + half_obj, n + 1));
      return std::max(lifted_side, obj_side);
    }
  }
  return 0;
}

}  // namespace peakbound

#include "peakbound/sos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace peakbound {

static const double kSqrt2 = std::sqrt(2.0);

void LinearPolyExpr::add_term(SlotId slot, Polynomial weight) {
  if (weight.is_zero()) return;
  terms.emplace_back(slot, std::move(weight));
}

LinearPolyExpr LinearPolyExpr::operator+(const LinearPolyExpr& o) const {
  LinearPolyExpr r = *this;
  r.constant = r.constant + o.constant;
  for (const auto& [s, w] : o.terms) r.add_term(s, w);
  return r;
}

LinearPolyExpr LinearPolyExpr::operator-(const LinearPolyExpr& o) const {
  return *this + o.scaled(-1.0);
}

LinearPolyExpr LinearPolyExpr::scaled(double f) const {
  LinearPolyExpr r;
  r.constant = constant.scaled(f);
  for (const auto& [s, w] : terms) r.add_term(s, w.scaled(f));
  return r;
}

int LinearPolyExpr::degree() const {
  int d = constant.degree();
  for (const auto& [s, w] : terms) d = std::max(d, w.degree());
  return d;
}

Polynomial LinearPolyExpr::at(const std::vector<double>& slot_values) const {
  Polynomial r = constant;
  for (const auto& [s, w] : terms) {
    if (s < 0 || s >= static_cast<int>(slot_values.size()))
      throw std::out_of_range("LinearPolyExpr::at: slot out of range");
    r = r + w.scaled(slot_values[s]);
  }
  return r;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalTrouble: return "NumericalTrouble";
  }
  return "?";
}

long SDPInstance::cols() const {
  long n = free_count + nonneg_count;
  for (int s : psd_sides) n += long(s) * (s + 1) / 2;
  return n;
}

std::string SDPInstance::fingerprint() const {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  os << "free " << free_count << " nonneg " << nonneg_count << " psd";
  for (int s : psd_sides) os << " " << s;
  os << "\nc";
  for (double v : c) {
    os << " ";
    num(v);
  }
  os << "\n";
  for (const auto& row : rows) {
    os << "row";
    for (const auto& [col, v] : row.entries) {
      os << " " << col << ":";
      num(v);
    }
    os << " = ";
    num(row.rhs);
    os << "\n";
  }
  return os.str();
}

SlotId ProgramBuilder::new_scalar(const std::string& name) {
  slot_names_.push_back(name);
  return static_cast<SlotId>(slot_names_.size()) - 1;
}

PolyVar ProgramBuilder::new_poly_var(const ContextPtr& ctx, int degree, const std::string& name) {
  if (degree < 0) throw std::invalid_argument("new_poly_var: negative degree");
  PolyVar v;
  v.first = static_cast<SlotId>(slot_names_.size());
  v.degree = degree;
  v.ctx = ctx;
  v.basis = monomial_basis(ctx->size(), degree);
  for (size_t i = 0; i < v.basis.size(); ++i)
    slot_names_.push_back(name + "[" + std::to_string(i) + "]");
  return v;
}

LinearPolyExpr ProgramBuilder::expr_of(const PolyVar& v) {
  LinearPolyExpr e;
  e.constant = Polynomial(v.ctx);
  for (int i = 0; i < v.count(); ++i)
    e.add_term(v.first + i, Polynomial::term(v.ctx, v.basis[i], 1.0));
  return e;
}

int ProgramBuilder::assert_wsos(const LinearPolyExpr& expr, const SemialgebraicSet& set,
                                int truncation, const std::string& label,
                                std::vector<std::pair<std::string, Polynomial>> measures,
                                MultiplierCap cap) {
  if (truncation < 0 || truncation % 2 != 0)
    throw std::invalid_argument("assert_wsos: truncation degree must be even and nonnegative");
  if (!expr.constant.context() || !expr.constant.context()->same_as(*set.ctx))
    throw std::invalid_argument("assert_wsos: expression/set context mismatch");
  for (const auto& [s, w] : expr.terms) {
    if (s < 0 || s >= slot_count()) throw std::invalid_argument("assert_wsos: unknown slot");
    if (!w.context()->same_as(*set.ctx))
      throw std::invalid_argument("assert_wsos: weight context mismatch");
  }
  assertions_.push_back({expr, set, truncation, label, std::move(measures), cap});
  return static_cast<int>(assertions_.size()) - 1;
}

void ProgramBuilder::add_lower_bound_row(const std::vector<std::pair<SlotId, double>>& combo,
                                         double rhs) {
  extra_rows_.push_back({combo, rhs, true});
}

void ProgramBuilder::add_equality_row(const std::vector<std::pair<SlotId, double>>& combo,
                                      double rhs) {
  extra_rows_.push_back({combo, rhs, false});
}

void ProgramBuilder::minimize(const std::vector<std::pair<SlotId, double>>& objective) {
  objective_ = objective;
}

namespace {

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  for (size_t i = 0; i < r.exps.size(); ++i) {
    int e = int(r.exps[i]) + int(b.exps[i]);
    if (e > 255) throw std::overflow_error("monomial exponent exceeds 255");
    r.exps[i] = static_cast<std::uint8_t>(e);
  }
  return r;
}

// Per-block description used while compiling an assertion.
struct GramPlan {
  int ineq_index;  // -1 for sigma_0
  Polynomial g;    // multiplier weight (1 for sigma_0)
  int half_degree;
  int side;
  std::vector<Monomial> basis;
};

// Multiplier half-degree so that deg(sigma_j * g_j) <= truncation.
int multiplier_half_degree(int truncation, int g_degree) {
  return (truncation - g_degree) / 2;  // floor for nonnegative operands
}

}  // namespace

SDPInstance ProgramBuilder::compile() const {
  SDPInstance out;
  out.recovery.decision_slots = slot_count();
  out.recovery.slot_names = slot_names_;

  // --- plan gram blocks and equality multipliers per assertion ---
  std::vector<std::vector<GramPlan>> plans(assertions_.size());
  for (size_t a = 0; a < assertions_.size(); ++a) {
    const Assertion& as = assertions_[a];
    const int nvars = as.set.ctx->size();
    const int d = as.truncation / 2;
    GramPlan sigma0;
    sigma0.ineq_index = -1;
    sigma0.g = Polynomial::constant(as.set.ctx, 1.0);
    sigma0.half_degree = d;
    sigma0.side = static_cast<int>(binomial(nvars + d, nvars));
    sigma0.basis = monomial_basis(nvars, d);
    plans[a].push_back(std::move(sigma0));
    for (size_t j = 0; j < as.set.inequalities.size(); ++j) {
      const Polynomial& g = as.set.inequalities[j];
      if (g.is_zero()) throw std::invalid_argument("assertion set has a zero inequality");
      int hd = as.cap == MultiplierCap::Uniform
                   ? as.truncation / 2
                   : multiplier_half_degree(as.truncation, g.degree());
      if (hd < 0) continue;  // constraint unusable at this truncation
      GramPlan p;
      p.ineq_index = static_cast<int>(j);
      p.g = g;
      p.half_degree = hd;
      p.side = static_cast<int>(binomial(nvars + hd, nvars));
      p.basis = monomial_basis(nvars, hd);
      plans[a].push_back(std::move(p));
    }
  }

  // --- column layout: decision slots, then equality multipliers (free),
  // then nonnegative entries, then svec'd PSD blocks ---
  long col = slot_count();
  for (size_t a = 0; a < assertions_.size(); ++a) {
    const Assertion& as = assertions_[a];
    for (size_t e = 0; e < as.set.equalities.size(); ++e) {
      const Polynomial& h = as.set.equalities[e];
      if (h.is_zero()) throw std::invalid_argument("assertion set has a zero equality");
      int deg = as.truncation - h.degree();
      if (deg < 0) continue;
      EqMultInfo info;
      info.assertion = static_cast<int>(a);
      info.eq_index = static_cast<int>(e);
      info.col = col;
      info.degree = deg;
      info.basis = monomial_basis(as.set.ctx->size(), deg);
      col += static_cast<long>(info.basis.size());
      out.recovery.eq_mults.push_back(std::move(info));
    }
  }
  out.free_count = col;

  long nonneg = 0;
  for (size_t a = 0; a < assertions_.size(); ++a) {
    for (auto& plan : plans[a]) {
      if (plan.side != 1) continue;
      GramBlockInfo info;
      info.assertion = static_cast<int>(a);
      info.ineq_index = plan.ineq_index;
      info.nonneg = true;
      info.block_index = static_cast<int>(nonneg);
      info.side = 1;
      info.basis = plan.basis;
      out.recovery.grams.push_back(std::move(info));
      ++nonneg;
    }
  }
  long slack_base = nonneg;
  for (const auto& er : extra_rows_)
    if (er.with_slack) ++nonneg;
  out.nonneg_count = nonneg;

  long psd_col = out.free_count + out.nonneg_count;
  for (size_t a = 0; a < assertions_.size(); ++a) {
    for (auto& plan : plans[a]) {
      if (plan.side == 1) continue;
      GramBlockInfo info;
      info.assertion = static_cast<int>(a);
      info.ineq_index = plan.ineq_index;
      info.nonneg = false;
      info.block_index = static_cast<int>(out.psd_sides.size());
      info.col = psd_col;
      info.side = plan.side;
      info.basis = plan.basis;
      out.psd_sides.push_back(plan.side);
      out.psd_offsets.push_back(psd_col);
      psd_col += long(plan.side) * (plan.side + 1) / 2;
      out.recovery.grams.push_back(std::move(info));
    }
  }
  // fill nonneg gram columns now that the segment start is known
  for (auto& g : out.recovery.grams)
    if (g.nonneg) g.col = out.free_count + g.block_index;

  const long total_cols = psd_col;
  out.c.assign(total_cols, 0.0);
  for (const auto& [slot, w] : objective_) {
    if (slot < 0 || slot >= slot_count()) throw std::invalid_argument("objective slot out of range");
    out.c[slot] += w;
  }

  // --- rows: coefficient matching per assertion ---
  for (size_t a = 0; a < assertions_.size(); ++a) {
    const Assertion& as = assertions_[a];
    const int nvars = as.set.ctx->size();

    // Support maps: monomial -> list of (column, coefficient of that
    // column's variable in the expansion of sigma/lambda contributions).
    using Support = std::map<Monomial, std::vector<std::pair<long, double>>, GrlexLess>;
    Support support;

    for (const auto& gram : out.recovery.grams) {
      if (gram.assertion != static_cast<int>(a)) continue;
      const Polynomial& g =
          gram.ineq_index < 0 ? Polynomial::constant(as.set.ctx, 1.0)
                              : as.set.inequalities[gram.ineq_index];
      const auto& basis = gram.basis;
      const int side = gram.side;
      long k = 0;
      for (int i = 0; i < side; ++i) {
        for (int j = i; j < side; ++j, ++k) {
          Monomial mm = mono_mul(basis[i], basis[j]);
          double scale = (i == j) ? 1.0 : kSqrt2;
          for (const auto& [gm, gc] : g.terms())
            support[mono_mul(mm, gm)].emplace_back(gram.col + k, scale * gc);
        }
      }
    }
    for (const auto& em : out.recovery.eq_mults) {
      if (em.assertion != static_cast<int>(a)) continue;
      const Polynomial& h = as.set.equalities[em.eq_index];
      for (size_t bi = 0; bi < em.basis.size(); ++bi)
        for (const auto& [hm, hc] : h.terms())
          support[mono_mul(em.basis[bi], hm)].emplace_back(em.col + long(bi), hc);
    }

    AssertionRecovery rec;
    rec.label = as.label;
    rec.set = as.set;
    rec.truncation = as.truncation;
    rec.expr = as.expr;
    rec.measures = as.measures;

    // Match every monomial the two sides can produce. Multiplier-times-
    // inequality products can exceed the truncation, so take the highest
    // degree present in the support map (grlex order: last key is maximal).
    int match_degree = std::max(as.truncation, as.expr.degree());
    if (!support.empty())
      match_degree = std::max(match_degree, support.rbegin()->first.degree());
    for (const Monomial& alpha : monomial_basis(nvars, match_degree)) {
      std::map<long, double> entries;
      for (const auto& [slot, w] : as.expr.terms) {
        double v = w.coeff(alpha);
        if (v != 0.0) entries[slot] += v;
      }
      auto it = support.find(alpha);
      if (it != support.end())
        for (const auto& [column, v] : it->second) entries[column] -= v;
      double rhs = -as.expr.constant.coeff(alpha);
      for (auto e = entries.begin(); e != entries.end();)
        e = (e->second == 0.0) ? entries.erase(e) : std::next(e);
      if (entries.empty() && rhs == 0.0) continue;
      SDPInstance::Row row;
      row.entries.assign(entries.begin(), entries.end());
      row.rhs = rhs;
      rec.row_monomials.push_back(alpha);
      rec.rows.push_back(static_cast<long>(out.rows.size()));
      out.rows.push_back(std::move(row));
    }
    out.recovery.assertions.push_back(std::move(rec));
  }

  // --- plain scalar rows ---
  long slack = slack_base;
  for (const auto& er : extra_rows_) {
    std::map<long, double> entries;
    for (const auto& [slot, w] : er.combo) {
      if (slot < 0 || slot >= slot_count()) throw std::invalid_argument("row slot out of range");
      entries[slot] += w;
    }
    if (er.with_slack) entries[out.free_count + slack++] = -1.0;
    SDPInstance::Row row;
    row.entries.assign(entries.begin(), entries.end());
    row.rhs = er.rhs;
    out.rows.push_back(std::move(row));
  }

  return out;
}

CertificateReport verify_certificate(const SDPInstance& inst, const SDPSolution& sol) {
  CertificateReport report;
  report.min_gram_eigenvalue = std::numeric_limits<double>::infinity();
  if (static_cast<long>(sol.z.size()) != inst.cols())
    throw std::invalid_argument("verify_certificate: solution size mismatch");

  for (size_t a = 0; a < inst.recovery.assertions.size(); ++a) {
    const AssertionRecovery& rec = inst.recovery.assertions[a];
    Polynomial built(rec.set.ctx);

    for (const auto& gram : inst.recovery.grams) {
      if (gram.assertion != static_cast<int>(a)) continue;
      const Polynomial& g =
          gram.ineq_index < 0 ? Polynomial::constant(rec.set.ctx, 1.0)
                              : rec.set.inequalities[gram.ineq_index];
      const int side = gram.side;
      Eigen::MatrixXd Q(side, side);
      if (gram.nonneg) {
        Q(0, 0) = sol.z[gram.col];
      } else {
        long k = 0;
        for (int i = 0; i < side; ++i)
          for (int j = i; j < side; ++j, ++k) {
            double v = sol.z[gram.col + k];
            Q(i, j) = Q(j, i) = (i == j) ? v : v / kSqrt2;
          }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
      report.min_gram_eigenvalue =
          std::min(report.min_gram_eigenvalue, es.eigenvalues().minCoeff());
      Polynomial contrib(rec.set.ctx);
      for (int i = 0; i < side; ++i)
        for (int j = i; j < side; ++j) {
          double q = Q(i, j) * (i == j ? 1.0 : 2.0);
          if (q == 0.0) continue;
          contrib.add_term(mono_mul(gram.basis[i], gram.basis[j]), q);
        }
      built = built + contrib * g;
    }
    for (const auto& em : inst.recovery.eq_mults) {
      if (em.assertion != static_cast<int>(a)) continue;
      Polynomial lambda(rec.set.ctx);
      for (size_t bi = 0; bi < em.basis.size(); ++bi)
        lambda.add_term(em.basis[bi], sol.z[em.col + long(bi)]);
      built = built + lambda * rec.set.equalities[em.eq_index];
    }

    std::vector<double> slots(sol.z.begin(), sol.z.begin() + inst.recovery.decision_slots);
    Polynomial target = rec.expr.at(slots);
    Polynomial resid = target - built;
    double mx = 0;
    for (const auto& [m, cval] : resid.terms()) mx = std::max(mx, std::abs(cval));
    report.per_assertion_residual.push_back(mx);
    report.max_coeff_residual = std::max(report.max_coeff_residual, mx);
  }
  if (inst.recovery.assertions.empty()) report.min_gram_eigenvalue = 0;
  return report;
}

}  // namespace peakbound

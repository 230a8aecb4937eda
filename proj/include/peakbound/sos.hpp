#pragma once

#include <string>
#include <utility>
#include <vector>

#include "peakbound/semialg.hpp"

namespace peakbound {

// Index of a scalar decision variable ("slot") in a program.
using SlotId = int;

// Polynomial-valued expression that is affine in the decision slots:
// constant + sum_k weight_k * slot_k, all weights in one context.
struct LinearPolyExpr {
  Polynomial constant;
  std::vector<std::pair<SlotId, Polynomial>> terms;

  void add_term(SlotId slot, Polynomial weight);
  LinearPolyExpr operator+(const LinearPolyExpr& o) const;
  LinearPolyExpr operator-(const LinearPolyExpr& o) const;
  LinearPolyExpr scaled(double f) const;
  // Structural degree: max over constant and weight polynomials.
  int degree() const;
  // Evaluate the polynomial at fixed slot values.
  Polynomial at(const std::vector<double>& slot_values) const;
};

// Polynomial decision variable: one slot per monomial of the basis, in
// graded-lex order.
struct PolyVar {
  SlotId first = -1;
  int degree = 0;
  ContextPtr ctx;
  std::vector<Monomial> basis;

  int count() const { return static_cast<int>(basis.size()); }
};

enum class SolveStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  IterationLimit,
  NumericalTrouble,
};

const char* to_string(SolveStatus s);

// Primal-dual solution in the instance's column layout.
struct SDPSolution {
  SolveStatus status = SolveStatus::NumericalTrouble;
  std::vector<double> z;  // primal variables
  std::vector<double> y;  // equality-row duals
  std::vector<double> s;  // dual slack
  double primal_obj = 0;
  double dual_obj = 0;
  double gap = 0;
  double primal_res = 0;
  double dual_res = 0;
  int iterations = 0;
  std::string message;
};

// --- recovery metadata kept alongside the compiled SDP -----------------

// One Gram block: sigma_0 (ineq_index == -1) or the multiplier of
// inequality `ineq_index`. Side-1 blocks are stored as a single
// nonnegative column instead of a PSD block.
struct GramBlockInfo {
  int assertion = -1;
  int ineq_index = -1;
  bool nonneg = false;
  int block_index = -1;  // index into psd_sides, or nonneg slot index
  long col = -1;         // first column (svec layout for PSD)
  int side = 0;
  std::vector<Monomial> basis;
};

// Free-sign polynomial multiplier attached to an equality constraint.
struct EqMultInfo {
  int assertion = -1;
  int eq_index = -1;
  long col = -1;  // first free column
  int degree = 0;
  std::vector<Monomial> basis;
};

struct AssertionRecovery {
  std::string label;
  SemialgebraicSet set;
  int truncation = 0;  // 2d
  LinearPolyExpr expr;
  std::vector<Monomial> row_monomials;
  std::vector<long> rows;  // instance row ids, parallel to row_monomials
  // Dual-side interpretation: linear functionals of the row duals, each
  // giving the mass of a named measure.
  std::vector<std::pair<std::string, Polynomial>> measures;
};

struct RecoveryMap {
  long decision_slots = 0;
  std::vector<std::string> slot_names;
  std::vector<GramBlockInfo> grams;
  std::vector<EqMultInfo> eq_mults;
  std::vector<AssertionRecovery> assertions;
};

// Conic program  min c'z  s.t.  rows: a_i'z = rhs_i,  z in
// R^free x R+^nonneg x PSD(s_1) x ... (PSD blocks in scaled svec
// coordinates: off-diagonal entries carry a factor sqrt(2), so the
// Euclidean inner product of svec vectors equals the Frobenius one).
struct SDPInstance {
  long free_count = 0;
  long nonneg_count = 0;
  std::vector<int> psd_sides;
  std::vector<long> psd_offsets;  // first column of each PSD block

  std::vector<double> c;
  struct Row {
    std::vector<std::pair<long, double>> entries;  // sorted by column
    double rhs = 0;
  };
  std::vector<Row> rows;
  RecoveryMap recovery;

  long cols() const;
  long nonneg_begin() const { return free_count; }
  // Deterministic serialization used by tests and the SDPA writer.
  std::string fingerprint() const;
};

// Builder collecting decision variables, weighted-SOS membership
// assertions, plain scalar rows, and the objective; compile() lowers
// everything to one SDPInstance by coefficient matching.
class ProgramBuilder {
 public:
  SlotId new_scalar(const std::string& name);
  PolyVar new_poly_var(const ContextPtr& ctx, int degree, const std::string& name);
  // sum_beta slot_beta * monomial_beta as a LinearPolyExpr.
  static LinearPolyExpr expr_of(const PolyVar& v);

  // How inequality-multiplier degrees are capped inside a truncated
  // certificate. Residual keeps each product sigma_j * g_j within the
  // truncation (deg sigma_j <= truncation - deg g_j); Uniform caps every
  // sigma_j at the truncation itself, letting products exceed it —
  // coefficient matching then extends over the full product support.
  enum class MultiplierCap { Residual, Uniform };

  // Assert expr in the truncated weighted-SOS cone of `set` at the given
  // (even) truncation degree. Returns the assertion index.
  int assert_wsos(const LinearPolyExpr& expr, const SemialgebraicSet& set, int truncation,
                  const std::string& label,
                  std::vector<std::pair<std::string, Polynomial>> measures = {},
                  MultiplierCap cap = MultiplierCap::Residual);

  // combo >= rhs (a nonnegative slack column is created).
  void add_lower_bound_row(const std::vector<std::pair<SlotId, double>>& combo, double rhs);
  // combo == rhs.
  void add_equality_row(const std::vector<std::pair<SlotId, double>>& combo, double rhs);

  void minimize(const std::vector<std::pair<SlotId, double>>& objective);

  int slot_count() const { return static_cast<int>(slot_names_.size()); }
  SDPInstance compile() const;

 private:
  struct Assertion {
    LinearPolyExpr expr;
    SemialgebraicSet set;
    int truncation;
    std::string label;
    std::vector<std::pair<std::string, Polynomial>> measures;
    MultiplierCap cap = MultiplierCap::Residual;
  };
  struct ExtraRow {
    std::vector<std::pair<SlotId, double>> combo;
    double rhs;
    bool with_slack;
  };

  std::vector<std::string> slot_names_;
  std::vector<Assertion> assertions_;
  std::vector<ExtraRow> extra_rows_;
  std::vector<std::pair<SlotId, double>> objective_;
};

// Rebuilds every assertion's certificate from a solution and measures how
// well sigma_0 + sum sigma_j g_j + sum lambda_i h_i reproduces the asserted
// expression.
struct CertificateReport {
  double max_coeff_residual = 0;
  double min_gram_eigenvalue = 0;
  std::vector<double> per_assertion_residual;
  bool verified(double coeff_tol, double eig_tol) const {
    return max_coeff_residual <= coeff_tol && min_gram_eigenvalue >= -eig_tol;
  }
};
CertificateReport verify_certificate(const SDPInstance& inst, const SDPSolution& sol);

}  // namespace peakbound

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "peakbound/sos.hpp"
#include "peakbound/system.hpp"

namespace peakbound {

enum class Method { SumOfRational, Cleared, Lifted };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

// Optional ball constraint appended to a set description. Auto derives the
// radius from the recorded bounding box (and the time slab for the state
// set); an explicit radius keeps the same center.
struct BallOption {
  enum Mode { None, Auto, Explicit } mode = None;
  double radius = 0;
};

struct BuildOptions {
  BallOption state_ball;
  BallOption initial_ball;
  int a5_grid_resolution = 21;
  // Per-term [lo, hi] for the reciprocal variables of the lifted program.
  // Empty: derived from a grid scan of each denominator.
  std::vector<std::pair<double, double>> y_bounds;
  // Append box inequalities for the reciprocal variables to the lifted
  // support set. The equalities y_l D_l = 1 already pin the reciprocals;
  // the box is a conditioning aid that enlarges the certificate cone (and
  // can therefore lower the computed bound).
  bool lifted_y_box = true;
};

struct AssertionLedgerEntry {
  std::string label;
  int truncation = 0;
  std::vector<int> gram_sides;       // sigma_0 first, then per usable inequality
  std::vector<int> eq_mult_degrees;  // one per usable equality
  long rows = 0;
};

struct BuiltProgram {
  SDPInstance instance;
  Method method = Method::SumOfRational;
  int k = 1;
  int largest_psd_side = 0;
  long row_count = 0;
  std::vector<AssertionLedgerEntry> ledger;

  SlotId gamma_slot = -1;
  PolyVar v;                // value function coefficient slots (over [t, x])
  std::vector<PolyVar> q;   // one per rational term (sum-of-rational only)
  std::vector<std::pair<double, double>> y_bounds;  // lifted only
};

BuiltProgram build_sum_of_rational(const PeakProblem& problem, int k,
                                   const BuildOptions& options = {});
BuiltProgram build_cleared(const PeakProblem& problem, int k,
                           const BuildOptions& options = {});
BuiltProgram build_lifted(const PeakProblem& problem, int k,
                          const BuildOptions& options = {});
BuiltProgram build_program(const PeakProblem& problem, Method method, int k,
                           const BuildOptions& options = {});

// Side of the dominant Gram block each method must produce at degree k,
// from the variable/degree count alone. Cross-checked against compiled
// instances in the report tables.
int expected_largest_side(const PeakProblem& problem, Method method, int k);

}  // namespace peakbound

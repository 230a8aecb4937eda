#pragma once

#include "peakbound/sos.hpp"

namespace peakbound {

struct SolveSettings {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iters = 200;
  double step_frac = 0.98;  // fraction of the step to the cone boundary
  bool verbose = false;
};

// Primal-dual interior-point solve of the conic program in `inst`
// (Nesterov-Todd scaling, Mehrotra predictor-corrector, dense per-component
// Schur complement). Deterministic for fixed inputs and settings.
SDPSolution solve_sdp(const SDPInstance& inst, const SolveSettings& settings = {});

// Dual-side reading of a solved instance: the equality-row duals of each
// assertion form a truncated pseudo-moment sequence of its attached
// measures. Mass is the pairing of the measure's functional polynomial with
// those duals; first moments are reported for unit functionals.
struct MeasureMoments {
  std::string name;
  double mass = 0;
  bool has_first_moments = false;
  std::vector<std::string> variable_names;
  std::vector<double> first_moments;
};
struct MomentReport {
  std::vector<MeasureMoments> measures;
};
MomentReport extract_duals(const SDPInstance& inst, const SDPSolution& sol);

}  // namespace peakbound

#pragma once

#include <vector>

#include "peakbound/system.hpp"

namespace peakbound {

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // one point per time entry
  bool escaped = false;
  double escape_time = 0;
};

struct SampleReport {
  double lower_bound = 0;
  double argmax_time = 0;
  std::vector<double> argmax_initial;
  std::vector<double> argmax_state;
  int resolution = 0;
  double dt = 0;
  long trajectories = 0;
};

// Classical fixed-step RK4 over [0, T]. Integration freezes at the last
// in-set point once the state leaves X (tolerance 1e-7) or a denominator
// vanishes mid-step.
Trajectory integrate(const PeakProblem& problem, const std::vector<double>& x0, double dt);

// Uniform grid over the initial set's bounding box, sliced along
// single-variable equality constraints and filtered by set membership.
std::vector<std::vector<double>> grid_initial_set(const SemialgebraicSet& X0, int resolution);

// Max of the objective over every retained trajectory point from the grid.
SampleReport lower_bound(const PeakProblem& problem, int resolution, double dt);

}  // namespace peakbound

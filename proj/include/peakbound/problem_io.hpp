#pragma once

#include <stdexcept>
#include <string>

#include "peakbound/formulations.hpp"
#include "peakbound/system.hpp"

namespace peakbound {

struct ProblemIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedProblem {
  std::string name;
  PeakProblem problem;
  BuildOptions build_options;
  bool rescale_time = false;
  int sample_resolution = 50;
  double sample_dt = 1e-2;
};

// Parse a JSON problem file. See README for the schema. Throws
// ProblemIoError with a field-qualified message on any defect.
LoadedProblem load_problem_file(const std::string& path);
LoadedProblem parse_problem_json(const std::string& text, const std::string& origin);

}  // namespace peakbound

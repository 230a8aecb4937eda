#pragma once

#include <optional>
#include <string>
#include <vector>

#include "peakbound/formulations.hpp"
#include "peakbound/sampler.hpp"
#include "peakbound/sdp_solver.hpp"

namespace peakbound {

struct CellResult {
  Method method = Method::SumOfRational;
  int k = 0;
  SolveStatus status = SolveStatus::NumericalTrouble;
  double bound = 0;
  long iterations = 0;
  double seconds = 0;  // wall clock, shown in markdown only
  int largest_psd_side = 0;
  int expected_side = 0;
  long rows = 0;
  double m_mu0 = 0, m_mup = 0, m_mu = 0;
  double mu_mass_limit = 0;  // horizon T
  std::vector<double> nu_masses;
  std::vector<double> nu_limits;
  double cert_residual = 0;
  double min_gram_eig = 0;
  bool has_peak = false;
  double peak_time = 0;
  std::vector<double> peak_state;
  bool a5_certified = true;
};

std::string render_markdown(const std::string& problem_name,
                            const std::vector<CellResult>& cells,
                            const std::optional<SampleReport>& sample);

// Timing-free, byte-stable across runs on identical inputs.
std::string render_csv(const std::vector<CellResult>& cells,
                       const std::optional<SampleReport>& sample);

std::string format_bound(double v);  // 4 decimal places
}  // namespace peakbound

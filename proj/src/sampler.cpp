#include "peakbound/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace peakbound {

namespace {

// One RK4 step; throws std::domain_error when a denominator vanishes.
std::vector<double> rk4_step(const RationalDynamics& dyn, double t,
                             const std::vector<double>& x, double h) {
  const size_t n = x.size();
  auto axpy = [&](const std::vector<double>& base, double a, const std::vector<double>& d) {
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) r[i] = base[i] + a * d[i];
    return r;
  };
  std::vector<double> k1 = evaluate_rhs(dyn, t, x);
  std::vector<double> k2 = evaluate_rhs(dyn, t + h / 2, axpy(x, h / 2, k1));
  std::vector<double> k3 = evaluate_rhs(dyn, t + h / 2, axpy(x, h / 2, k2));
  std::vector<double> k4 = evaluate_rhs(dyn, t + h, axpy(x, h, k3));
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = x[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

// Walk one trajectory, invoking visit(t, x) at every retained point.
template <typename Visitor>
void walk(const PeakProblem& problem, const std::vector<double>& x0, double dt,
          Visitor&& visit, bool* escaped = nullptr, double* escape_time = nullptr) {
  const double T = problem.horizon;
  const long steps = std::max(1L, std::lround(T / dt));
  const double h = T / static_cast<double>(steps);
  std::vector<double> x = x0;
  visit(0.0, x);
  for (long s = 0; s < steps; ++s) {
    double t = h * static_cast<double>(s);
    std::vector<double> next;
    try {
      next = rk4_step(problem.dynamics, t, x, h);
    } catch (const std::domain_error&) {
      if (escaped) *escaped = true;
      if (escape_time) *escape_time = t;
      return;
    }
    if (!contains(problem.state_set, next, 1e-7)) {
      if (escaped) *escaped = true;
      if (escape_time) *escape_time = t + h;
      return;
    }
    x = std::move(next);
    visit(t + h, x);
  }
}

}  // namespace

Trajectory integrate(const PeakProblem& problem, const std::vector<double>& x0, double dt) {
  if (dt <= 0) throw std::invalid_argument("integrate: dt must be positive");
  if (x0.size() != static_cast<size_t>(problem.dynamics.state_dim()))
    throw std::invalid_argument("integrate: initial state dimension mismatch");
  Trajectory traj;
  walk(
      problem, x0, dt,
      [&](double t, const std::vector<double>& x) {
        traj.times.push_back(t);
        traj.states.push_back(x);
      },
      &traj.escaped, &traj.escape_time);
  return traj;
}

std::vector<std::vector<double>> grid_initial_set(const SemialgebraicSet& X0, int resolution) {
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  const int n = X0.ctx->size();
  std::vector<double> fixed(n, 0.0);
  std::vector<char> is_fixed(n, 0);
  for (const Polynomial& h : X0.equalities) {
    auto sv = single_variable_equality(h);
    if (sv) {
      is_fixed[sv->first] = 1;
      fixed[sv->first] = sv->second;
    }
  }
  if (!X0.box_lo) throw std::invalid_argument("initial set needs box bounds for gridding");
  const auto& lo = *X0.box_lo;
  const auto& hi = *X0.box_hi;

  std::vector<int> free_dims;
  for (int i = 0; i < n; ++i) {
    if (is_fixed[i]) continue;
    if (hi[i] - lo[i] <= 0) {
      is_fixed[i] = 1;
      fixed[i] = lo[i];
      continue;
    }
    free_dims.push_back(i);
  }

  std::vector<std::vector<double>> points;
  std::vector<int> idx(free_dims.size(), 0);
  while (true) {
    std::vector<double> p = fixed;
    for (size_t d = 0; d < free_dims.size(); ++d) {
      int i = free_dims[d];
      p[i] = lo[i] + (hi[i] - lo[i]) * idx[d] / double(resolution - 1);
    }
    if (contains(X0, p, 1e-9)) points.push_back(std::move(p));
    size_t d = 0;
    for (; d < free_dims.size(); ++d) {
      if (++idx[d] < resolution) break;
      idx[d] = 0;
    }
    if (d == free_dims.size()) break;
  }
  if (points.empty()) throw std::runtime_error("initial-set grid retained no points");
  return points;
}

SampleReport lower_bound(const PeakProblem& problem, int resolution, double dt) {
  if (dt <= 0) throw std::invalid_argument("lower_bound: dt must be positive");
  std::vector<std::vector<double>> grid = grid_initial_set(problem.initial_set, resolution);
  SampleReport report;
  report.resolution = resolution;
  report.dt = dt;
  report.trajectories = static_cast<long>(grid.size());
  report.lower_bound = -std::numeric_limits<double>::infinity();
  for (const auto& x0 : grid) {
    walk(problem, x0, dt, [&](double t, const std::vector<double>& x) {
      double val = problem.objective.evaluate(x);
      if (val > report.lower_bound) {
        report.lower_bound = val;
        report.argmax_time = t;
        report.argmax_initial = x0;
        report.argmax_state = x;
      }
    });
  }
  return report;
}

}  // namespace peakbound

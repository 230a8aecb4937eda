#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "peakbound/formulations.hpp"
#include "peakbound/problem_io.hpp"
#include "peakbound/report.hpp"
#include "peakbound/sampler.hpp"
#include "peakbound/sdpa_io.hpp"
#include "peakbound/sdp_solver.hpp"
#include "peakbound/sos.hpp"
#include "peakbound/system.hpp"

namespace pb = peakbound;

namespace {

struct A5Result {
  bool certified = true;
  std::vector<double> grid_min, grid_max;
};

// Two-stage denominator positivity check over every rational term.
A5Result check_a5(const pb::PeakProblem& problem, int resolution, bool full) {
  A5Result res;
  for (size_t l = 0; l < problem.dynamics.terms.size(); ++l) {
    pb::DenominatorCheck chk =
        pb::certify_denominator_positivity(problem, l, resolution, full);
    res.grid_min.push_back(chk.grid_min);
    res.grid_max.push_back(chk.grid_max);
    if (!chk.certified) res.certified = false;
  }
  return res;
}

struct CellOutcome {
  pb::CellResult cell;
  pb::SolveStatus status;
};

CellOutcome run_cell(const pb::LoadedProblem& loaded, const pb::PeakProblem& problem,
                     pb::Method method, int k, const A5Result& a5,
                     const std::string& sdpa_dump, bool verbose) {
  pb::CellResult cell;
  cell.method = method;
  cell.k = k;
  cell.a5_certified = a5.certified;
  cell.mu_mass_limit = problem.horizon;

  auto t0 = std::chrono::steady_clock::now();
  pb::BuiltProgram bp = pb::build_program(problem, method, k, loaded.build_options);
  if (!sdpa_dump.empty()) {
    std::ofstream out(sdpa_dump);
    if (!out) throw std::runtime_error("cannot write " + sdpa_dump);
    pb::write_sdpa(out, bp.instance);
  }
  pb::SolveSettings settings;
  settings.verbose = verbose;
  pb::SDPSolution sol = pb::solve_sdp(bp.instance, settings);
  auto t1 = std::chrono::steady_clock::now();

  cell.status = sol.status;
  cell.seconds = std::chrono::duration<double>(t1 - t0).count();
  cell.iterations = sol.iterations;
  cell.rows = bp.row_count;
  cell.largest_psd_side = bp.largest_psd_side;
  cell.expected_side = pb::expected_largest_side(problem, method, k);
  if (sol.status != pb::SolveStatus::Optimal) return {cell, sol.status};

  cell.bound = sol.primal_obj;

  pb::CertificateReport cert = pb::verify_certificate(bp.instance, sol);
  cell.cert_residual = cert.max_coeff_residual;
  cell.min_gram_eig = cert.min_gram_eigenvalue;

  pb::MomentReport moments = pb::extract_duals(bp.instance, sol);
  for (const auto& mm : moments.measures) {
    if (mm.name == "mu0") cell.m_mu0 = mm.mass;
    if (mm.name == "mu_p") {
      cell.m_mup = mm.mass;
      if (mm.has_first_moments && std::abs(mm.mass) > 1e-9) {
        cell.has_peak = true;
        for (size_t i = 0; i < mm.variable_names.size(); ++i) {
          double v = mm.first_moments[i] / mm.mass;
          if (mm.variable_names[i] == "t")
            cell.peak_time = v;
          else
            cell.peak_state.push_back(v);
        }
      }
    }
    if (mm.name == "mu") cell.m_mu = mm.mass;
    if (mm.name.rfind("nu_", 0) == 0) {
      size_t l = std::stoul(mm.name.substr(3)) - 1;
      if (cell.nu_masses.size() <= l) {
        cell.nu_masses.resize(l + 1, 0.0);
        cell.nu_limits.resize(l + 1, 0.0);
      }
      cell.nu_masses[l] = mm.mass;
      cell.nu_limits[l] = a5.grid_min.size() > l && a5.grid_min[l] > 0
                              ? problem.horizon / a5.grid_min[l]
                              : 0.0;
    }
  }
  return {cell, sol.status};
}

pb::PeakProblem prepare(const pb::LoadedProblem& loaded, bool rescale_flag) {
  if (loaded.rescale_time || rescale_flag) return pb::time_rescaled(loaded.problem);
  return loaded.problem;
}

std::vector<pb::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<pb::Method> out;
  for (const auto& n : names) {
    auto m = pb::method_from_name(n);
    if (!m) throw CLI::ValidationError("--method", "unknown method '" + n + "'");
    out.push_back(*m);
  }
  if (out.empty())
    out = {pb::Method::SumOfRational, pb::Method::Cleared, pb::Method::Lifted};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified peak bounds for rational ODE systems"};
  app.require_subcommand(1);

  std::string config, method_name = "sor", csv_path, sdpa_dump;
  std::vector<std::string> method_names;
  int degree = 2, degree_max = -1, sample_resolution = -1;
  double dt = -1;
  bool allow_unverified = false, rescale = false, verbose = false, with_sample = false;

  CLI::App* solve = app.add_subcommand("solve", "solve one (method, degree) cell");
  solve->add_option("config", config, "problem file (JSON)")->required();
  solve->add_option("--method", method_name, "sor | cleared | lifted");
  solve->add_option("--degree", degree, "relaxation degree k")->check(CLI::PositiveNumber);
  solve->add_option("--sdpa-dump", sdpa_dump, "write the SDP in sparse SDPA format");
  solve->add_flag("--allow-unverified-a5", allow_unverified,
                  "proceed when denominator positivity is not certified");
  solve->add_flag("--rescale-time", rescale, "rescale t to [0,1], multiplying dynamics by T");
  solve->add_flag("--verbose", verbose, "print interior-point iterations");

  CLI::App* table = app.add_subcommand("table", "sweep methods and degrees");
  table->add_option("config", config, "problem file (JSON)")->required();
  table->add_option("--method", method_names, "methods to run (default: all)");
  table->add_option("--degree", degree, "lowest degree k")->check(CLI::PositiveNumber);
  table->add_option("--degree-max", degree_max, "highest degree k (default: --degree)");
  table->add_option("--csv", csv_path, "write a deterministic CSV report");
  table->add_option("--sample-resolution", sample_resolution, "sampler grid resolution");
  table->add_option("--dt", dt, "sampler RK4 step");
  table->add_flag("--sample,!--no-sample", with_sample, "include the sampler row (default on)");
  table->add_flag("--allow-unverified-a5", allow_unverified);
  table->add_flag("--rescale-time", rescale);
  table->add_flag("--verbose", verbose);
  with_sample = true;

  CLI::App* sample = app.add_subcommand("sample", "trajectory lower bound only");
  sample->add_option("config", config, "problem file (JSON)")->required();
  sample->add_option("--sample-resolution", sample_resolution, "grid resolution");
  sample->add_option("--dt", dt, "RK4 step");
  sample->add_option("--csv", csv_path, "write trajectory of the best initial point");

  CLI::App* sdpa = app.add_subcommand("sdpa-solve", "solve a sparse SDPA file");
  sdpa->add_option("file", config, "path to .dat-s")->required();
  sdpa->add_flag("--verbose", verbose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sdpa->parsed()) {
      std::ifstream in(config);
      if (!in) throw std::runtime_error("cannot open " + config);
      pb::SDPInstance inst = pb::read_sdpa(in);
      pb::SolveSettings settings;
      settings.verbose = verbose;
      pb::SDPSolution sol = pb::solve_sdp(inst, settings);
      std::cout << pb::to_string(sol.status) << " objective " << pb::format_bound(sol.primal_obj)
                << " (dual " << pb::format_bound(sol.dual_obj) << ", " << sol.iterations
                << " iterations)\n";
      return sol.status == pb::SolveStatus::Optimal ? 0 : 1;
    }

    pb::LoadedProblem loaded = pb::load_problem_file(config);
    pb::PeakProblem problem = prepare(loaded, rescale);
    if (sample_resolution < 0) sample_resolution = loaded.sample_resolution;
    if (dt <= 0) dt = loaded.sample_dt;

    if (sample->parsed()) {
      pb::SampleReport rep = pb::lower_bound(problem, sample_resolution, dt);
      std::cout << "lower bound " << pb::format_bound(rep.lower_bound) << " at t="
                << pb::format_bound(rep.argmax_time) << " from x0=(";
      for (size_t i = 0; i < rep.argmax_initial.size(); ++i)
        std::cout << (i ? ", " : "") << pb::format_bound(rep.argmax_initial[i]);
      std::cout << ") over " << rep.trajectories << " trajectories\n";
      if (!csv_path.empty()) {
        pb::Trajectory traj = pb::integrate(problem, rep.argmax_initial, dt);
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        out << "t";
        for (const auto& nm : problem.state_ctx->names()) out << "," << nm;
        out << ",objective\n";
        char buf[64];
        for (size_t i = 0; i < traj.times.size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%.10g", traj.times[i]);
          out << buf;
          for (double v : traj.states[i]) {
            std::snprintf(buf, sizeof(buf), "%.10g", v);
            out << "," << buf;
          }
          std::snprintf(buf, sizeof(buf), "%.10g",
                        problem.objective.evaluate(traj.states[i]));
          out << "," << buf << "\n";
        }
      }
      return 0;
    }

    // solve and table both need the A5 gate
    A5Result a5 = check_a5(problem, loaded.build_options.a5_grid_resolution, true);
    if (!a5.certified && !allow_unverified) {
      std::cerr << "error: denominator positivity (grid + WSOS margin) could not be "
                   "certified; rerun with --allow-unverified-a5 to proceed anyway\n";
      return 2;
    }
    if (!a5.certified)
      std::cerr << "warning: denominator positivity unverified; bounds not guaranteed\n";

    if (solve->parsed()) {
      auto m = pb::method_from_name(method_name);
      if (!m) {
        std::cerr << "error: unknown method '" << method_name << "'\n";
        return 2;
      }
      CellOutcome out = run_cell(loaded, problem, *m, degree, a5, sdpa_dump, verbose);
      std::vector<pb::CellResult> cells{out.cell};
      std::cout << pb::render_markdown(loaded.name, cells, std::nullopt);
      return out.status == pb::SolveStatus::Optimal ? 0 : 1;
    }

    // table
    if (degree_max < degree) degree_max = degree;
    std::vector<pb::Method> methods = parse_methods(method_names);
    std::vector<pb::CellResult> cells;
    bool all_ok = true;
    for (pb::Method m : methods)
      for (int k = degree; k <= degree_max; ++k) {
        CellOutcome out = run_cell(loaded, problem, m, k, a5, "", verbose);
        all_ok = all_ok && out.status == pb::SolveStatus::Optimal;
        cells.push_back(std::move(out.cell));
      }
    std::optional<pb::SampleReport> sample_row;
    if (with_sample) sample_row = pb::lower_bound(problem, sample_resolution, dt);
    if (sample_row) {
      for (const auto& c : cells)
        if (c.status == pb::SolveStatus::Optimal &&
            c.bound < sample_row->lower_bound - 1e-6)
          std::cerr << "warning: " << pb::method_name(c.method) << " k=" << c.k
                    << " bound " << pb::format_bound(c.bound)
                    << " violates the sampled lower bound "
                    << pb::format_bound(sample_row->lower_bound) << "\n";
    }
    std::cout << pb::render_markdown(loaded.name, cells, sample_row);
    if (!csv_path.empty()) {
      std::ofstream out(csv_path);
      if (!out) throw std::runtime_error("cannot write " + csv_path);
      out << pb::render_csv(cells, sample_row);
    }
    return all_ok ? 0 : 1;
  } catch (const pb::ProblemIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

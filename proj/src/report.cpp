#include "peakbound/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace peakbound {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

const CellResult* find_cell(const std::vector<CellResult>& cells, Method m, int k) {
  for (const auto& c : cells)
    if (c.method == m && c.k == k) return &c;
  return nullptr;
}

}  // namespace

std::string format_bound(double v) { return fmt("%.4f", v); }

std::string render_markdown(const std::string& problem_name,
                            const std::vector<CellResult>& cells,
                            const std::optional<SampleReport>& sample) {
  std::ostringstream os;
  os << "# Peak bounds: " << problem_name << "\n\n";

  std::set<int> ks;
  std::set<Method> methods;
  for (const auto& c : cells) {
    ks.insert(c.k);
    methods.insert(c.method);
  }
  if (!cells.empty()) {
    os << "| method |";
    for (int k : ks) os << " k=" << k << " |";
    os << "\n|---|";
    for (size_t i = 0; i < ks.size(); ++i) os << "---|";
    os << "\n";
    for (Method m : methods) {
      os << "| " << method_name(m) << " |";
      for (int k : ks) {
        const CellResult* c = find_cell(cells, m, k);
        if (!c) {
          os << " - |";
        } else if (c->status == SolveStatus::Optimal) {
          os << " " << format_bound(c->bound) << " |";
        } else {
          os << " " << to_string(c->status) << " |";
        }
      }
      os << "\n";
    }
    os << "\n";
  }
  if (sample) {
    os << "Sampled lower bound: " << format_bound(sample->lower_bound) << " (resolution "
       << sample->resolution << ", dt " << fmt("%g", sample->dt) << ", "
       << sample->trajectories << " trajectories, peak at t=" << fmt("%.4f", sample->argmax_time)
       << ")\n\n";
  }

  for (const auto& c : cells) {
    os << "## " << method_name(c.method) << " k=" << c.k << "\n";
    os << "- status: " << to_string(c.status);
    if (c.status == SolveStatus::Optimal) os << ", bound " << format_bound(c.bound);
    os << "\n";
    os << "- iterations: " << c.iterations << ", time: " << fmt("%.1f", c.seconds) << " s\n";
    os << "- rows: " << c.rows << ", largest PSD block: " << c.largest_psd_side
       << " (ledger " << c.expected_side << ")\n";
    if (!c.a5_certified)
      os << "- WARNING: denominator positivity not certified; bound not guaranteed\n";
    if (c.status == SolveStatus::Optimal) {
      os << "- masses: m(mu0)=" << fmt("%.6f", c.m_mu0) << ", m(mu_p)=" << fmt("%.6f", c.m_mup)
         << ", m(mu)=" << fmt("%.6f", c.m_mu) << " (limit " << fmt("%.3f", c.mu_mass_limit)
         << ")\n";
      for (size_t l = 0; l < c.nu_masses.size(); ++l)
        os << "- m(nu_" << l + 1 << ")=" << fmt("%.6f", c.nu_masses[l]) << " (limit "
           << fmt("%.3f", c.nu_limits[l]) << ")\n";
      os << "- certificate residual: " << fmt("%.3e", c.cert_residual)
         << ", min Gram eigenvalue: " << fmt("%.3e", c.min_gram_eig) << "\n";
      if (c.has_peak) {
        os << "- peak location estimate: t=" << fmt("%.4f", c.peak_time) << ", x=(";
        for (size_t i = 0; i < c.peak_state.size(); ++i)
          os << (i ? ", " : "") << fmt("%.4f", c.peak_state[i]);
        os << ")\n";
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string render_csv(const std::vector<CellResult>& cells,
                       const std::optional<SampleReport>& sample) {
  std::ostringstream os;
  os << "kind,method,k,value,status,largest_psd_side,rows,m_mu0,m_mup,m_mu,"
        "nu_mass_max,nu_limit_min,cert_residual,resolution,dt\n";
  for (const auto& c : cells) {
    double nu_max = 0, nu_lim = 0;
    if (!c.nu_masses.empty()) {
      nu_max = *std::max_element(c.nu_masses.begin(), c.nu_masses.end());
      nu_lim = *std::min_element(c.nu_limits.begin(), c.nu_limits.end());
    }
    os << "bound," << method_name(c.method) << "," << c.k << "," << format_bound(c.bound)
       << "," << to_string(c.status) << "," << c.largest_psd_side << "," << c.rows << ","
       << fmt("%.6f", c.m_mu0) << "," << fmt("%.6f", c.m_mup) << "," << fmt("%.6f", c.m_mu)
       << "," << fmt("%.6f", nu_max) << "," << fmt("%.6f", nu_lim) << ","
       << fmt("%.3e", c.cert_residual) << ",,\n";
  }
  if (sample) {
    os << "sampler,,," << format_bound(sample->lower_bound) << ",,,,,,,,,,"
       << sample->resolution << "," << fmt("%g", sample->dt) << "\n";
  }
  return os.str();
}

}  // namespace peakbound

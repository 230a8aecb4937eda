#include "peakbound/problem_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "peakbound/expr.hpp"

namespace peakbound {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ProblemIoError(origin + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& origin) {
  auto it = j.find(key);
  if (it == j.end()) fail(origin, std::string("missing field '") + key + "'");
  return *it;
}

Polynomial parse_field(const json& j, const ContextPtr& ctx, const std::string& where,
                       const std::string& origin) {
  if (!j.is_string()) fail(origin, where + " must be an expression string");
  try {
    return parse_polynomial(j.get<std::string>(), ctx);
  } catch (const ParseError& e) {
    fail(origin, "in " + where + ": " + e.what());
  }
}

std::vector<std::pair<double, double>> parse_box(const json& j, size_t dims,
                                                 const std::string& where,
                                                 const std::string& origin) {
  if (!j.is_array() || j.size() != dims)
    fail(origin, where + " must list one [lo, hi] pair per variable");
  std::vector<std::pair<double, double>> box;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      fail(origin, where + " entries must be [lo, hi] number pairs");
    double lo = pair[0].get<double>(), hi = pair[1].get<double>();
    if (lo > hi) fail(origin, where + " has lo > hi");
    box.emplace_back(lo, hi);
  }
  return box;
}

BallOption parse_ball(const json& j, const std::string& where, const std::string& origin) {
  BallOption opt;
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "none") opt.mode = BallOption::None;
    else if (s == "auto") opt.mode = BallOption::Auto;
    else fail(origin, where + " must be \"none\", \"auto\", or a radius");
  } else if (j.is_number()) {
    opt.mode = BallOption::Explicit;
    opt.radius = j.get<double>();
    if (opt.radius <= 0) fail(origin, where + " radius must be positive");
  } else {
    fail(origin, where + " must be \"none\", \"auto\", or a radius");
  }
  return opt;
}

SemialgebraicSet parse_set(const json& j, const ContextPtr& ctx, const std::string& where,
                           const std::string& origin, bool allow_disc) {
  SemialgebraicSet set;
  bool have_base = false;
  if (j.contains("box")) {
    auto box = parse_box(j["box"], ctx->size(), where + ".box", origin);
    std::vector<double> lo, hi;
    for (auto& [a, b] : box) {
      lo.push_back(a);
      hi.push_back(b);
    }
    set = box_set(ctx, lo, hi);
    have_base = true;
  }
  if (j.contains("disc")) {
    if (have_base) fail(origin, where + " cannot combine box and disc");
    if (!allow_disc) fail(origin, where + ".disc is only supported for the initial set");
    const json& d = j["disc"];
    const json& cj = need(d, "center", origin);
    if (!cj.is_array() || cj.size() != static_cast<size_t>(ctx->size()))
      fail(origin, where + ".disc.center dimension mismatch");
    std::vector<double> center;
    for (const auto& v : cj) center.push_back(v.get<double>());
    double radius = need(d, "radius", origin).get<double>();
    if (radius <= 0) fail(origin, where + ".disc.radius must be positive");
    set = disc_set(ctx, center, radius);
    have_base = true;
  }
  if (!have_base) {
    set.ctx = ctx;
    if (j.contains("grid_box")) {
      auto box = parse_box(j["grid_box"], ctx->size(), where + ".grid_box", origin);
      std::vector<double> lo, hi;
      for (auto& [a, b] : box) {
        lo.push_back(a);
        hi.push_back(b);
      }
      set.box_lo = lo;
      set.box_hi = hi;
    }
  }
  if (j.contains("constraints")) {
    if (!j["constraints"].is_array())
      fail(origin, where + ".constraints must be a list of expressions");
    int i = 0;
    for (const auto& c : j["constraints"]) {
      set.inequalities.push_back(parse_field(
          c, ctx, where + ".constraints[" + std::to_string(i) + "]", origin));
      ++i;
    }
  }
  if (j.contains("equalities")) {
    if (!j["equalities"].is_array())
      fail(origin, where + ".equalities must be a list of expressions");
    int i = 0;
    for (const auto& c : j["equalities"]) {
      set.equalities.push_back(parse_field(
          c, ctx, where + ".equalities[" + std::to_string(i) + "]", origin));
      ++i;
    }
  }
  if (set.inequalities.empty() && set.equalities.empty())
    fail(origin, where + " describes no constraints");
  return set;
}

}  // namespace

LoadedProblem parse_problem_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(origin, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(origin, "top level must be an object");

  LoadedProblem out;
  out.name = j.value("name", origin);

  const json& vars = need(j, "variables", origin);
  if (!vars.is_array() || vars.empty()) fail(origin, "'variables' must be a nonempty list");
  std::vector<std::string> names;
  for (const auto& v : vars) {
    if (!v.is_string()) fail(origin, "'variables' entries must be strings");
    std::string name = v.get<std::string>();
    if (name == "t") fail(origin, "variable name 't' is reserved for time");
    names.push_back(name);
  }
  ContextPtr state_ctx = make_context(names);
  std::vector<std::string> tx_names = names;
  tx_names.insert(tx_names.begin(), "t");
  ContextPtr tx_ctx = make_context(tx_names);

  PeakProblem& p = out.problem;
  p.name = out.name;
  p.state_ctx = state_ctx;
  p.tx_ctx = tx_ctx;
  p.horizon = need(j, "horizon", origin).get<double>();
  if (!(p.horizon > 0)) fail(origin, "'horizon' must be positive");
  p.objective = parse_field(need(j, "objective", origin), state_ctx, "objective", origin);

  p.state_set = parse_set(need(j, "state_space", origin), state_ctx, "state_space",
                          origin, false);
  p.initial_set = parse_set(need(j, "initial_set", origin), state_ctx, "initial_set",
                            origin, true);

  const json& dynj = need(j, "dynamics", origin);
  const json& f0j = need(dynj, "f0", origin);
  if (!f0j.is_array() || f0j.size() != names.size())
    fail(origin, "dynamics.f0 must list one expression per state variable");
  RationalDynamics& dyn = p.dynamics;
  dyn.tx_ctx = tx_ctx;
  for (size_t i = 0; i < f0j.size(); ++i)
    dyn.f0.push_back(parse_field(f0j[i], tx_ctx, "dynamics.f0[" + std::to_string(i) + "]",
                                 origin));
  if (dynj.contains("terms")) {
    if (!dynj["terms"].is_array()) fail(origin, "dynamics.terms must be a list");
    int l = 0;
    for (const auto& termj : dynj["terms"]) {
      std::string where = "dynamics.terms[" + std::to_string(l) + "]";
      RationalTerm term;
      const json& numj = need(termj, "numerator", origin);
      if (!numj.is_array() || numj.size() != names.size())
        fail(origin, where + ".numerator must list one expression per state variable");
      for (size_t i = 0; i < numj.size(); ++i)
        term.numerator.push_back(parse_field(
            numj[i], tx_ctx, where + ".numerator[" + std::to_string(i) + "]", origin));
      term.denominator = parse_field(need(termj, "denominator", origin), tx_ctx,
                                     where + ".denominator", origin);
      dyn.terms.push_back(std::move(term));
      ++l;
    }
  }

  if (j.contains("options")) {
    const json& opts = j["options"];
    if (opts.contains("ball")) {
      const json& ball = opts["ball"];
      if (ball.contains("state"))
        out.build_options.state_ball = parse_ball(ball["state"], "options.ball.state", origin);
      if (ball.contains("initial"))
        out.build_options.initial_ball =
            parse_ball(ball["initial"], "options.ball.initial", origin);
    }
    if (opts.contains("a5_grid_resolution")) {
      out.build_options.a5_grid_resolution = opts["a5_grid_resolution"].get<int>();
      if (out.build_options.a5_grid_resolution < 2)
        fail(origin, "options.a5_grid_resolution must be at least 2");
    }
    if (opts.contains("rescale_time")) out.rescale_time = opts["rescale_time"].get<bool>();
    if (opts.contains("y_bounds")) {
      const json& yb = opts["y_bounds"];
      if (!yb.is_array()) fail(origin, "options.y_bounds must be a list of [lo, hi] pairs");
      auto pairs = parse_box(yb, yb.size(), "options.y_bounds", origin);
      out.build_options.y_bounds = pairs;
    }
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    if (s.contains("resolution")) out.sample_resolution = s["resolution"].get<int>();
    if (s.contains("dt")) out.sample_dt = s["dt"].get<double>();
    if (out.sample_resolution < 2) fail(origin, "sampling.resolution must be at least 2");
    if (!(out.sample_dt > 0)) fail(origin, "sampling.dt must be positive");
  }

  try {
    p.validate();
  } catch (const std::exception& e) {
    fail(origin, e.what());
  }
  return out;
}

LoadedProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemIoError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_json(buf.str(), path);
}

}  // namespace peakbound

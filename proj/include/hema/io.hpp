#pragma once

/**
 * @file io.hpp
 * @brief JSON run configuration, flag overrides and CSV/JSON output.
 *
 * A configuration is one flat JSON object. Model keys: delta, gamma, beta0,
 * theta, n, density{kind, tau_min, tau_max, csv_path | knots + values}.
 * Run keys: mu, history_step, step, correction_passes, t_end, t_discard,
 * window, output_stride, critical_tol. Omitted keys take their defaults.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hema/diagnostics.hpp"
#include "hema/error.hpp"
#include "hema/history.hpp"
#include "hema/integrator.hpp"
#include "hema/model.hpp"
#include "hema/stability.hpp"
#include "hema/trajectory.hpp"

namespace hema {

using json = nlohmann::ordered_json;

/// Everything one simulation needs; fully deterministic.
struct RunSpec {
  ModelParams params{};
  HistoryConfig history{};
  IntegratorConfig integrator{};
  double t_discard = 300.0;
  double window = 200.0;
  double output_stride = 0.0;  ///< <= 0 writes every stored node
  double critical_tol = 1e-6;

  void validate() const {
    params.validate();
    history.validate();
    integrator.validate(params.density);
    if (!(integrator.t_end > params.density.tau_max()))
      throw ConfigError("t_end must exceed tau_max = " + std::to_string(params.density.tau_max()));
    if (!(t_discard >= 0.0)) throw ConfigError("t_discard must be nonnegative");
    if (!(window > 0.0)) throw ConfigError("window must be positive");
    if (!(critical_tol >= 0.0)) throw ConfigError("critical_tol must be nonnegative");
  }
};

namespace detail {

inline double number_at(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "key '" + key + "': expected a number, got " + v.dump());
  return v.get<double>();
}

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError(where + "unknown key '" + it.key() + "'");
}

inline std::vector<double> number_array(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + "key '" + key + "': expected an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(where + "key '" + key + "': non-numeric entry " + v.dump());
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

inline json density_to_json(const DivisionDensity& d) {
  json j;
  if (d.kind() == DensityKind::Uniform) {
    j["kind"] = "uniform";
    j["tau_min"] = d.tau_min();
    j["tau_max"] = d.tau_max();
  } else {
    j["kind"] = "tabulated";
    j["tau_min"] = d.tau_min();
    j["tau_max"] = d.tau_max();
    j["knots"] = d.knots();
    j["values"] = d.values();
    j["raw_mass"] = d.raw_mass();
  }
  return j;
}

/// `base_dir` resolves a relative csv_path.
inline DivisionDensity density_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  const std::string where = "density: ";
  if (!j.is_object()) throw ConfigError(where + "expected an object");
  detail::reject_unknown(j, {"kind", "tau_min", "tau_max", "csv_path", "knots", "values", "raw_mass"}, where);
  const std::string kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform") {
    const double lo = detail::number_at(j, "tau_min", 0.0, where);
    const double hi = detail::number_at(j, "tau_max", 7.0, where);
    try {
      return DivisionDensity::uniform(lo, hi);
    } catch (const Error& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (kind == "tabulated") {
    if (j.contains("csv_path")) {
      if (!j.at("csv_path").is_string()) throw ConfigError(where + "key 'csv_path': expected a string");
      std::filesystem::path path = j.at("csv_path").get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      return DivisionDensity::from_csv_file(path.string());
    }
    return DivisionDensity::tabulated(detail::number_array(j, "knots", where), detail::number_array(j, "values", where));
  }
  throw ConfigError(where + "key 'kind': expected \"uniform\" or \"tabulated\", got \"" + kind + "\"");
}

inline json params_to_json(const ModelParams& p) {
  json j;
  j["delta"] = p.delta;
  j["gamma"] = p.gamma;
  j["beta0"] = p.hill.beta0;
  j["theta"] = p.hill.theta;
  j["n"] = p.hill.n;
  j["density"] = density_to_json(p.density);
  return j;
}

inline json run_spec_to_json(const RunSpec& r) {
  json j = params_to_json(r.params);
  j["mu"] = r.history.mu;
  j["history_step"] = r.history.resolved_step(r.params.density);
  j["step"] = r.integrator.step;
  j["correction_passes"] = r.integrator.correction_passes;
  j["t_end"] = r.integrator.t_end;
  j["t_discard"] = r.t_discard;
  j["window"] = r.window;
  j["output_stride"] = r.output_stride;
  j["critical_tol"] = r.critical_tol;
  return j;
}

inline RunSpec run_spec_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object at top level");
  detail::reject_unknown(j,
                         {"delta", "gamma", "beta0", "theta", "n", "density", "mu", "history_step", "step",
                          "correction_passes", "t_end", "t_discard", "window", "output_stride", "critical_tol"},
                         "config: ");
  RunSpec r;
  const std::string w = "config: ";
  r.params.delta = detail::number_at(j, "delta", r.params.delta, w);
  r.params.gamma = detail::number_at(j, "gamma", r.params.gamma, w);
  r.params.hill.beta0 = detail::number_at(j, "beta0", r.params.hill.beta0, w);
  r.params.hill.theta = detail::number_at(j, "theta", r.params.hill.theta, w);
  r.params.hill.n = detail::number_at(j, "n", r.params.hill.n, w);
  if (j.contains("density")) r.params.density = density_from_json(j.at("density"), base_dir);
  r.history.mu = detail::number_at(j, "mu", r.history.mu, w);
  r.history.step = detail::number_at(j, "history_step", r.history.step, w);
  r.integrator.step = detail::number_at(j, "step", r.integrator.step, w);
  if (j.contains("correction_passes")) {
    const json& v = j.at("correction_passes");
    if (!v.is_number_integer()) throw ConfigError(w + "key 'correction_passes': expected an integer");
    r.integrator.correction_passes = v.get<int>();
  }
  r.integrator.t_end = detail::number_at(j, "t_end", r.integrator.t_end, w);
  r.t_discard = detail::number_at(j, "t_discard", r.t_discard, w);
  r.window = detail::number_at(j, "window", r.window, w);
  r.output_stride = detail::number_at(j, "output_stride", r.output_stride, w);
  r.critical_tol = detail::number_at(j, "critical_tol", r.critical_tol, w);
  return r;
}

/// Parses JSON text; syntax errors report line and column.
inline json parse_config_text(const std::string& text, const std::string& origin = "config") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

/// Applies one `key=value` override; dotted keys address nested objects and
/// the value is read as JSON, falling back to a plain string.
inline void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: malformed key '" + key + "'");
    if (!node->is_object()) throw ConfigError("--set: '" + key + "' does not address an object member");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline json equilibria_to_json(const ModelParams& p) {
  json out = json::array();
  for (const Equilibrium& e : equilibria(p)) {
    json j;
    j["kind"] = e.kind == EquilibriumKind::Trivial ? "trivial" : "positive";
    j["x_star"] = e.x_star;
    j["y_star"] = e.y_star;
    j["beta_star"] = e.beta_star;
    out.push_back(j);
  }
  return out;
}

inline json hopf_to_json(const HopfResult& h) {
  json j;
  j["omega_c"] = h.omega_c;
  j["beta_star_c"] = h.beta_star_c;
  j["period"] = h.period;
  j["n_c"] = h.n_c ? json(*h.n_c) : json(nullptr);
  j["transversality"] = h.transversality;
  j["transversal"] = h.transversal;
  j["degenerate"] = h.degenerate;
  j["tie"] = h.tie;
  j["kernel_monotone"] = h.kernel_monotone;
  j["regime"] = h.proved_regime ? "proved" : "outside proved regime";
  j["omega_max"] = h.omega_max;
  json cands = json::array();
  for (const auto& c : h.candidates) {
    json cj;
    cj["omega"] = c.omega;
    cj["C"] = c.C;
    cj["S"] = c.S;
    cj["beta_star_c"] = c.beta_star_c;
    cj["g_prime"] = c.g_prime;
    cands.push_back(cj);
  }
  j["candidates"] = cands;
  j["warnings"] = h.warnings;
  return j;
}

inline json stability_to_json(const StabilityReport& r) {
  json j;
  j["trivial"] = to_string(r.trivial);
  j["positive"] = r.positive ? json(to_string(*r.positive)) : json(nullptr);
  j["delta_tilde"] = r.delta_tilde;
  json d;
  d["alpha"] = r.details.alpha;
  d["trivial_real_root"] = r.details.trivial_root;
  d["x_star"] = r.details.x_star ? json(*r.details.x_star) : json(nullptr);
  d["beta_star"] = r.details.beta_star ? json(*r.details.beta_star) : json(nullptr);
  d["beta_star_c"] = r.details.beta_star_c ? json(*r.details.beta_star_c) : json(nullptr);
  j["details"] = d;
  if (r.hopf) j["hopf"] = hopf_to_json(*r.hopf);
  return j;
}

inline json period_to_json(const PeriodEstimate& e) {
  json j;
  j["period"] = e.period;
  j["period_stderr"] = e.period_stderr;
  j["n_cycles"] = e.n_cycles;
  j["amplitude_min"] = e.amplitude_min;
  j["amplitude_max"] = e.amplitude_max;
  j["mean_level"] = e.mean_level;
  j["confident"] = e.confident;
  j["method"] = "PeakToPeak";
  return j;
}

/// Scientific notation with 17 significant digits.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// CSV with columns t,x,y; stride <= 0 writes every node, otherwise samples
/// the dense output at t0 + k·stride plus the final time.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double stride = 0.0) {
  out << "t,x,y\n";
  auto row = [&](double t, double x, double y) {
    out << format_number(t) << ',' << format_number(x) << ',' << format_number(y) << '\n';
  };
  if (traj.empty()) return;
  if (stride <= 0.0) {
    for (const auto& nd : traj.nodes()) row(nd.t, nd.x, nd.y);
    return;
  }
  const double t0 = traj.t0();
  const double t1 = traj.t1();
  const auto count = static_cast<std::size_t>(std::floor((t1 - t0) / stride + 1e-9));
  double last = t0 - 1.0;
  for (std::size_t k = 0; k <= count; ++k) {
    const double t = std::min(t1, t0 + static_cast<double>(k) * stride);
    const State s = traj.size() == 1 ? State{traj.back().x, traj.back().y} : traj.eval(t);
    row(t, s.x, s.y);
    last = t;
  }
  if (last < t1) row(t1, traj.back().x, traj.back().y);
}

/// Minimal SVG line chart of x and y against t.
inline void write_trajectory_svg(std::ostream& out, const Trajectory& traj, double t_from = 0.0) {
  const double W = 800.0;
  const double H = 400.0;
  const double m = 40.0;
  std::vector<const TrajectoryNode*> pts;
  for (const auto& nd : traj.nodes())
    if (nd.t >= t_from) pts.push_back(&nd);
  double lo = 0.0;
  double hi = 1e-300;
  for (const auto* p : pts) hi = std::max({hi, p->x, p->y});
  const double ta = pts.empty() ? 0.0 : pts.front()->t;
  const double tb = pts.empty() ? 1.0 : std::max(pts.back()->t, ta + 1e-12);
  const std::size_t every = std::max<std::size_t>(1, pts.size() / 4000);
  auto path = [&](bool is_x) {
    std::ostringstream s;
    for (std::size_t i = 0; i < pts.size(); i += every) {
      const double v = is_x ? pts[i]->x : pts[i]->y;
      const double px = m + (W - 2 * m) * (pts[i]->t - ta) / (tb - ta);
      const double py = H - m - (H - 2 * m) * (v - lo) / (hi - lo);
      s << (i == 0 ? 'M' : 'L') << px << ',' << py << ' ';
    }
    return s.str();
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<path d=\"" << path(true) << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\"/>\n";
  out << "<path d=\"" << path(false) << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << m << "\" y=\"20\" font-size=\"12\">x (blue), y (red); t in [" << ta << ", " << tb
      << "], max " << hi << "</text>\n</svg>\n";
}

}  // namespace hema

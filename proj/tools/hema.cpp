// Command-line front end: equilibria, stability, hopf, simulate, sweep,
// history and verify.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "hema/diagnostics.hpp"
#include "hema/error.hpp"
#include "hema/history.hpp"
#include "hema/integrator.hpp"
#include "hema/io.hpp"
#include "hema/model.hpp"
#include "hema/stability.hpp"
#include "hema/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerify = 4;

struct ConfigSource {
  std::string path;
  std::vector<std::string> sets;

  hema::json document() const {
    hema::json j = path.empty() ? hema::json::object() : hema::load_config_file(path);
    for (const auto& s : sets) hema::apply_override(j, s);
    return j;
  }

  std::filesystem::path base_dir() const {
    return path.empty() ? std::filesystem::path{} : std::filesystem::path(path).parent_path();
  }

  hema::RunSpec spec() const { return hema::run_spec_from_json(document(), base_dir()); }
};

void add_config_options(CLI::App* cmd, ConfigSource& src) {
  cmd->add_option("-c,--config", src.path, "JSON configuration file");
  cmd->add_option("--set", src.sets, "Override one key, e.g. --set n=2.42 or --set density.tau_min=1")
      ->type_name("KEY=VALUE");
}

void print_json(const hema::json& j) { std::cout << j.dump(2) << '\n'; }

hema::json existence_json(const hema::ModelParams& p) {
  const hema::ExistenceReport e = hema::existence(p);
  hema::json j;
  j["alpha"] = e.threshold_alpha;
  j["exists_positive"] = e.exists_positive;
  j["boundary"] = e.boundary;
  return j;
}

int cmd_equilibria(const ConfigSource& src) {
  const hema::RunSpec spec = src.spec();
  const hema::ModelParams& p = spec.params;
  p.validate();
  const hema::KernelMoments m = p.kernel();
  hema::json out;
  out["params"] = hema::params_to_json(p);
  out["kernel"] = {{"K", m.K}, {"M1", m.M1}, {"Y0w", m.Y0w}};
  out["existence"] = existence_json(p);
  out["delta_tilde"] = hema::delta_tilde(p);
  if (p.hill.n > 1.0) out["map_peak"] = hema::map_unimodal_peak(p.hill);
  out["equilibria"] = hema::equilibria_to_json(p);
  print_json(out);
  return kExitOk;
}

int cmd_stability(const ConfigSource& src, bool as_json) {
  const hema::RunSpec spec = src.spec();
  spec.params.validate();
  const hema::StabilityReport r = hema::stability_report(spec.params, spec.critical_tol);
  if (as_json) {
    print_json(hema::stability_to_json(r));
    return kExitOk;
  }
  std::printf("E0: %s", hema::to_string(r.trivial));
  if (r.positive) std::printf("; E*: %s", hema::to_string(*r.positive));
  std::printf("\n");
  std::printf("  %-18s %.10g\n", "alpha", r.details.alpha);
  std::printf("  %-18s %.10g\n", "delta", spec.params.delta);
  std::printf("  %-18s %.10g\n", "trivial root", r.details.trivial_root);
  std::printf("  %-18s %.10g\n", "delta_tilde", r.delta_tilde);
  if (r.details.x_star) std::printf("  %-18s %.10g\n", "x*", *r.details.x_star);
  if (r.details.beta_star) std::printf("  %-18s %.10g\n", "beta*", *r.details.beta_star);
  if (r.details.beta_star_c) std::printf("  %-18s %.10g\n", "beta*_c", *r.details.beta_star_c);
  return kExitOk;
}

int cmd_hopf(const ConfigSource& src, const hema::HopfOptions& opt, bool as_json) {
  const hema::RunSpec spec = src.spec();
  const hema::ModelParams& p = spec.params;
  p.validate();
  hema::HopfResult h;
  try {
    h = hema::hopf_locate(p, opt);
  } catch (const hema::NoCrossingError& e) {
    hema::json out;
    out["error"] = "NoCrossing";
    out["message"] = e.what();
    out["g_min"] = e.g_min();
    out["g_max"] = e.g_max();
    out["delta"] = p.delta;
    print_json(out);
    return kExitNumerical;
  }
  if (as_json) {
    print_json(hema::hopf_to_json(h));
    return kExitOk;
  }
  std::printf("Hopf crossing at omega_c=%.10g (period %.6g days), beta*_c=%.10g%s\n", h.omega_c, h.period,
              h.beta_star_c, h.proved_regime ? "" : " [outside proved regime]");
  std::printf("  %-18s %s\n", "n_c", h.n_c ? std::to_string(*h.n_c).c_str() : "NoInversion");
  std::printf("  %-18s %.6g (%s)\n", "transversality", h.transversality, h.transversal > 0 ? "positive" : "non-positive");
  std::printf("  %-18s %s\n", "degenerate", h.degenerate ? "yes" : "no");
  std::printf("  %-18s %zu\n", "candidates", h.candidates.size());
  for (const auto& w : h.warnings) std::printf("  warning: %s\n", w.c_str());
  return kExitOk;
}

hema::json run_summary(const hema::RunSpec& spec, const hema::Trajectory& traj) {
  const hema::ModelParams& p = spec.params;
  hema::json d;
  hema::Equilibrium target;
  if (hema::existence(p).exists_positive) target = hema::positive_equilibrium(p);
  if (traj.t1() - traj.t0() > spec.window) {
    const hema::ConvergenceResult c = hema::convergence_check(traj, target, spec.window, p.hill.theta);
    d["convergence"] = {{"target", target.kind == hema::EquilibriumKind::Positive ? "positive" : "trivial"},
                        {"converged", c.converged},
                        {"max_dev_x", c.max_dev_x},
                        {"max_dev_y", c.max_dev_y}};
  }
  for (auto comp : {hema::Component::X, hema::Component::Y}) {
    const std::string key = std::string("period_") + hema::to_string(comp);
    try {
      d[key] = hema::period_to_json(hema::estimate_period(traj, comp, spec.t_discard));
    } catch (const hema::Error& e) {
      d[key] = {{"error", e.what()}};
    }
  }
  return d;
}

int cmd_simulate(const ConfigSource& src, const std::string& out_path, const std::string& svg_path) {
  const hema::RunSpec spec = src.spec();
  spec.validate();
  const hema::Trajectory traj = hema::simulate(spec.params, spec.history, spec.integrator);

  hema::json side;
  side["config"] = hema::run_spec_to_json(spec);
  side["equilibria"] = hema::equilibria_to_json(spec.params);
  side["diagnostics"] = run_summary(spec, traj);

  if (out_path == "-") {
    hema::write_trajectory_csv(std::cout, traj, spec.output_stride);
    std::cerr << side.dump(2) << '\n';
  } else {
    std::ofstream csv(out_path);
    if (!csv) throw hema::ConfigError("cannot write '" + out_path + "'");
    hema::write_trajectory_csv(csv, traj, spec.output_stride);
    std::ofstream js(out_path + ".json");
    js << side.dump(2) << '\n';
    std::cerr << side["diagnostics"].dump(2) << '\n';
  }
  if (!svg_path.empty()) {
    std::ofstream svg(svg_path);
    if (!svg) throw hema::ConfigError("cannot write '" + svg_path + "'");
    hema::write_trajectory_svg(svg, traj);
  }
  return kExitOk;
}

int cmd_history(const ConfigSource& src, const std::string& out_path) {
  const hema::RunSpec spec = src.spec();
  spec.params.validate();
  spec.history.validate();
  const hema::Trajectory h = hema::build_history(spec.params, spec.history);
  if (out_path.empty() || out_path == "-") {
    hema::write_trajectory_csv(std::cout, h);
  } else {
    std::ofstream csv(out_path);
    if (!csv) throw hema::ConfigError("cannot write '" + out_path + "'");
    hema::write_trajectory_csv(csv, h);
  }
  return kExitOk;
}

struct SweepArgs {
  std::string param;
  double from = 0.0;
  double to = 0.0;
  std::size_t count = 0;
  unsigned jobs = 1;
  bool simulate = true;
  std::string out;
};

struct SweepRow {
  double value = 0.0;
  std::string trivial;
  bool exists_positive = false;
  std::string positive;
  std::optional<double> beta_star;
  std::optional<double> linear_period;
  std::optional<double> sim_period;
  std::optional<bool> converged;
  std::string error;
};

SweepRow sweep_point(const hema::json& base, const ConfigSource& src, const SweepArgs& a, double value) {
  SweepRow row;
  row.value = value;
  try {
    hema::json doc = base;
    hema::apply_override(doc, a.param + "=" + hema::format_number(value));
    const hema::RunSpec spec = hema::run_spec_from_json(doc, src.base_dir());
    spec.validate();
    const hema::StabilityReport r = hema::stability_report(spec.params, spec.critical_tol);
    row.trivial = hema::to_string(r.trivial);
    row.exists_positive = r.positive.has_value();
    if (r.positive) row.positive = hema::to_string(*r.positive);
    row.beta_star = r.details.beta_star;
    if (r.hopf) row.linear_period = r.hopf->period;
    if (a.simulate) {
      const hema::Trajectory traj = hema::simulate(spec.params, spec.history, spec.integrator);
      hema::Equilibrium target;
      if (row.exists_positive) target = hema::positive_equilibrium(spec.params);
      row.converged = hema::convergence_check(traj, target, spec.window, spec.params.hill.theta).converged;
      try {
        row.sim_period = hema::estimate_period(traj, hema::Component::X, spec.t_discard).period;
      } catch (const hema::NotOscillatingError&) {
      }
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

int cmd_sweep(const ConfigSource& src, const SweepArgs& a) {
  if (a.count == 0) throw hema::ConfigError("sweep: empty range (count must be >= 1)");
  if (a.count > 1 && !(a.to > a.from)) throw hema::ConfigError("sweep: empty range (--to must exceed --from)");
  const hema::json base = src.document();
  {
    hema::json probe = base;
    hema::apply_override(probe, a.param + "=" + hema::format_number(a.from));
    hema::run_spec_from_json(probe, src.base_dir());
  }
  std::vector<double> values(a.count);
  for (std::size_t i = 0; i < a.count; ++i)
    values[i] = a.count == 1 ? a.from : a.from + (a.to - a.from) * static_cast<double>(i) / static_cast<double>(a.count - 1);

  std::vector<SweepRow> rows(a.count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < a.count; i = next++) rows[i] = sweep_point(base, src, a, values[i]);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(a.count)));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream file;
  if (!a.out.empty() && a.out != "-") {
    file.open(a.out);
    if (!file) throw hema::ConfigError("cannot write '" + a.out + "'");
  }
  std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
  auto opt = [](const std::optional<double>& v) { return v ? hema::format_number(*v) : std::string(); };
  out << a.param << ",trivial,exists_positive,positive,beta_star,linear_period,sim_period,converged,error\n";
  bool failed = false;
  for (const auto& r : rows) {
    out << hema::format_number(r.value) << ',' << r.trivial << ',' << (r.exists_positive ? "true" : "false") << ','
        << r.positive << ',' << opt(r.beta_star) << ',' << opt(r.linear_period) << ',' << opt(r.sim_period) << ','
        << (r.converged ? (*r.converged ? "true" : "false") : "") << ",\"" << r.error << "\"\n";
    failed = failed || !r.error.empty();
  }
  return failed ? kExitNumerical : kExitOk;
}

int cmd_verify(const hema::VerifyOptions& opt) {
  const auto checks = hema::run_verify(opt);
  for (const auto& c : checks) {
    std::printf("%-4s %-4s %-58s value=%-12.6g tol=%-10.3g %s\n", c.passed ? "PASS" : "FAIL", c.id.c_str(),
                c.name.c_str(), c.value, c.tolerance, c.detail.c_str());
  }
  const bool ok = hema::all_passed(checks);
  std::printf("%s\n", ok ? "all checks passed" : "verification FAILED");
  return ok ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and stability analysis of the resting/proliferating stem-cell model"};
  app.require_subcommand(1);

  ConfigSource src;
  bool as_json = false;

  auto* eq = app.add_subcommand("equilibria", "Equilibria, existence threshold and delta_tilde (JSON)");
  add_config_options(eq, src);

  auto* st = app.add_subcommand("stability", "Stability verdicts for E0 and E*");
  add_config_options(st, src);
  st->add_flag("--json", as_json, "Emit JSON instead of the verdict table");

  hema::HopfOptions hopt;
  auto* hp = app.add_subcommand("hopf", "Locate the Hopf crossing and the critical sensitivity n_c");
  add_config_options(hp, src);
  hp->add_flag("--json", as_json, "Emit JSON instead of the summary");
  hp->add_option("--omega-max", hopt.omega_max, "Upper end of the frequency scan (default 40*2pi/tau_max)");
  hp->add_option("--grid", hopt.grid, "Number of scan intervals")->check(CLI::PositiveNumber);

  std::string out_path;
  std::string svg_path;
  auto* sim = app.add_subcommand("simulate", "Integrate the system; CSV output plus JSON sidecar");
  add_config_options(sim, src);
  sim->add_option("-o,--out", out_path, "CSV path; the sidecar goes to <path>.json ('-': CSV to stdout, sidecar to stderr)")
      ->required();
  sim->add_option("--svg", svg_path, "Also write a line chart");

  auto* hist = app.add_subcommand("history", "Dump the initial segment on [0, tau_max] as CSV");
  add_config_options(hist, src);
  hist->add_option("-o,--out", out_path, "CSV path ('-' for stdout)");

  SweepArgs sw;
  auto* swp = app.add_subcommand("sweep", "Verdicts and periods over a parameter range");
  add_config_options(swp, src);
  swp->add_option("--param", sw.param, "Config key to vary (dotted keys allowed)")->required();
  swp->add_option("--from", sw.from, "First value")->required();
  swp->add_option("--to", sw.to, "Last value")->required();
  swp->add_option("--count", sw.count, "Number of points")->required();
  swp->add_option("--jobs", sw.jobs, "Worker threads")->check(CLI::PositiveNumber);
  swp->add_flag("!--no-simulate", sw.simulate, "Skip the simulation column");
  swp->add_option("-o,--out", sw.out, "CSV path ('-' for stdout)");

  hema::VerifyOptions vopt;
  auto* ver = app.add_subcommand("verify", "Run the oracle suite");
  ver->add_option("--order-step", vopt.order_step, "Coarse step of the step-halving test");
  ver->add_option("--step", vopt.step, "Step of the long runs");
  ver->add_flag("--gamma-zero", vopt.gamma_zero, "Also run the gamma = 0 checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (eq->parsed()) return cmd_equilibria(src);
    if (st->parsed()) return cmd_stability(src, as_json);
    if (hp->parsed()) return cmd_hopf(src, hopt, as_json);
    if (sim->parsed()) return cmd_simulate(src, out_path, svg_path);
    if (hist->parsed()) return cmd_history(src, out_path);
    if (swp->parsed()) return cmd_sweep(src, sw);
    if (ver->parsed()) return cmd_verify(vopt);
  } catch (const hema::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hema::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hema::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

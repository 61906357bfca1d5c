// Command-line front end: every analysis in the library as a subcommand
// with CSV or JSON output, plus canned demo recipes under reproduce-fig.
// Subcommands delegate to the library writers, so a file produced here is
// byte-identical to one produced through the API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "patchhopf/charroots.hpp"
#include "patchhopf/common.hpp"
#include "patchhopf/dde.hpp"
#include "patchhopf/equilibrium.hpp"
#include "patchhopf/network.hpp"
#include "patchhopf/spectral.hpp"

namespace ph = patchhopf;
using nlohmann::ordered_json;

namespace {

struct Options {
  std::string net = "paper9";
  std::string m_file;
  std::string history_file;
  std::string out;
  std::string format = "csv";
  int jobs = 0;
  long long seed = 0;

  double d = 0.0;
  double r = 0.0;
  double t_end = 50.0;
  double horizon = 50.0;
  double t_skip = -1.0;
  double d_min = 0.0, d_max = 0.0;
  int d_steps = 0;
  bool log_d = false;
  double lambda_min = 0.01, lambda_max = 10.0;
  int lambda_steps = 100;
  int steps_per_delay = 100;
  int grid_size = 512;
  int patch = 1;
  int stride = 1;
  bool first_only = false;
  bool no_stabilize = false;
  bool pattern = false;
  std::string fig;
};

Eigen::VectorXd read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ph::Error("io", "cannot open " + path);
  std::vector<double> vals;
  double x = 0.0;
  while (in >> x) vals.push_back(x);
  if (!in.eof())
    throw ph::Error("parse-error", "non-numeric entry in " + path);
  if (vals.empty()) throw ph::Error("parse-error", "no values in " + path);
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

ph::PatchNetwork resolve_network(const Options& opt) {
  if (opt.net == "paper9") return ph::paper_network_9();
  if (opt.net.rfind("grid:", 0) == 0) {
    int rows = 0, cols = 0;
    double coupling = 0.0;
    if (std::sscanf(opt.net.c_str(), "grid:%dx%d:%lf", &rows, &cols,
                    &coupling) != 3)
      throw ph::Error("validation",
                      "builtin grid spec must look like grid:RxC:coupling");
    if (opt.m_file.empty())
      throw ph::Error("validation", "grid networks need --m-file");
    return ph::grid_network(rows, cols, coupling, read_vector_file(opt.m_file));
  }
  return ph::load_network(opt.net);
}

template <typename Fn>
void with_output(const Options& opt, Fn&& fn) {
  if (opt.out.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(opt.out);
  if (!out) throw ph::Error("io", "cannot open " + opt.out + " for writing");
  fn(out);
}

bool want_json(const Options& opt) {
  if (opt.format == "json") return true;
  if (opt.format == "csv") return false;
  throw ph::Error("validation", "--format must be csv or json");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    q += c;
    if (c == '"') q += '"';
  }
  q += '"';
  return q;
}

void apply_jobs(const Options& opt) {
#ifdef _OPENMP
  if (opt.jobs > 0) omp_set_num_threads(opt.jobs);
#else
  (void)opt;
#endif
}

std::vector<double> parameter_grid(double lo, double hi, int steps, bool log) {
  if (steps < 2) throw ph::Error("validation", "grids need at least 2 steps");
  if (!(lo > 0.0) || !(hi > lo))
    throw ph::Error("validation", "grid bounds must satisfy 0 < min < max");
  std::vector<double> grid(steps);
  if (log) {
    const double la = std::log(lo), lb = std::log(hi);
    for (int i = 0; i < steps; ++i)
      grid[i] = std::exp(la + (lb - la) * i / (steps - 1));
  } else {
    for (int i = 0; i < steps; ++i)
      grid[i] = lo + (hi - lo) * i / (steps - 1);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

// Same perturbed start stability_verdict uses: the equilibrium with
// alternating +-5% so trajectories have something to relax or grow from.
Eigen::VectorXd default_history(const ph::PatchNetwork& net, double d) {
  Eigen::VectorXd u = ph::equilibrium(net, d).u;
  for (Eigen::Index j = 0; j < u.size(); ++j)
    u(j) *= (j % 2 == 0) ? 1.05 : 0.95;
  return u;
}

Eigen::VectorXd history_for(const Options& opt, const ph::PatchNetwork& net) {
  if (!opt.history_file.empty()) return read_vector_file(opt.history_file);
  return default_history(net, opt.d);
}

ordered_json equilibrium_json(const ph::EquilibriumState& st) {
  ordered_json j;
  j["d"] = st.d;
  j["u"] = std::vector<double>(st.u.data(), st.u.data() + st.u.size());
  j["residual"] = st.residual;
  j["method"] = ph::to_string(st.method);
  j["iterations"] = st.iterations;
  return j;
}

ordered_json hopf_point_json(const ph::HopfPoint& hp) {
  ordered_json j;
  j["d"] = hp.d;
  if (hp.branch)
    j["branch"] = *hp.branch;
  else
    j["branch"] = nullptr;
  j["theta"] = hp.theta;
  j["nu"] = hp.nu;
  j["r"] = hp.r;
  j["l"] = hp.l;
  j["transversal"] =
      hp.transversal ? ph::to_string(*hp.transversal) : "untested";
  j["residual"] = hp.residual;
  return j;
}

void dump_json(const ordered_json& j, std::ostream& out) {
  out << j.dump(2) << "\n";
}

int run_validate(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const ph::ValidationReport rep = ph::validate(net);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json j;
      j["ok"] = rep.ok;
      j["violations"] = ordered_json::array();
      for (const auto& [rule, detail] : rep.violations)
        j["violations"].push_back({rule, detail});
      dump_json(j, out);
    } else {
      out << "rule,detail\n";
      for (const auto& [rule, detail] : rep.violations)
        out << csv_quote(rule) << ',' << csv_quote(detail) << '\n';
    }
  });
  return rep.ok ? 0 : 1;
}

int run_spectral(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const std::vector<double> lambdas =
      parameter_grid(opt.lambda_min, opt.lambda_max, opt.lambda_steps, false);
  const std::vector<ph::SpectralPoint> points = ph::spectral_curve(net, lambdas);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json arr = ordered_json::array();
      for (const ph::SpectralPoint& p : points) {
        ordered_json j;
        j["lambda"] = p.lambda;
        j["s"] = p.s;
        j["s_prime"] = p.s_prime;
        arr.push_back(std::move(j));
      }
      dump_json(arr, out);
    } else {
      ph::write_spectral_csv(points, out);
    }
  });
  return 0;
}

int run_lambda_star(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const ph::ThresholdResult th = ph::lambda_star(net);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json j;
      j["lambda_star"] = th.lambda_star;
      j["d_star"] = th.d_star;
      j["s_prime"] = th.s_prime_at_star;
      j["eta_hat"] = std::vector<double>(
          th.eta_hat.data(), th.eta_hat.data() + th.eta_hat.size());
      dump_json(j, out);
    } else {
      out << "lambda_star,d_star,s_prime";
      for (Eigen::Index j = 0; j < th.eta_hat.size(); ++j)
        out << ",eta" << (j + 1);
      out << '\n'
          << ph::format_g17(th.lambda_star) << ','
          << ph::format_g17(th.d_star) << ','
          << ph::format_g17(th.s_prime_at_star);
      for (Eigen::Index j = 0; j < th.eta_hat.size(); ++j)
        out << ',' << ph::format_g17(th.eta_hat(j));
      out << '\n';
    }
  });
  return 0;
}

int run_equilibrium(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const ph::EquilibriumState st = ph::equilibrium(net, opt.d);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt))
      dump_json(equilibrium_json(st), out);
    else
      ph::write_branch_csv({st}, out);
  });
  return 0;
}

int run_equilibrium_sweep(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const std::vector<ph::EquilibriumState> states = ph::branch_sweep(
      net, parameter_grid(opt.d_min, opt.d_max, opt.d_steps, opt.log_d));
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json arr = ordered_json::array();
      for (const ph::EquilibriumState& st : states)
        arr.push_back(equilibrium_json(st));
      dump_json(arr, out);
    } else {
      ph::write_branch_csv(states, out);
    }
  });
  return 0;
}

ph::ScanOptions scan_options(const Options& opt) {
  ph::ScanOptions so;
  so.grid_size = opt.grid_size;
  so.stabilize = !opt.no_stabilize;
  return so;
}

int run_hopf(const Options& opt) {
  apply_jobs(opt);
  const ph::PatchNetwork net = resolve_network(opt);
  std::vector<ph::HopfPoint> points;
  if (opt.first_only)
    points.push_back(ph::first_hopf(net, opt.d, scan_options(opt)));
  else
    points = ph::hopf_scan(net, opt.d, scan_options(opt));
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json arr = ordered_json::array();
      for (const ph::HopfPoint& hp : points)
        arr.push_back(hopf_point_json(hp));
      dump_json(arr, out);
    } else {
      ph::write_hopf_csv(points, out);
    }
  });
  return 0;
}

int run_hopf_sweep(const Options& opt) {
  apply_jobs(opt);
  const ph::PatchNetwork net = resolve_network(opt);
  const std::vector<ph::HopfCurve> curves = ph::hopf_curves_sweep(
      net, parameter_grid(opt.d_min, opt.d_max, opt.d_steps, opt.log_d),
      scan_options(opt));
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ph::write_curves_json(curves, out);
    } else {
      // Pointwise flattening, curve by curve; the JSON form keeps the curve
      // structure.
      std::vector<ph::HopfPoint> flat;
      for (const ph::HopfCurve& c : curves)
        flat.insert(flat.end(), c.samples.begin(), c.samples.end());
      ph::write_hopf_csv(flat, out);
    }
  });
  return 0;
}

int run_transversality(const Options& opt) {
  apply_jobs(opt);
  const ph::PatchNetwork net = resolve_network(opt);
  const std::vector<ph::HopfPoint> points =
      ph::hopf_scan(net, opt.d, scan_options(opt));
  if (points.empty())
    throw ph::Error("no-crossing", "no purely imaginary root found at d = " +
                                       ph::format_g17(opt.d));
  const ph::HopfPoint& hp = points.front();
  const ph::TransversalityResult tv = ph::transversality(net, opt.d, hp);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json j;
      j["d"] = opt.d;
      j["r"] = hp.r;
      j["theta"] = hp.theta;
      j["nu"] = hp.nu;
      j["sign"] = ph::to_string(tv.sign);
      j["slope_fd"] = tv.slope_fd;
      j["slope_closed"] = tv.slope_closed;
      j["S_re"] = tv.S.real();
      j["S_im"] = tv.S.imag();
      j["epsilon"] = tv.epsilon;
      j["methods_agree"] = tv.methods_agree;
      dump_json(j, out);
    } else {
      out << "d,r,theta,nu,sign,slope_fd,slope_closed,S_re,S_im,epsilon,"
             "methods_agree\n"
          << ph::format_g17(opt.d) << ',' << ph::format_g17(hp.r) << ','
          << ph::format_g17(hp.theta) << ',' << ph::format_g17(hp.nu) << ','
          << ph::to_string(tv.sign) << ',' << ph::format_g17(tv.slope_fd)
          << ',' << ph::format_g17(tv.slope_closed) << ','
          << ph::format_g17(tv.S.real()) << ',' << ph::format_g17(tv.S.imag())
          << ',' << ph::format_g17(tv.epsilon) << ','
          << (tv.methods_agree ? "true" : "false") << '\n';
    }
  });
  return 0;
}

void write_trajectory(const Options& opt, const ph::Trajectory& traj) {
  with_output(opt, [&](std::ostream& out) {
    if (opt.pattern) {
      ph::pattern_export(traj, out, opt.stride);
    } else if (want_json(opt)) {
      ordered_json j;
      j["d"] = traj.d;
      j["r"] = traj.r;
      j["h"] = traj.h;
      j["t"] = std::vector<double>(traj.t.data(), traj.t.data() + traj.t.size());
      ordered_json rows = ordered_json::array();
      for (Eigen::Index i = 0; i < traj.u.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < traj.u.cols(); ++k)
          row.push_back(traj.u(i, k));
        rows.push_back(std::move(row));
      }
      j["u"] = std::move(rows);
      dump_json(j, out);
    } else {
      ph::write_trajectory_csv(traj, out);
    }
  });
}

int run_simulate(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const ph::Trajectory traj = ph::simulate(net, opt.d, opt.r,
                                           history_for(opt, net), opt.t_end,
                                           opt.steps_per_delay);
  write_trajectory(opt, traj);
  return 0;
}

int run_verdict(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const ph::Verdict v = ph::stability_verdict(net, opt.d, opt.r, opt.horizon,
                                              opt.steps_per_delay);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json j;
      j["verdict"] = ph::to_string(v);
      dump_json(j, out);
    } else {
      out << "verdict\n" << ph::to_string(v) << '\n';
    }
  });
  return 0;
}

int run_period(const Options& opt) {
  const ph::PatchNetwork net = resolve_network(opt);
  const ph::Trajectory traj = ph::simulate(net, opt.d, opt.r,
                                           history_for(opt, net), opt.t_end,
                                           opt.steps_per_delay);
  const double t_skip = opt.t_skip >= 0.0 ? opt.t_skip : 0.5 * opt.t_end;
  const ph::PeriodEstimate pe = ph::estimate_period(traj, opt.patch, t_skip);
  with_output(opt, [&](std::ostream& out) {
    if (want_json(opt)) {
      ordered_json j;
      j["period"] = pe.period;
      j["amplitude"] = pe.amplitude;
      j["cv"] = pe.cv;
      j["n_peaks"] = pe.n_peaks;
      j["peak_times"] = pe.peak_times;
      dump_json(j, out);
    } else {
      out << "period,amplitude,cv,n_peaks\n"
          << ph::format_g17(pe.period) << ',' << ph::format_g17(pe.amplitude)
          << ',' << ph::format_g17(pe.cv) << ',' << pe.n_peaks << '\n';
    }
  });
  return 0;
}

struct FigOverrides {
  bool d = false, r = false, t_end = false, net = false;
};

int run_reproduce_fig(Options opt, const FigOverrides& given) {
  if (opt.fig == "2L" || opt.fig == "2R" || opt.fig == "3") {
    if (!given.d) opt.d = (opt.fig == "2R") ? 10.0 : 0.5;
    if (!given.r) opt.r = (opt.fig == "2L") ? 0.087 : (opt.fig == "2R") ? 0.15 : 0.09;
    if (!given.t_end) opt.t_end = (opt.fig == "3") ? 150.0 : 50.0;
    return run_simulate(opt);
  }
  if (opt.fig == "4" || opt.fig == "5") {
    if (!given.net) opt.net = "grid:10x10:1.0";
    if (!given.d) opt.d = (opt.fig == "4") ? 10.0 : 15.0;
    if (!given.r)
      throw ph::Error("validation",
                      "figure " + opt.fig +
                          " recipes fix only d; pass --r (and --m-file)");
    opt.pattern = true;
    return run_simulate(opt);
  }
  throw ph::Error("validation", "unknown figure tag " + opt.fig +
                                    " (expected 2L, 2R, 3, 4, or 5)");
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--net", opt.net,
                  "network: paper9, grid:RxC:coupling, or a JSON file path");
  cmd->add_option("--m-file", opt.m_file,
                  "growth-rate file for grid networks (whitespace-separated)");
  cmd->add_option("--out", opt.out, "output path (default stdout)");
  cmd->add_option("--format", opt.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", opt.jobs, "worker threads for sweeps/scans");
  cmd->add_option("--seed", opt.seed,
                  "random seed (reserved; analyses are deterministic)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delayed logistic patch model toolkit"};
  app.require_subcommand(1);
  Options opt;
  int exit_code = 0;

  auto* validate = app.add_subcommand("validate", "check network invariants");
  add_common(validate, opt);
  validate->callback([&] { exit_code = run_validate(opt); });

  auto* spectral =
      app.add_subcommand("spectral", "sample the spectral bound curve s(lambda)");
  add_common(spectral, opt);
  spectral->add_option("--lambda-min", opt.lambda_min, "grid start (> 0)");
  spectral->add_option("--lambda-max", opt.lambda_max, "grid end");
  spectral->add_option("--lambda-steps", opt.lambda_steps, "grid points");
  spectral->callback([&] { exit_code = run_spectral(opt); });

  auto* lstar = app.add_subcommand(
      "lambda-star", "extinction threshold lambda_* and d_* = 1/lambda_*");
  add_common(lstar, opt);
  lstar->callback([&] { exit_code = run_lambda_star(opt); });

  auto* equil =
      app.add_subcommand("equilibrium", "positive equilibrium at one d");
  add_common(equil, opt);
  equil->add_option("--d", opt.d, "dispersal rate")->required();
  equil->callback([&] { exit_code = run_equilibrium(opt); });

  auto* esweep = app.add_subcommand("equilibrium-sweep",
                                    "equilibrium branch over a d grid");
  add_common(esweep, opt);
  esweep->add_option("--d-min", opt.d_min, "grid start")->required();
  esweep->add_option("--d-max", opt.d_max, "grid end")->required();
  esweep->add_option("--d-steps", opt.d_steps, "grid points")->required();
  esweep->add_flag("--log-d", opt.log_d, "logarithmic d spacing");
  esweep->callback([&] { exit_code = run_equilibrium_sweep(opt); });

  auto* hopf = app.add_subcommand(
      "hopf", "delay values with purely imaginary roots at one d");
  add_common(hopf, opt);
  hopf->add_option("--d", opt.d, "dispersal rate")->required();
  hopf->add_option("--grid-size", opt.grid_size, "initial theta grid (>= 64)");
  hopf->add_flag("--first", opt.first_only,
                 "only the smallest delay, with its transversality tag");
  hopf->add_flag("--no-stabilize", opt.no_stabilize,
                 "skip the grid-doubling stabilization pass");
  hopf->callback([&] { exit_code = run_hopf(opt); });

  auto* hsweep =
      app.add_subcommand("hopf-sweep", "Hopf curves over a d grid");
  add_common(hsweep, opt);
  hsweep->add_option("--d-min", opt.d_min, "grid start")->required();
  hsweep->add_option("--d-max", opt.d_max, "grid end")->required();
  hsweep->add_option("--d-steps", opt.d_steps, "grid points")->required();
  hsweep->add_flag("--log-d", opt.log_d, "logarithmic d spacing");
  hsweep->add_option("--grid-size", opt.grid_size, "initial theta grid");
  hsweep->callback([&] { exit_code = run_hopf_sweep(opt); });

  auto* trans = app.add_subcommand(
      "transversality", "crossing speed at the first Hopf point");
  add_common(trans, opt);
  trans->add_option("--d", opt.d, "dispersal rate")->required();
  trans->add_option("--grid-size", opt.grid_size, "initial theta grid");
  trans->callback([&] { exit_code = run_transversality(opt); });

  auto* sim = app.add_subcommand("simulate", "integrate the delayed system");
  add_common(sim, opt);
  sim->add_option("--d", opt.d, "dispersal rate")->required();
  sim->add_option("--r", opt.r, "delay (>= 0)")->required();
  sim->add_option("--t-end", opt.t_end, "integration horizon");
  sim->add_option("--steps-per-delay", opt.steps_per_delay,
                  "RK4 steps per delay interval (>= 20)");
  sim->add_option("--history-file", opt.history_file,
                  "constant history values (default: equilibrium +-5%)");
  sim->add_flag("--pattern", opt.pattern,
                "headerless per-patch matrix for pattern plots");
  sim->add_option("--stride", opt.stride, "row thinning for --pattern");
  sim->callback([&] { exit_code = run_simulate(opt); });

  auto* verd = app.add_subcommand(
      "verdict", "converges / oscillates / undecided at (d, r)");
  add_common(verd, opt);
  verd->add_option("--d", opt.d, "dispersal rate")->required();
  verd->add_option("--r", opt.r, "delay")->required();
  verd->add_option("--horizon", opt.horizon, "simulation horizon");
  verd->add_option("--steps-per-delay", opt.steps_per_delay,
                   "RK4 steps per delay interval");
  verd->callback([&] { exit_code = run_verdict(opt); });

  auto* per = app.add_subcommand("period", "peak statistics of one patch");
  add_common(per, opt);
  per->add_option("--d", opt.d, "dispersal rate")->required();
  per->add_option("--r", opt.r, "delay")->required();
  per->add_option("--t-end", opt.t_end, "integration horizon");
  per->add_option("--t-skip", opt.t_skip,
                  "transient to discard (default t_end/2)");
  per->add_option("--patch", opt.patch, "1-based patch index");
  per->add_option("--steps-per-delay", opt.steps_per_delay,
                  "RK4 steps per delay interval");
  per->add_option("--history-file", opt.history_file,
                  "constant history values");
  per->callback([&] { exit_code = run_period(opt); });

  auto* fig = app.add_subcommand("reproduce-fig",
                                 "canned demo recipes: 2L, 2R, 3, 4, 5");
  add_common(fig, opt);
  fig->add_option("tag", opt.fig, "recipe tag")->required();
  auto* fig_d = fig->add_option("--d", opt.d, "override dispersal rate");
  auto* fig_r = fig->add_option("--r", opt.r, "override delay");
  auto* fig_t = fig->add_option("--t-end", opt.t_end, "override horizon");
  fig->add_option("--steps-per-delay", opt.steps_per_delay,
                  "RK4 steps per delay interval");
  fig->add_option("--history-file", opt.history_file,
                  "constant history values");
  fig->add_option("--stride", opt.stride, "row thinning for pattern output");
  fig->callback([&] {
    FigOverrides given;
    given.d = fig_d->count() > 0;
    given.r = fig_r->count() > 0;
    given.t_end = fig_t->count() > 0;
    given.net = fig->count("--net") > 0;
    exit_code = run_reproduce_fig(opt, given);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const ph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }

  return exit_code;
}

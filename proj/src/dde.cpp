#include "patchhopf/dde.hpp"

#include <cmath>

#include "patchhopf/common.hpp"
#include "patchhopf/equilibrium.hpp"

namespace patchhopf {

namespace {

void check_state(const Eigen::VectorXd& u, double t) {
  for (int j = 0; j < u.size(); ++j) {
    if (!std::isfinite(u(j)))
      throw Error("nonfinite-state",
                  "patch " + std::to_string(j + 1) + " non-finite at t = " +
                      format_g17(t));
    if (u(j) < 0.0)
      throw Error("negative-state",
                  "patch " + std::to_string(j + 1) + " negative at t = " +
                      format_g17(t) + "; increase steps_per_delay");
  }
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converges: return "converges";
    case Verdict::oscillates: return "oscillates";
    default: return "undecided";
  }
}

Trajectory simulate(const PatchNetwork& net, double d, double r,
                    const Eigen::VectorXd& history, double t_end,
                    int steps_per_delay) {
  const int n = net.n();
  if (!(d > 0.0)) throw Error("validation", "d must be positive");
  if (!(r >= 0.0)) throw Error("validation", "delay must be >= 0");
  if (!(t_end > 0.0)) throw Error("validation", "t_end must be positive");
  if (steps_per_delay < 20)
    throw Error("validation", "steps_per_delay must be >= 20");
  if (history.size() != n)
    throw Error("dimension-mismatch", "history has " +
                                          std::to_string(history.size()) +
                                          " entries, expected " +
                                          std::to_string(n));
  if (history.minCoeff() < 0.0 || history.maxCoeff() <= 0.0)
    throw Error("validation",
                "history must be nonnegative with a positive entry");

  const Eigen::MatrixXd dD = d * net.D();
  const Eigen::VectorXd& m = net.m();
  auto f = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& u_delayed) {
    return (dD * u + u.cwiseProduct(m - u_delayed)).eval();
  };

  double h;
  long steps;
  const int N = steps_per_delay;  // steps per delay interval
  if (r > 0.0) {
    h = r / N;
  } else {
    // Delay-free runs have no grid to align with; bound the step by an RK4
    // stability estimate from Gershgorin radii of the Jacobian.
    double rho = 2.0 * d * net.D().diagonal().cwiseAbs().maxCoeff() +
                 2.0 * m.cwiseAbs().maxCoeff() + 1.0;
    h = std::min(t_end / N, 0.5 / rho);
  }
  steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  if (steps > 5000000L)
    throw Error("validation", "horizon needs " + std::to_string(steps) +
                                  " steps; reduce t_end or steps_per_delay");

  std::vector<Eigen::VectorXd> us(steps + 1), fs(steps + 1);
  us[0] = history;

  // Delayed sample exactly on the grid; negative indices are the constant
  // history. Index 0 belongs to the history when read as a delayed value
  // but carries the solution's right derivative for interpolation in [0, h].
  auto delayed_at = [&](long q) -> const Eigen::VectorXd& {
    return q < 0 ? history : us[q];
  };
  // u at the midpoint of [q*h, (q+1)*h] via cubic Hermite. Intervals fully
  // inside the history are exactly constant.
  auto delayed_mid = [&](long q) -> Eigen::VectorXd {
    if (q <= -1) return history;
    return 0.5 * (us[q] + us[q + 1]) + (h / 8.0) * (fs[q] - fs[q + 1]);
  };

  for (long k = 0; k < steps; ++k) {
    const Eigen::VectorXd& u = us[k];
    Eigen::VectorXd k1, k2, k3, k4;
    if (r > 0.0) {
      k1 = f(u, delayed_at(k - N));
      fs[k] = k1;
      Eigen::VectorXd umid = delayed_mid(k - N);
      k2 = f(u + (h / 2) * k1, umid);
      k3 = f(u + (h / 2) * k2, umid);
      k4 = f(u + h * k3, delayed_at(k - N + 1));
    } else {
      k1 = f(u, u);
      fs[k] = k1;
      Eigen::VectorXd s2 = u + (h / 2) * k1;
      k2 = f(s2, s2);
      Eigen::VectorXd s3 = u + (h / 2) * k2;
      k3 = f(s3, s3);
      Eigen::VectorXd s4 = u + h * k3;
      k4 = f(s4, s4);
    }
    us[k + 1] = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_state(us[k + 1], (k + 1) * h);
  }

  Trajectory traj;
  traj.d = d;
  traj.r = r;
  traj.h = h;
  traj.t.resize(steps + 1);
  traj.u.resize(steps + 1, n);
  for (long k = 0; k <= steps; ++k) {
    traj.t(k) = k * h;
    traj.u.row(k) = us[k].transpose();
  }
  return traj;
}

Verdict stability_verdict(const PatchNetwork& net, double d, double r,
                          double horizon, int steps_per_delay) {
  const EquilibriumState eq = equilibrium(net, d);
  Eigen::VectorXd history = eq.u;
  for (int j = 0; j < net.n(); ++j)
    history(j) *= (j % 2 == 0) ? 1.05 : 0.95;

  Trajectory traj = simulate(net, d, r, history, horizon, steps_per_delay);
  const long K = traj.u.rows();
  const double u1_star = eq.u(0);

  auto amplitude = [&](long lo, long hi) {
    double mn = traj.u(lo, 0), mx = traj.u(lo, 0);
    for (long k = lo; k < hi; ++k) {
      mn = std::min(mn, traj.u(k, 0));
      mx = std::max(mx, traj.u(k, 0));
    }
    return 0.5 * (mx - mn);
  };
  const double amp_mid = amplitude(K / 3, 2 * K / 3);
  const double amp_last = amplitude(2 * K / 3, K);

  // Fully decayed runs sit at rounding noise in both windows; classify on
  // the absolute level before looking at the ratio.
  if (amp_last < 1e-9 * std::max(1.0, std::abs(u1_star)))
    return Verdict::converges;
  const double ratio = amp_last / std::max(amp_mid, 1e-300);
  if (ratio < 0.2) return Verdict::converges;
  if (ratio > 0.9) return Verdict::oscillates;
  return Verdict::undecided;
}

PeriodEstimate estimate_period(const Trajectory& traj, int patch,
                               double t_skip) {
  const long K = traj.u.rows();
  const int n = static_cast<int>(traj.u.cols());
  if (patch < 1 || patch > n)
    throw Error("validation", "patch index out of range");
  if (!(t_skip < traj.t(K - 1)))
    throw Error("validation", "t_skip is past the end of the trajectory");

  long first = 0;
  while (first < K && traj.t(first) < t_skip) ++first;
  if (K - first < 3) throw Error("validation", "window too short");

  const int c = patch - 1;
  double mean = 0.0, mn = traj.u(first, c), mx = mn;
  for (long k = first; k < K; ++k) {
    mean += traj.u(k, c);
    mn = std::min(mn, traj.u(k, c));
    mx = std::max(mx, traj.u(k, c));
  }
  mean /= double(K - first);

  PeriodEstimate est;
  est.amplitude = 0.5 * (mx - mn);
  // A crest sitting midway between samples rounds to two equal values, so a
  // strict three-point test would skip it; treat any maximal run of equal
  // values entered from below and left from above as one peak at the run's
  // center, refined by the parabola through the run center and the two
  // strictly lower neighbors (equidistant from the center by construction).
  for (long k = std::max(first, 1L); k + 1 < K;) {
    const double y0 = traj.u(k, c);
    if (!(traj.u(k - 1, c) < y0) || !(y0 > mean)) {
      ++k;
      continue;
    }
    long j = k;
    while (j + 1 < K && traj.u(j + 1, c) == y0) ++j;
    if (j + 1 < K && traj.u(j + 1, c) < y0) {
      const double ym = traj.u(k - 1, c), yp = traj.u(j + 1, c);
      const double center = 0.5 * (traj.t(k) + traj.t(j));
      const double span = 0.5 * (traj.t(j) - traj.t(k)) + traj.h;
      const double denom = yp - 2.0 * y0 + ym;
      const double shift = denom < 0.0 ? -0.5 * (yp - ym) / denom : 0.0;
      est.peak_times.push_back(center + shift * span);
    }
    k = j + 1;
  }
  est.n_peaks = static_cast<int>(est.peak_times.size());
  if (est.n_peaks < 3)
    throw Error("insufficient-oscillation",
                "found " + std::to_string(est.n_peaks) +
                    " peaks, need at least 3");

  std::vector<double> gaps;
  for (size_t i = 1; i < est.peak_times.size(); ++i)
    gaps.push_back(est.peak_times[i] - est.peak_times[i - 1]);
  double gm = 0.0;
  for (double g : gaps) gm += g;
  gm /= double(gaps.size());
  double var = 0.0;
  for (double g : gaps) var += (g - gm) * (g - gm);
  var /= double(gaps.size());
  est.period = gm;
  est.cv = std::sqrt(var) / gm;
  return est;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out,
                          bool header) {
  const int n = static_cast<int>(traj.u.cols());
  if (header) {
    out << "t";
    for (int j = 1; j <= n; ++j) out << ",u" << j;
    out << "\n";
  }
  for (long k = 0; k < traj.u.rows(); ++k) {
    out << format_g17(traj.t(k));
    for (int j = 0; j < n; ++j) out << ',' << format_g17(traj.u(k, j));
    out << '\n';
  }
}

void pattern_export(const Trajectory& traj, std::ostream& out, int stride) {
  if (stride < 1) throw Error("validation", "stride must be >= 1");
  const int n = static_cast<int>(traj.u.cols());
  for (long k = 0; k < traj.u.rows(); k += stride) {
    for (int j = 0; j < n; ++j) {
      if (j) out << ',';
      out << format_g17(traj.u(k, j));
    }
    out << '\n';
  }
}

}  // namespace patchhopf

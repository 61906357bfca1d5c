#ifndef PATCHHOPF_DDE_HPP
#define PATCHHOPF_DDE_HPP

#include <ostream>
#include <vector>

#include "patchhopf/network.hpp"

namespace patchhopf {

// Solution samples of the delayed system on a uniform grid, t_k = k*h.
struct Trajectory {
  double d = 0.0;
  double r = 0.0;
  double h = 0.0;
  Eigen::VectorXd t;   // sample times
  Eigen::MatrixXd u;   // one row per sample, one column per patch
};

enum class Verdict { converges, oscillates, undecided };

const char* to_string(Verdict v);

struct PeriodEstimate {
  double period = 0.0;     // mean spacing of refined peak times
  double amplitude = 0.0;  // half peak-to-peak over the analysis window
  double cv = 0.0;         // coefficient of variation of the spacings
  int n_peaks = 0;
  std::vector<double> peak_times;
};

// Integrates du_j/dt = d sum_k D_jk u_k + u_j (m_j - u_j(t - r)) from the
// constant history by the method of steps: fixed-step RK4 with h =
// r/steps_per_delay, so every step stays inside one smoothness segment and
// the exact t - r sample is on the grid. Delayed values at half steps come
// from cubic Hermite interpolation of stored values and derivatives, which
// keeps the interpolation error at the integrator's order. For r = 0 a plain
// RK4 step count is derived from t_end and a Jacobian norm bound.
//
// history must be nonnegative with at least one positive entry;
// steps_per_delay >= 20. The run errors with "negative-state" or
// "nonfinite-state" if the integration leaves the admissible region.
Trajectory simulate(const PatchNetwork& net, double d, double r,
                    const Eigen::VectorXd& history, double t_end,
                    int steps_per_delay = 100);

// Classifies the long-run behavior at (d, r): simulates from the equilibrium
// perturbed by alternating +-5%, then compares the amplitude of
// u_1(t) - u_1^d over the last third of the horizon against the middle
// third. Ratio < 0.2 converges, > 0.9 oscillates, otherwise undecided; an
// amplitude already at rounding level counts as converged.
Verdict stability_verdict(const PatchNetwork& net, double d, double r,
                          double horizon, int steps_per_delay = 100);

// Peak statistics for one patch (1-based) over t >= t_skip. Peaks are strict
// local maxima above the window mean, refined by a quadratic fit through the
// three surrounding samples. Needs at least 3 peaks, else
// "insufficient-oscillation".
PeriodEstimate estimate_period(const Trajectory& traj, int patch,
                               double t_skip);

// CSV with header "t,u1,...,un" (header optional), 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out,
                          bool header = true);

// Writes the samples x n value matrix without time column or header, for
// space-time pattern rendering; stride thins rows.
void pattern_export(const Trajectory& traj, std::ostream& out, int stride = 1);

}  // namespace patchhopf

#endif

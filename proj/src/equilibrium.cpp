#include "patchhopf/equilibrium.hpp"

#include <cmath>
#include <limits>

#include "patchhopf/common.hpp"
#include "patchhopf/conversions.hpp"
#include "patchhopf/dde.hpp"
#include "patchhopf/spectral.hpp"

namespace patchhopf {

namespace {

// F_j = d * sum_k D_jk u_k + u_j (m_j - u_j), accumulated in extended
// precision. At large d the dispersal terms cancel almost completely, and
// what is left is the quantity gated by the 1e-10 residual contract, so
// plain double accumulation would report summation noise instead.
Eigen::VectorXd residual_vec(const PatchNetwork& net, double d,
                             const Eigen::VectorXd& u) {
  const int n = net.n();
  const Eigen::MatrixXd& D = net.D();
  Eigen::VectorXd F(n);
  for (int j = 0; j < n; ++j) {
    long double acc = 0.0L;
    for (int k = 0; k < n; ++k)
      acc += static_cast<long double>(d) * D(j, k) * u(k);
    acc += static_cast<long double>(u(j)) * (net.m()(j) - u(j));
    F(j) = static_cast<double>(acc);
  }
  return F;
}

struct NewtonOutcome {
  Eigen::VectorXd u;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

constexpr double kPositivityFloor = 1e-14;
constexpr double kResidualGate = 1e-10;

Eigen::VectorXd clip_floor(Eigen::VectorXd u) {
  for (int j = 0; j < u.size(); ++j) u(j) = std::max(u(j), kPositivityFloor);
  return u;
}

// A Newton run that slides toward a partially extinct root leaves those
// components pinned near the clip floor, while the positive root keeps every
// patch within a few orders of magnitude of the largest one.
bool interior(const Eigen::VectorXd& u) {
  return u.minCoeff() >
         std::max(100.0 * kPositivityFloor, 1e-8 * u.lpNorm<Eigen::Infinity>());
}

// Damped Newton on F with step halving and a positivity floor. Terminates
// when the residual stops improving; success means the best iterate passed
// the residual gate.
NewtonOutcome newton_solve(const PatchNetwork& net, double d,
                           const Eigen::VectorXd& guess) {
  NewtonOutcome out;
  Eigen::VectorXd u = clip_floor(guess);
  Eigen::VectorXd F = residual_vec(net, d, u);
  double norm = F.lpNorm<Eigen::Infinity>();
  out.u = u;
  out.residual = norm;

  for (int it = 0; it < 100; ++it) {
    if (!std::isfinite(norm)) break;

    Eigen::MatrixXd J = d * net.D();
    J.diagonal() += net.m() - 2.0 * u;
    Eigen::VectorXd step = J.partialPivLu().solve(-F);
    if (!step.allFinite()) break;

    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half, t *= 0.5) {
      Eigen::VectorXd u_try = clip_floor(u + t * step);
      Eigen::VectorXd F_try = residual_vec(net, d, u_try);
      double norm_try = F_try.lpNorm<Eigen::Infinity>();
      if (norm_try < (1.0 - 1e-4 * t) * norm) {
        u = u_try;
        F = F_try;
        norm = norm_try;
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (norm < out.residual) {
      out.u = u;
      out.residual = norm;
    }
    if (!accepted) break;  // stalled, usually at the rounding floor
  }
  // The gate widens once the representation floor of u itself (rounding of
  // each component pushed through the d-scaled dispersal terms) exceeds
  // 1e-10; below that scale the fixed gate applies unchanged.
  const double rep_floor = std::numeric_limits<double>::epsilon() * d *
                           net.D().cwiseAbs().rowwise().sum().maxCoeff() *
                           std::max(1.0, out.u.lpNorm<Eigen::Infinity>());
  out.converged = out.residual < std::max(kResidualGate, 4.0 * rep_floor);
  return out;
}

// Delay-free relaxation toward the equilibrium, used when Newton fails from
// the available guesses. Monotone dynamics make this globally convergent
// from positive data.
NewtonOutcome timestep_fallback(const PatchNetwork& net, double d,
                                const Eigen::VectorXd& guess) {
  Eigen::VectorXd u = clip_floor(guess);
  double min_m = 1.0;
  for (int j = 0; j < net.n(); ++j)
    if (net.m()(j) != 0.0) min_m = std::min(min_m, std::abs(net.m()(j)));
  const double t_cap = 1e6 / std::min(1.0, min_m);

  const double drift_floor =
      std::max(1e-12, 4.0 * std::numeric_limits<double>::epsilon() * d *
                          net.D().cwiseAbs().rowwise().sum().maxCoeff() *
                          std::max(1.0, net.m().cwiseAbs().maxCoeff()));
  double elapsed = 0.0;
  for (int chunks = 0; chunks < 500 && elapsed < t_cap; ++chunks) {
    const double chunk = std::min(20.0, t_cap - elapsed);
    Trajectory traj = simulate(net, d, 0.0, u, chunk, 20);
    u = traj.u.row(traj.u.rows() - 1).transpose();
    elapsed += chunk;
    if (residual_vec(net, d, u).lpNorm<Eigen::Infinity>() < drift_floor) break;
  }

  NewtonOutcome out = newton_solve(net, d, u);  // final polish
  out.iterations += static_cast<int>(elapsed);
  return out;
}

Eigen::VectorXd initial_guess(const PatchNetwork& net, double d) {
  const int n = net.n();
  if (d <= 1.0) {
    const double floor = 1e-3 * net.m().maxCoeff();
    Eigen::VectorXd u(n);
    for (int j = 0; j < n; ++j) u(j) = std::max(net.m()(j), floor);
    return u;
  }
  if (net.delta() > 0.0)
    return Eigen::VectorXd::Constant(n, net.delta() / n);
  // delta < 0, d above 1: seed from the threshold expansion. The xi
  // correction can push a component below zero away from the threshold, so
  // clip before handing the seed to the solver.
  const ThresholdExpansion ex = threshold_expansion(net);
  const double gap = lambda_from_d(d) - ex.lambda_star;
  return clip_floor(ex.alpha * gap * (ex.eta_hat + gap * ex.xi));
}

EquilibriumState finish(double d, const NewtonOutcome& out,
                        EquilibriumState::Method method) {
  if (out.u.minCoeff() <= 0.0)
    throw Error("solver-failure",
                "equilibrium lost positivity at d = " + format_g17(d));
  EquilibriumState st;
  st.d = d;
  st.u = out.u;
  st.residual = out.residual;
  st.method = method;
  st.iterations = out.iterations;
  return st;
}

void check_d_admissible(const PatchNetwork& net, double d) {
  if (!(d > 0.0))
    throw Error("validation", "d must be positive, got " + format_g17(d));
  if (net.delta() < 0.0) {
    const double dh = d_hat(net);
    if (d >= dh)
      throw Error("extinction-regime",
                  "no positive equilibrium (extinction regime): d = " +
                      format_g17(d) + " >= d_hat = " + format_g17(dh));
  }
}

}  // namespace

const char* to_string(EquilibriumState::Method method) {
  return method == EquilibriumState::Method::newton ? "newton" : "timestep";
}

double d_hat(const PatchNetwork& net) {
  if (net.delta() >= 0.0) return std::numeric_limits<double>::infinity();
  return lambda_star(net).d_star;
}

EquilibriumState equilibrium(const PatchNetwork& net, double d) {
  check_d_admissible(net, d);
  return equilibrium_from_guess(net, d, initial_guess(net, d));
}

EquilibriumState equilibrium_from_guess(const PatchNetwork& net, double d,
                                        const Eigen::VectorXd& guess) {
  check_d_admissible(net, d);
  if (guess.size() != net.n())
    throw Error("dimension-mismatch", "guess has wrong length");
  if (!guess.allFinite() || !(guess.minCoeff() > 0.0))
    throw Error("validation", "guess must be strictly positive and finite");

  NewtonOutcome out = newton_solve(net, d, guess);
  if (out.converged && interior(out.u))
    return finish(d, out, EquilibriumState::Method::newton);

  // Newton from a remote start can converge onto a partially extinct root.
  // Relaxation from the same positive data heads for the positive root
  // instead, so retry along that path before giving up.
  out = timestep_fallback(net, d, guess);
  if (out.converged && interior(out.u))
    return finish(d, out, EquilibriumState::Method::timestep);

  throw Error("solver-failure",
              "both solver paths failed at d = " + format_g17(d) +
                  " (best residual " + format_g17(out.residual) + ")");
}

Eigen::VectorXd equilibrium_limit_small_d(const PatchNetwork& net) {
  Eigen::VectorXd limit(net.n());
  for (int j = 0; j < net.n(); ++j) {
    const double mj = net.m()(j);
    if (mj == 0.0)
      throw Error("a3-violated",
                  "limit formula requires every m_j nonzero, m_" +
                      std::to_string(j + 1) + " = 0");
    limit(j) = std::max(mj, 0.0);
  }
  return limit;
}

Eigen::VectorXd equilibrium_limit_large_d(const PatchNetwork& net) {
  if (net.delta() <= 0.0)
    throw Error("delta-nonpositive",
                "large-d limit needs delta > 0, got " + format_g17(net.delta()));
  return Eigen::VectorXd::Constant(net.n(), net.delta() / net.n());
}

ThresholdExpansion threshold_expansion(const PatchNetwork& net) {
  const ThresholdResult thr = lambda_star(net);  // enforces delta < 0
  const int n = net.n();
  const Eigen::VectorXd& eta = thr.eta_hat;

  double num = 0.0, den = 0.0;
  for (int j = 0; j < n; ++j) {
    num += net.m()(j) * eta(j) * eta(j);
    den += eta(j) * eta(j) * eta(j);
  }

  ThresholdExpansion ex;
  ex.lambda_star = thr.lambda_star;
  ex.d_star = thr.d_star;
  ex.alpha = num / (thr.lambda_star * den);
  ex.eta_hat = eta;

  // B xi = rhs with B singular along eta; the orthogonality row makes the
  // stacked system square-rank, so least squares returns the exact solution.
  Eigen::MatrixXd B = net.D();
  B.diagonal() += thr.lambda_star * net.m();
  Eigen::VectorXd rhs(n);
  for (int j = 0; j < n; ++j)
    rhs(j) = thr.lambda_star * ex.alpha * eta(j) * eta(j) -
             net.m()(j) * eta(j);

  Eigen::MatrixXd A(n + 1, n);
  A.topRows(n) = B;
  A.row(n) = eta.transpose();
  Eigen::VectorXd b(n + 1);
  b.head(n) = rhs;
  b(n) = 0.0;
  ex.xi = A.colPivHouseholderQr().solve(b);
  ex.xi_residual = (B * ex.xi - rhs).lpNorm<Eigen::Infinity>();
  const double scale = B.cwiseAbs().rowwise().sum().maxCoeff() *
                           std::max(1.0, ex.xi.lpNorm<Eigen::Infinity>()) +
                       rhs.lpNorm<Eigen::Infinity>();
  if (ex.xi_residual > 1e-8 * std::max(1.0, scale))
    throw Error("solver-failure",
                "restricted correction system is numerically singular "
                "(residual " + format_g17(ex.xi_residual) + ")");
  return ex;
}

std::vector<EquilibriumState> branch_sweep(const PatchNetwork& net,
                                           const std::vector<double>& d_grid) {
  if (d_grid.empty()) throw Error("validation", "empty d grid");
  std::vector<EquilibriumState> states;
  states.reserve(d_grid.size());
  for (double d : d_grid) {
    if (states.empty())
      states.push_back(equilibrium(net, d));
    else
      states.push_back(equilibrium_from_guess(net, d, states.back().u));
  }
  return states;
}

void write_branch_csv(const std::vector<EquilibriumState>& states,
                      std::ostream& out) {
  if (states.empty()) throw Error("validation", "no states to write");
  const int n = static_cast<int>(states.front().u.size());
  out << "d";
  for (int j = 1; j <= n; ++j) out << ",u" << j;
  out << ",residual,method\n";
  for (const EquilibriumState& st : states) {
    out << format_g17(st.d);
    for (int j = 0; j < n; ++j) out << ',' << format_g17(st.u(j));
    out << ',' << format_g17(st.residual) << ',' << to_string(st.method)
        << '\n';
  }
}

}  // namespace patchhopf

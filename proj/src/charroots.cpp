#include "patchhopf/charroots.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "patchhopf/common.hpp"
#include "patchhopf/equilibrium.hpp"

namespace patchhopf {

namespace {

using cd = std::complex<double>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Real symmetric part d*D + diag(m - u); A(theta) subtracts the rotated
// diag(u) from the diagonal.
Eigen::MatrixXd symmetric_part(const PatchNetwork& net, double d,
                               const Eigen::VectorXd& u) {
  Eigen::MatrixXd S = d * net.D();
  S.diagonal() += net.m() - u;
  return S;
}

Eigen::MatrixXcd assemble(const Eigen::MatrixXd& S, const Eigen::VectorXd& u,
                          double theta) {
  Eigen::MatrixXcd A = S.cast<cd>();
  const cd phase = std::exp(cd(0.0, -theta));
  A.diagonal() -= phase * u.cast<cd>();
  return A;
}

Eigen::VectorXcd eigenvalues_at(const Eigen::MatrixXd& S,
                                const Eigen::VectorXd& u, double theta) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces;
  ces.compute(assemble(S, u, theta), /*computeEigenvectors=*/false);
  return ces.eigenvalues();
}

std::vector<Eigen::VectorXcd> eig_grid_impl(const Eigen::MatrixXd& S,
                                            const Eigen::VectorXd& u,
                                            const std::vector<double>& thetas,
                                            bool parallel) {
  std::vector<Eigen::VectorXcd> out(thetas.size());
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(thetas.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < count; ++i)
      out[i] = eigenvalues_at(S, u, thetas[i]);
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i)
      out[i] = eigenvalues_at(S, u, thetas[i]);
  }
  return out;
}

// Greedy matching of the previous branch ordering onto a fresh unordered
// eigenvalue set: assign globally closest pairs first. Reports a collision
// when some branch did not receive its overall nearest eigenvalue, which
// happens where branches nearly touch.
std::vector<int> match_branches(const Eigen::VectorXcd& prev,
                                const Eigen::VectorXcd& cur, bool* collision) {
  const int n = static_cast<int>(prev.size());
  struct Pair {
    double dist;
    int a, b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      pairs.push_back({std::abs(prev(a) - cur(b)), a, b});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    return std::tie(x.dist, x.a, x.b) < std::tie(y.dist, y.a, y.b);
  });

  std::vector<int> perm(n, -1);
  std::vector<char> taken(n, 0);
  int assigned = 0;
  for (const Pair& p : pairs) {
    if (perm[p.a] >= 0 || taken[p.b]) continue;
    perm[p.a] = p.b;
    taken[p.b] = 1;
    if (++assigned == n) break;
  }

  if (collision) {
    *collision = false;
    for (int a = 0; a < n && !*collision; ++a) {
      int nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int b = 0; b < n; ++b) {
        double dist = std::abs(prev(a) - cur(b));
        if (dist < best) {
          best = dist;
          nearest = b;
        }
      }
      if (nearest != perm[a]) *collision = true;
    }
  }
  return perm;
}

Eigen::VectorXcd apply_perm(const Eigen::VectorXcd& vals,
                            const std::vector<int>& perm) {
  Eigen::VectorXcd out(vals.size());
  for (int a = 0; a < vals.size(); ++a) out(a) = vals(perm[a]);
  return out;
}

struct ScanContext {
  const PatchNetwork* net = nullptr;
  double d = 0.0;
  Eigen::VectorXd u;
  Eigen::MatrixXd S;
  double scale = 0.0;  // infinity norm estimate of A
};

// Eigenvalue of A(theta) continuing a tracked branch: the one nearest to a
// linear prediction from the bracket endpoints.
cd continued_eigenvalue(const ScanContext& ctx, double theta, cd predicted) {
  Eigen::VectorXcd vals = eigenvalues_at(ctx.S, ctx.u, theta);
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < vals.size(); ++i) {
    double dist = std::abs(vals(i) - predicted);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return vals(best);
}

struct Crossing {
  double theta = 0.0;
  cd mu;
  double re_abs = 0.0;
};

// Safeguarded secant/bisection on Re mu along one branch inside a bracket
// with a sign change. Stops at |Re mu| < 1e-12 or when the bracket collapses
// to rounding width, returning the best point seen.
Crossing refine_crossing(const ScanContext& ctx, double a, double b, cd mu_a,
                         cd mu_b) {
  double ga = mu_a.real(), gb = mu_b.real();
  Crossing best;
  if (std::abs(ga) <= std::abs(gb)) {
    best = {a, mu_a, std::abs(ga)};
  } else {
    best = {b, mu_b, std::abs(gb)};
  }

  for (int it = 0; it < 128 && best.re_abs >= 1e-12; ++it) {
    const double width = b - a;
    if (width < 4.0 * std::numeric_limits<double>::epsilon() *
                    std::max(1.0, std::abs(b)))
      break;
    double ts = b - gb * width / (gb - ga);
    if (!(ts > a + 0.05 * width && ts < b - 0.05 * width))
      ts = 0.5 * (a + b);
    const cd pred = mu_a + (mu_b - mu_a) * ((ts - a) / width);
    const cd mu_s = continued_eigenvalue(ctx, ts, pred);
    const double gs = mu_s.real();
    if (std::abs(gs) < best.re_abs) best = {ts, mu_s, std::abs(gs)};
    if (gs == 0.0) break;
    if ((gs < 0.0) == (ga < 0.0)) {
      a = ts;
      mu_a = mu_s;
      ga = gs;
    } else {
      b = ts;
      mu_b = mu_s;
      gb = gs;
    }
  }
  return best;
}

// Null vector of B = A(theta) - i nu I by inverse iteration. B is nearly
// singular by construction, so a couple of solves against the LU factors
// blow up the null direction; renormalization keeps it finite.
Eigen::VectorXcd null_vector(const Eigen::MatrixXcd& B, double scale) {
  const int n = static_cast<int>(B.rows());
  Eigen::MatrixXcd Breg = B;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Breg);

  Eigen::VectorXcd x(n);
  for (int j = 0; j < n; ++j) x(j) = cd(1.0 + 0.01 * j, 0.001 * (j + 1));
  x.normalize();

  Eigen::VectorXcd best = x;
  double best_resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 6; ++it) {
    Eigen::VectorXcd y = lu.solve(x);
    if (!y.allFinite()) {
      // Exact singularity: nudge the diagonal and refactor.
      Breg.diagonal().array() += 1e-14 * scale;
      lu.compute(Breg);
      y = lu.solve(x);
      if (!y.allFinite()) break;
    }
    x = y.normalized();
    const double resid = (B * x).lpNorm<Eigen::Infinity>();
    if (resid < best_resid) {
      best_resid = resid;
      best = x;
    }
    if (resid < 1e-15 * std::max(1.0, scale)) break;
  }

  // Deterministic phase: rotate the largest entry onto the positive real
  // axis.
  int jmax = 0;
  for (int j = 1; j < n; ++j)
    if (std::abs(best(j)) > std::abs(best(jmax))) jmax = j;
  if (std::abs(best(jmax)) > 0.0) best *= std::abs(best(jmax)) / best(jmax);
  best.normalize();
  return best;
}

// Distinct favorable growth rates let small-d crossings be attributed to a
// source patch. Returns 0 when labeling is ambiguous or d is too large.
double favorable_spacing(const PatchNetwork& net) {
  std::vector<double> fav;
  for (int j = 0; j < net.n(); ++j)
    if (net.m()(j) > 0.0) fav.push_back(net.m()(j));
  if (fav.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(fav.begin(), fav.end());
  double spacing = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < fav.size(); ++i)
    spacing = std::min(spacing, fav[i] - fav[i - 1]);
  return spacing;
}

std::optional<int> small_d_label(const PatchNetwork& net, double d,
                                 double nu) {
  const double spacing = favorable_spacing(net);
  if (!(d < 0.1 * spacing)) return std::nullopt;
  int q = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < net.n(); ++j) {
    if (net.m()(j) <= 0.0) continue;
    const double dist = std::abs(nu - net.m()(j));
    if (dist < best) {
      best = dist;
      q = j + 1;
    }
  }
  return q < 0 ? std::nullopt : std::optional<int>(q);
}

std::vector<HopfPoint> scan_once(const ScanContext& ctx, int grid,
                                 bool parallel) {
  const int n = ctx.net->n();
  std::vector<double> thetas(grid + 1);
  for (int i = 0; i <= grid; ++i) thetas[i] = kTwoPi * i / grid;
  std::vector<Eigen::VectorXcd> eigs =
      eig_grid_impl(ctx.S, ctx.u, thetas, parallel);

  // Order branch 0 deterministically, then continue the ordering across the
  // grid by nearest-neighbor matching.
  std::vector<Eigen::VectorXcd> branches(grid + 1);
  {
    std::vector<int> idx(n);
    for (int j = 0; j < n; ++j) idx[j] = j;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      const cd &x = eigs[0](a), &y = eigs[0](b);
      return std::make_pair(x.real(), x.imag()) <
             std::make_pair(y.real(), y.imag());
    });
    branches[0] = apply_perm(eigs[0], idx);
  }
  for (int i = 1; i <= grid; ++i) {
    bool collision = false;
    std::vector<int> perm = match_branches(branches[i - 1], eigs[i], &collision);
    if (collision) {
      // Walk through the interval at 4x resolution so near-touching
      // branches keep their identities, then land on the original grid
      // point.
      Eigen::VectorXcd chain = branches[i - 1];
      for (int s = 1; s <= 3; ++s) {
        const double ts = thetas[i - 1] + (thetas[i] - thetas[i - 1]) * s / 4.0;
        const Eigen::VectorXcd vals = eigenvalues_at(ctx.S, ctx.u, ts);
        chain = apply_perm(vals, match_branches(chain, vals, nullptr));
      }
      perm = match_branches(chain, eigs[i], nullptr);
    }
    branches[i] = apply_perm(eigs[i], perm);
  }

  // Bracket sign changes of Re mu on every branch and refine each one. A
  // grid point where the solver returns Re mu exactly zero is already a
  // crossing and would defeat the product test, so take it directly.
  std::vector<Crossing> crossings;
  for (int b = 0; b < n; ++b) {
    for (int i = 0; i <= grid; ++i) {
      if (branches[i](b).real() == 0.0)
        crossings.push_back({thetas[i], branches[i](b), 0.0});
    }
    for (int i = 0; i < grid; ++i) {
      const double re0 = branches[i](b).real();
      const double re1 = branches[i + 1](b).real();
      if (!((re0 < 0.0 && re1 > 0.0) || (re0 > 0.0 && re1 < 0.0))) continue;
      crossings.push_back(refine_crossing(ctx, thetas[i], thetas[i + 1],
                                          branches[i](b), branches[i + 1](b)));
    }
  }

  // Keep nu > 0 away from the real axis and away from the theta = 0
  // endpoint, then merge duplicates found from adjacent brackets.
  std::vector<Crossing> kept;
  for (const Crossing& c : crossings) {
    if (c.theta <= 1e-12) continue;
    if (c.mu.imag() <= 1e-10) continue;
    bool dup = false;
    for (Crossing& k : kept) {
      if (std::abs(k.theta - c.theta) <=
              1e-9 * std::max(1.0, std::abs(k.theta)) &&
          std::abs(k.mu.imag() - c.mu.imag()) <=
              1e-9 * std::max(1.0, std::abs(k.mu.imag()))) {
        if (c.re_abs < k.re_abs) k = c;
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(c);
  }

  std::vector<HopfPoint> points;
  points.reserve(kept.size());
  for (const Crossing& c : kept) {
    HopfPoint hp;
    hp.d = ctx.d;
    hp.theta = c.theta;
    hp.nu = c.mu.imag();
    hp.r = c.theta / hp.nu;
    hp.l = 0;
    Eigen::MatrixXcd B = assemble(ctx.S, ctx.u, c.theta);
    B.diagonal().array() -= cd(0.0, hp.nu);
    hp.psi = null_vector(B, ctx.scale);
    hp.residual = (B * hp.psi).lpNorm<Eigen::Infinity>();
    hp.branch = small_d_label(*ctx.net, ctx.d, hp.nu);
    points.push_back(std::move(hp));
  }
  std::sort(points.begin(), points.end(), [](const HopfPoint& x,
                                             const HopfPoint& y) {
    return std::tie(x.r, x.theta) < std::tie(y.r, y.theta);
  });
  return points;
}

ScanContext make_context(const PatchNetwork& net, double d) {
  ScanContext ctx;
  ctx.net = &net;
  ctx.d = d;
  ctx.u = equilibrium(net, d).u;
  ctx.S = symmetric_part(net, d, ctx.u);
  ctx.scale = ctx.S.cwiseAbs().rowwise().sum().maxCoeff() +
              ctx.u.cwiseAbs().maxCoeff();
  return ctx;
}

// Root continuation in r near a Hopf point: Newton on the characteristic
// system with the anchor normalization phi^H psi = 1, phi fixed to the
// point's eigenvector.
std::optional<cd> track_root(const PatchNetwork& net, double d,
                             const Eigen::VectorXd& u, const HopfPoint& hp,
                             double r) {
  const int n = net.n();
  const Eigen::MatrixXcd base = symmetric_part(net, d, u).cast<cd>();
  const double scale =
      base.cwiseAbs().rowwise().sum().maxCoeff() + u.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * std::max(1.0, scale);

  Eigen::VectorXcd psi = hp.psi;
  const Eigen::VectorXcd phi = hp.psi;
  cd mu(0.0, hp.nu);

  for (int it = 0; it < 50; ++it) {
    const cd emr = std::exp(-mu * r);
    Eigen::MatrixXcd Delta = base;
    for (int j = 0; j < n; ++j) Delta(j, j) -= emr * u(j) + mu;

    Eigen::VectorXcd G1 = Delta * psi;
    const cd G2 = phi.dot(psi) - 1.0;
    const double gn = std::max(G1.lpNorm<Eigen::Infinity>(), std::abs(G2));
    if (gn < tol) return mu;

    Eigen::MatrixXcd J(n + 1, n + 1);
    J.topLeftCorner(n, n) = Delta;
    for (int j = 0; j < n; ++j) {
      J(j, n) = (r * emr * u(j) - 1.0) * psi(j);
      J(n, j) = std::conj(phi(j));
    }
    J(n, n) = 0.0;
    Eigen::VectorXcd rhs(n + 1);
    rhs.head(n) = -G1;
    rhs(n) = -G2;
    const Eigen::VectorXcd dz = J.partialPivLu().solve(rhs);
    if (!dz.allFinite()) return std::nullopt;
    psi += dz.head(n);
    mu += dz(n);
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(TransversalSign sign) {
  switch (sign) {
    case TransversalSign::positive: return "positive";
    case TransversalSign::negative: return "negative";
    default: return "inconclusive";
  }
}

Eigen::MatrixXcd char_matrix(const PatchNetwork& net, double d,
                             const Eigen::VectorXd& u, double theta) {
  if (u.size() != net.n())
    throw Error("dimension-mismatch", "u has wrong length");
  return assemble(symmetric_part(net, d, u), u, theta);
}

std::vector<Eigen::VectorXcd> eigenvalue_grid(const PatchNetwork& net,
                                              double d,
                                              const Eigen::VectorXd& u,
                                              const std::vector<double>& thetas,
                                              bool parallel) {
  if (u.size() != net.n())
    throw Error("dimension-mismatch", "u has wrong length");
  return eig_grid_impl(symmetric_part(net, d, u), u, thetas, parallel);
}

std::vector<HopfPoint> hopf_scan(const PatchNetwork& net, double d,
                                 const ScanOptions& opts) {
  if (opts.grid_size < 64)
    throw Error("validation", "grid_size must be >= 64");
  const ScanContext ctx = make_context(net, d);

  int grid = opts.grid_size;
  std::vector<HopfPoint> points = scan_once(ctx, grid, opts.parallel);
  if (opts.stabilize) {
    int unchanged = 0;
    for (int doubling = 0; unchanged < 2 && doubling < opts.max_doublings;
         ++doubling) {
      grid *= 2;
      std::vector<HopfPoint> next = scan_once(ctx, grid, opts.parallel);
      unchanged = (next.size() == points.size()) ? unchanged + 1 : 0;
      points = std::move(next);
    }
  }
  return points;
}

HopfPoint first_hopf(const PatchNetwork& net, double d,
                     const ScanOptions& opts) {
  std::vector<HopfPoint> points = hopf_scan(net, d, opts);
  if (points.empty())
    throw Error("no-crossing",
                "no purely imaginary root found at d = " + format_g17(d));
  HopfPoint hp = points.front();
  hp.transversal = transversality(net, d, hp).sign;
  return hp;
}

TransversalityResult transversality(const PatchNetwork& net, double d,
                                    const HopfPoint& hp) {
  const Eigen::VectorXd u = equilibrium(net, d).u;
  TransversalityResult res;

  cd sum_psi2 = 0.0, sum_upsi2 = 0.0;
  for (int j = 0; j < net.n(); ++j) {
    sum_psi2 += hp.psi(j) * hp.psi(j);
    sum_upsi2 += u(j) * hp.psi(j) * hp.psi(j);
  }
  const cd phase = std::exp(cd(0.0, -hp.theta));
  res.S = sum_psi2 - hp.r * phase * sum_upsi2;
  res.slope_closed = (cd(0.0, hp.nu) * phase * sum_upsi2 / res.S).real();

  res.epsilon = 1e-4 * hp.r;
  const std::optional<cd> plus = track_root(net, d, u, hp, hp.r + res.epsilon);
  const std::optional<cd> minus = track_root(net, d, u, hp, hp.r - res.epsilon);
  if (!plus || !minus) {
    res.sign = TransversalSign::inconclusive;
    res.slope_fd = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  res.slope_fd = (plus->real() - minus->real()) / (2.0 * res.epsilon);

  const double floor =
      1e-10 * std::max(1.0, std::max(std::abs(res.slope_closed),
                                     std::abs(res.slope_fd)));
  if (std::abs(res.slope_fd) < floor || std::abs(res.slope_closed) < floor ||
      (res.slope_fd > 0.0) != (res.slope_closed > 0.0)) {
    res.sign = TransversalSign::inconclusive;
    return res;
  }
  res.methods_agree = true;
  res.sign = res.slope_fd > 0.0 ? TransversalSign::positive
                                : TransversalSign::negative;
  return res;
}

SimplicityReport simplicity_probe(const PatchNetwork& net, double d,
                                  const HopfPoint& hp) {
  const Eigen::VectorXd u = equilibrium(net, d).u;
  SimplicityReport rep;

  cd sum_psi2 = 0.0, sum_upsi2 = 0.0;
  double norm2 = 0.0;
  for (int j = 0; j < net.n(); ++j) {
    sum_psi2 += hp.psi(j) * hp.psi(j);
    sum_upsi2 += u(j) * hp.psi(j) * hp.psi(j);
    norm2 += std::norm(hp.psi(j));
  }
  rep.S = sum_psi2 - hp.r * std::exp(cd(0.0, -hp.theta)) * sum_upsi2;
  rep.s_threshold =
      1e-6 * norm2 * (1.0 + hp.r * u.cwiseAbs().maxCoeff());
  rep.s_ok = std::abs(rep.S) > rep.s_threshold;

  Eigen::MatrixXcd B = char_matrix(net, d, u, hp.theta);
  B.diagonal().array() -= cd(0.0, hp.nu);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(B);
  const Eigen::VectorXd& sv = svd.singularValues();
  rep.sv_min = sv(sv.size() - 1);
  rep.sv_second = sv.size() > 1 ? sv(sv.size() - 2) : 0.0;
  rep.nullspace_simple = rep.sv_second > 1e3 * rep.sv_min;

  const double spacing = favorable_spacing(net);
  rep.degenerate_growth_rates = spacing <= 1e-12;
  rep.ok = rep.s_ok && rep.nullspace_simple;
  return rep;
}

double harmonic_delay(const HopfPoint& hp, int l) {
  if (l < 0) throw Error("validation", "harmonic index must be >= 0");
  return (hp.theta + kTwoPi * l) / hp.nu;
}

std::vector<HopfCurve> hopf_curves_sweep(const PatchNetwork& net,
                                         const std::vector<double>& d_grid,
                                         const ScanOptions& opts) {
  if (d_grid.empty()) throw Error("validation", "empty d grid");
  for (size_t i = 0; i < d_grid.size(); ++i) {
    if (!(d_grid[i] > 0.0))
      throw Error("validation", "d grid must be positive");
    if (i > 0 && !(d_grid[i] > d_grid[i - 1]))
      throw Error("validation", "d grid must be strictly increasing");
  }

  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(d_grid.size());
  std::vector<std::vector<HopfPoint>> scans(d_grid.size());
  std::vector<std::exception_ptr> errors(d_grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      scans[i] = hopf_scan(net, d_grid[i], opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  // Continuation bookkeeping: greedily extend open curves by relative
  // closeness in (theta, nu); anything beyond the 0.2 step bound starts or
  // ends a curve.
  std::vector<HopfCurve> open, done;
  int next_id = 0;
  for (size_t i = 0; i < scans.size(); ++i) {
    const std::vector<HopfPoint>& pts = scans[i];
    struct Pair {
      double dist;
      size_t curve, point;
    };
    std::vector<Pair> pairs;
    for (size_t c = 0; c < open.size(); ++c) {
      const HopfPoint& last = open[c].samples.back();
      for (size_t p = 0; p < pts.size(); ++p) {
        const double dist = std::max(
            std::abs(pts[p].theta - last.theta) / std::max(last.theta, 1e-6),
            std::abs(pts[p].nu - last.nu) / std::max(last.nu, 1e-6));
        if (dist <= 0.2) pairs.push_back({dist, c, p});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
      return std::tie(x.dist, x.curve, x.point) <
             std::tie(y.dist, y.curve, y.point);
    });

    std::vector<int> curve_match(open.size(), -1);
    std::vector<int> point_match(pts.size(), -1);
    for (const Pair& p : pairs) {
      if (curve_match[p.curve] >= 0 || point_match[p.point] >= 0) continue;
      curve_match[p.curve] = static_cast<int>(p.point);
      point_match[p.point] = static_cast<int>(p.curve);
    }

    std::vector<HopfCurve> still_open;
    for (size_t c = 0; c < open.size(); ++c) {
      if (curve_match[c] >= 0) {
        open[c].samples.push_back(pts[curve_match[c]]);
        still_open.push_back(std::move(open[c]));
      } else {
        // Distinguish a curve whose point was captured by a competitor from
        // one with no candidate inside the step bound.
        bool had_candidate = false;
        for (const Pair& p : pairs)
          if (p.curve == c) had_candidate = true;
        open[c].end_reason = had_candidate ? "merged" : "step-bound-exceeded";
        done.push_back(std::move(open[c]));
      }
    }
    open = std::move(still_open);

    for (size_t p = 0; p < pts.size(); ++p) {
      if (point_match[p] >= 0) continue;
      HopfCurve curve;
      curve.id = next_id++;
      curve.branch = pts[p].branch;
      curve.samples.push_back(pts[p]);
      open.push_back(std::move(curve));
    }
  }
  for (HopfCurve& c : open) {
    c.end_reason = "end-of-grid";
    done.push_back(std::move(c));
  }
  std::sort(done.begin(), done.end(),
            [](const HopfCurve& x, const HopfCurve& y) { return x.id < y.id; });
  return done;
}

void write_hopf_csv(const std::vector<HopfPoint>& points, std::ostream& out) {
  out << "d,branch,theta,nu,r,l,transversal\n";
  for (const HopfPoint& hp : points) {
    out << format_g17(hp.d) << ',';
    if (hp.branch) out << *hp.branch;
    out << ',' << format_g17(hp.theta) << ',' << format_g17(hp.nu) << ','
        << format_g17(hp.r) << ',' << hp.l << ','
        << (hp.transversal ? to_string(*hp.transversal) : "untested") << '\n';
  }
}

void write_curves_json(const std::vector<HopfCurve>& curves,
                       std::ostream& out) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const HopfCurve& c : curves) {
    nlohmann::ordered_json jc;
    jc["id"] = c.id;
    if (c.branch)
      jc["branch"] = *c.branch;
    else
      jc["branch"] = nullptr;
    jc["end_reason"] = c.end_reason;
    jc["samples"] = nlohmann::ordered_json::array();
    for (const HopfPoint& hp : c.samples) {
      nlohmann::ordered_json js;
      js["d"] = hp.d;
      js["theta"] = hp.theta;
      js["nu"] = hp.nu;
      js["r"] = hp.r;
      jc["samples"].push_back(std::move(js));
    }
    doc.push_back(std::move(jc));
  }
  out << doc.dump(2) << "\n";
}

}  // namespace patchhopf

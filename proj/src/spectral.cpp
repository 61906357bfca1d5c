#include "patchhopf/spectral.hpp"

#include <cmath>

#include "patchhopf/common.hpp"

namespace patchhopf {

namespace {

constexpr int kIterationCap = 100000;
constexpr int kNearDegenerateIters = 10000;

}  // namespace

SpectralPoint spectral_bound(const PatchNetwork& net, double lambda,
                             const Eigen::VectorXd* w_seed) {
  if (!(lambda >= 0.0))
    throw Error("validation", "lambda must be >= 0, got " + format_g17(lambda));

  const int n = net.n();
  Eigen::MatrixXd M = net.D();
  M.diagonal() += lambda * net.m();

  double sigma = 0.0;
  for (int j = 0; j < n; ++j) sigma = std::max(sigma, std::abs(M(j, j)));
  sigma += 1.0;

  Eigen::VectorXd v;
  if (w_seed && w_seed->size() == n && w_seed->minCoeff() > 0.0)
    v = w_seed->normalized();
  else
    v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));

  // Powers of M + sigma*I keep iterates nonnegative; the Rayleigh quotient
  // of M converges to s from any positive start. Residual comes for free
  // from the matvec already computed for the next iterate.
  SpectralPoint pt;
  pt.lambda = lambda;
  double rho_prev = std::numeric_limits<double>::quiet_NaN();
  int it = 0;
  for (; it < kIterationCap; ++it) {
    Eigen::VectorXd Mv = M * v;
    double rho = v.dot(Mv);
    double resid = (Mv - rho * v).lpNorm<Eigen::Infinity>();
    double tol = 1e-14 * std::max(1.0, std::abs(rho) + sigma);
    if (it > 0 && std::abs(rho - rho_prev) < tol && resid < 1e-10) {
      pt.s = rho;
      pt.residual = resid;
      break;
    }
    rho_prev = rho;
    v = Mv + sigma * v;
    v.normalize();
  }
  if (it == kIterationCap)
    throw Error("eigensolver-nonconvergence",
                "power iteration exceeded " + std::to_string(kIterationCap) +
                    " iterations at lambda = " + format_g17(lambda) +
                    " (dominant pair may be near-degenerate)");

  pt.iterations = it;
  pt.near_degenerate = it >= kNearDegenerateIters;

  if (v.minCoeff() <= 0.0)
    throw Error("eigensolver-nonconvergence",
                "eigenvector lost positivity at lambda = " + format_g17(lambda));
  pt.w = v / v.sum();

  double num = 0.0, den = 0.0;
  for (int j = 0; j < n; ++j) {
    num += net.m()(j) * pt.w(j) * pt.w(j);
    den += pt.w(j) * pt.w(j);
  }
  pt.s_prime = num / den;
  return pt;
}

std::vector<SpectralPoint> spectral_curve(const PatchNetwork& net,
                                          const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw Error("validation", "empty lambda grid");
  for (size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0))
      throw Error("validation", "lambda grid must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      throw Error("validation", "lambda grid must be strictly increasing");
  }

  std::vector<SpectralPoint> out;
  out.reserve(lambdas.size());
  const Eigen::VectorXd* seed = nullptr;
  for (double lambda : lambdas) {
    out.push_back(spectral_bound(net, lambda, seed));
    seed = &out.back().w;
  }
  return out;
}

ThresholdResult lambda_star(const PatchNetwork& net) {
  if (net.delta() >= 0.0)
    throw Error("delta-nonnegative",
                "threshold undefined: equilibrium exists for all d (delta = " +
                    format_g17(net.delta()) + ")");

  // Bracket the sign change. s < 0 on (0, lambda_star) because s(0) = 0 with
  // slope delta/n < 0, and s eventually grows like lambda * max(m) > 0.
  double hi = 1.0;
  SpectralPoint at_hi = spectral_bound(net, hi);
  while (at_hi.s <= 0.0) {
    if (hi > 1e15)
      throw Error("solver-failure", "no sign change found up to lambda = 1e15");
    hi *= 2.0;
    at_hi = spectral_bound(net, hi, &at_hi.w);
  }
  double lo = hi / 2.0;
  SpectralPoint at_lo = spectral_bound(net, lo, &at_hi.w);
  while (at_lo.s >= 0.0) {
    if (at_lo.s < 1e-12) break;  // landed on the root while bracketing
    if (lo < 1e-12)
      throw Error("solver-failure", "failed to bracket threshold from below");
    hi = lo;
    lo /= 2.0;
    at_lo = spectral_bound(net, lo, &at_lo.w);
  }

  // Safeguarded Newton on s(lambda): full steps while they stay inside the
  // bracket, bisection otherwise. s' > 0 near the root, so this is fast.
  double lambda = 0.5 * (lo + hi);
  SpectralPoint pt = spectral_bound(net, lambda, &at_lo.w);
  int it = 0;
  for (; it < 200 && std::abs(pt.s) >= 1e-12; ++it) {
    if (pt.s < 0.0)
      lo = lambda;
    else
      hi = lambda;
    double next = lambda - pt.s / pt.s_prime;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lambda = next;
    pt = spectral_bound(net, lambda, &pt.w);
  }
  if (std::abs(pt.s) >= 1e-12)
    throw Error("solver-failure",
                "threshold refinement stalled at |s| = " + format_g17(pt.s));

  ThresholdResult res;
  res.lambda_star = lambda;
  res.d_star = 1.0 / lambda;
  res.s_prime_at_star = pt.s_prime;
  res.eta_hat = pt.w;
  res.iterations = it;
  return res;
}

ConvexityReport convexity_certificate(const PatchNetwork& net,
                                      const std::vector<double>& lambdas) {
  if (lambdas.size() < 3)
    throw Error("validation", "convexity certificate needs at least 3 points");

  ConvexityReport rep;
  rep.lambdas = lambdas;
  for (const SpectralPoint& pt : spectral_curve(net, lambdas))
    rep.s.push_back(pt.s);

  double smax = 1.0;
  for (double s : rep.s) smax = std::max(smax, std::abs(s));
  const double span = lambdas.back() - lambdas.front();
  rep.tolerance = 1e-6 * smax / (span * span);

  rep.min_curvature = std::numeric_limits<double>::infinity();
  bool linear = true;
  for (size_t i = 1; i + 1 < lambdas.size(); ++i) {
    const double hm = lambdas[i] - lambdas[i - 1];
    const double hp = lambdas[i + 1] - lambdas[i];
    const double c =
        2.0 * ((rep.s[i + 1] - rep.s[i]) / hp - (rep.s[i] - rep.s[i - 1]) / hm) /
        (hp + hm);
    rep.curvature.push_back(c);
    rep.min_curvature = std::min(rep.min_curvature, c);
    if (c < -rep.tolerance) rep.violations.push_back(static_cast<int>(i));
    if (std::abs(c) > rep.tolerance) linear = false;
  }
  rep.is_linear = linear;

  const double mmax = net.m().maxCoeff(), mmin = net.m().minCoeff();
  rep.m_homogeneous = (mmax - mmin) <= 1e-12 * std::max(1.0, std::abs(mmax));
  return rep;
}

void write_spectral_csv(const std::vector<SpectralPoint>& points,
                        std::ostream& out) {
  out << "lambda,s,s_prime\n";
  for (const SpectralPoint& pt : points)
    out << format_g17(pt.lambda) << ',' << format_g17(pt.s) << ','
        << format_g17(pt.s_prime) << '\n';
}

}  // namespace patchhopf

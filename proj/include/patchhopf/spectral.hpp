#ifndef PATCHHOPF_SPECTRAL_HPP
#define PATCHHOPF_SPECTRAL_HPP

#include <ostream>
#include <vector>

#include "patchhopf/network.hpp"

namespace patchhopf {

// Largest eigenvalue s of lambda*diag(m) + D together with its positive
// eigenvector w (normalized to sum 1) and the slope s' of the eigenvalue
// curve, s' = sum(m_j w_j^2) / sum(w_j^2).
struct SpectralPoint {
  double lambda = 0.0;
  double s = 0.0;
  double s_prime = 0.0;
  Eigen::VectorXd w;
  // Diagnostics from the power iteration.
  double residual = 0.0;
  int iterations = 0;
  bool near_degenerate = false;
};

// Root lambda_star of s(lambda) = 0 on (0, inf) for networks with
// delta = sum(m_j) < 0, plus derived quantities used downstream.
struct ThresholdResult {
  double lambda_star = 0.0;
  double d_star = 0.0;        // 1 / lambda_star
  double s_prime_at_star = 0.0;
  Eigen::VectorXd eta_hat;    // eigenvector at the threshold, sum 1
  int iterations = 0;
};

struct ConvexityReport {
  std::vector<double> lambdas;
  std::vector<double> s;
  // Divided-difference curvature estimates, one per interior grid point.
  std::vector<double> curvature;
  double min_curvature = 0.0;
  double tolerance = 0.0;
  std::vector<int> violations;  // interior indices with curvature < -tolerance
  bool is_linear = false;       // all |curvature| <= tolerance
  bool m_homogeneous = false;
};

// Computes s(lambda) by shifted power iteration. The iteration matrix
// lambda*diag(m) + D + sigma*I with sigma = max_j|lambda*m_j + d_jj| + 1 is
// nonnegative with positive diagonal, so the iteration converges to the
// Perron pair from a positive start. An optional seed vector (e.g. the
// eigenvector from a neighboring lambda) accelerates curve sweeps.
// Requires lambda >= 0. Throws "eigensolver-nonconvergence" past the
// iteration cap; near-degenerate dominant pairs are flagged in diagnostics.
SpectralPoint spectral_bound(const PatchNetwork& net, double lambda,
                             const Eigen::VectorXd* w_seed = nullptr);

// Evaluates s along a positive increasing lambda grid, chaining eigenvector
// seeds between consecutive points.
std::vector<SpectralPoint> spectral_curve(const PatchNetwork& net,
                                          const std::vector<double>& lambdas);

// Solves s(lambda_star) = 0 by bracketing (doubling up from lambda = 1,
// halving down for the negative side) followed by safeguarded Newton steps
// using s' until |s| < 1e-12. Requires delta < 0; throws "delta-nonnegative"
// otherwise since the threshold does not exist.
ThresholdResult lambda_star(const PatchNetwork& net);

// Certifies convexity of s(lambda) on a grid (at least 3 points) via
// divided-difference curvature estimates, and records whether the curve is
// numerically linear, which should coincide with all m_j being equal.
ConvexityReport convexity_certificate(const PatchNetwork& net,
                                      const std::vector<double>& lambdas);

// CSV with header "lambda,s,s_prime", one row per point, 17 significant
// digits.
void write_spectral_csv(const std::vector<SpectralPoint>& points,
                        std::ostream& out);

}  // namespace patchhopf

#endif

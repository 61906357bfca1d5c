#ifndef PATCHHOPF_CHARROOTS_HPP
#define PATCHHOPF_CHARROOTS_HPP

#include <complex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "patchhopf/network.hpp"

namespace patchhopf {

enum class TransversalSign { positive, negative, inconclusive };

const char* to_string(TransversalSign sign);

// A purely imaginary characteristic root of the linearization at the
// positive equilibrium: A(theta) psi = i nu psi with
// A(theta) = d D + diag(m - u) - exp(-i theta) diag(u), delay r = theta/nu.
// Larger delays with the same (theta mod 2pi, nu) follow from the harmonic
// index l.
struct HopfPoint {
  double d = 0.0;
  double theta = 0.0;  // in (0, 2pi)
  double nu = 0.0;     // > 0
  double r = 0.0;      // (theta + 2 pi l) / nu
  int l = 0;
  Eigen::VectorXcd psi;  // unit vector, largest entry rotated to be real > 0
  std::optional<int> branch;  // source patch label at small d, 1-based
  std::optional<TransversalSign> transversal;
  double residual = 0.0;  // ||(A(theta) - i nu) psi||_inf
};

struct ScanOptions {
  int grid_size = 512;  // initial theta grid resolution, >= 64
  bool parallel = true; // OpenMP over theta for the eigenvalue grid
  // Re-scan with doubled grid until the crossing count is unchanged twice.
  bool stabilize = true;
  int max_doublings = 5;
};

struct HopfCurve {
  int id = 0;
  std::optional<int> branch;
  std::string end_reason;  // "end-of-grid", "merged", "step-bound-exceeded"
  std::vector<HopfPoint> samples;  // one per swept d, in grid order
};

struct TransversalityResult {
  TransversalSign sign = TransversalSign::inconclusive;
  double slope_fd = 0.0;      // centered difference of Re mu(r) across r0
  double slope_closed = 0.0;  // closed-form Re d(mu)/dr at the point
  std::complex<double> S;     // denominator sum(psi^2) - r e^{-i theta} sum(u psi^2)
  double epsilon = 0.0;       // step used for the finite difference
  bool methods_agree = false;
};

struct SimplicityReport {
  std::complex<double> S;
  double s_threshold = 0.0;
  bool s_ok = false;
  double sv_min = 0.0;     // smallest singular value of A(theta) - i nu I
  double sv_second = 0.0;  // second smallest
  bool nullspace_simple = false;  // sv_second > 1e3 * sv_min
  // Duplicate favorable growth rates make small-d branch labels ambiguous.
  bool degenerate_growth_rates = false;
  bool ok = false;
};

// A(theta) for a given equilibrium u.
Eigen::MatrixXcd char_matrix(const PatchNetwork& net, double d,
                             const Eigen::VectorXd& u, double theta);

// Eigenvalues of A(theta) for every theta in the list. This is the
// data-parallel kernel of the scan; the serial variant exists as the
// reference the parallel one is checked against (results are identical
// element for element since each theta is independent).
std::vector<Eigen::VectorXcd> eigenvalue_grid(const PatchNetwork& net,
                                              double d,
                                              const Eigen::VectorXd& u,
                                              const std::vector<double>& thetas,
                                              bool parallel);

// All delay values r with a purely imaginary root (harmonic index 0), sorted
// by r. Tracks eigenvalue branches over a theta grid by nearest-neighbor
// matching (ambiguous matches trigger a local 4x grid refinement), brackets
// sign changes of Re mu, and refines each crossing to |Re mu| < 1e-12 by
// safeguarded secant steps. Crossings with |Im mu| <= 1e-10 are dropped, as
// is the theta = 0 endpoint.
std::vector<HopfPoint> hopf_scan(const PatchNetwork& net, double d,
                                 const ScanOptions& opts = {});

// Smallest-delay point of the scan with its transversality tag attached.
// Throws "no-crossing" when the scan comes back empty.
HopfPoint first_hopf(const PatchNetwork& net, double d,
                     const ScanOptions& opts = {});

// Scans every d in a strictly increasing grid (in parallel) and associates
// points across consecutive d into curves; an association step exceeding
// the 0.2 relative bound in (theta, nu) closes the curve.
std::vector<HopfCurve> hopf_curves_sweep(const PatchNetwork& net,
                                         const std::vector<double>& d_grid,
                                         const ScanOptions& opts = {});

// Sign of d Re(mu)/dr at the point, computed two ways: tracking the root
// with a bordered Newton solve at r0 (1 +- 1e-4) and differencing, and the
// closed-form derivative through S. Disagreement or a degenerate slope
// yields "inconclusive".
TransversalityResult transversality(const PatchNetwork& net, double d,
                                    const HopfPoint& hp);

// Checks that the root is simple: |S| above 1e-6 * ||psi||^2 * (1 + r
// ||u||_inf) and a one-dimensional numerical null space (singular value gap
// of 1e3).
SimplicityReport simplicity_probe(const PatchNetwork& net, double d,
                                  const HopfPoint& hp);

// Delay of the l-th harmonic, (theta + 2 pi l) / nu.
double harmonic_delay(const HopfPoint& hp, int l);

// CSV with header "d,branch,theta,nu,r,l,transversal"; branch is empty when
// unlabeled, transversal is "untested" when the check has not run.
void write_hopf_csv(const std::vector<HopfPoint>& points, std::ostream& out);

// JSON array of curves: {"id", "branch" (null when unlabeled),
// "end_reason", "samples": [{"d", "theta", "nu", "r"}, ...]}.
void write_curves_json(const std::vector<HopfCurve>& curves,
                       std::ostream& out);

}  // namespace patchhopf

#endif

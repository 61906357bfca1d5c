#ifndef PATCHHOPF_EQUILIBRIUM_HPP
#define PATCHHOPF_EQUILIBRIUM_HPP

#include <ostream>
#include <vector>

#include "patchhopf/network.hpp"

namespace patchhopf {

// Positive root of F_j(u) = d * sum_k D_jk u_k + u_j (m_j - u_j) = 0.
struct EquilibriumState {
  enum class Method { newton, timestep };

  double d = 0.0;
  Eigen::VectorXd u;
  double residual = 0.0;  // max-norm of F at u
  Method method = Method::newton;
  int iterations = 0;
};

// Ingredients of the first-order branch expansion near the extinction
// threshold: u = alpha*(lambda - lambda_star)*(eta_hat + (lambda -
// lambda_star)*xi) + higher order, with lambda = 1/d.
struct ThresholdExpansion {
  double lambda_star = 0.0;
  double d_star = 0.0;
  double alpha = 0.0;
  Eigen::VectorXd eta_hat;
  Eigen::VectorXd xi;
  double xi_residual = 0.0;
};

const char* to_string(EquilibriumState::Method method);

// Dispersal level above which no positive equilibrium exists: 1/lambda_star
// when delta < 0, +infinity otherwise.
double d_hat(const PatchNetwork& net);

// Solves for the unique positive equilibrium at dispersal d (0 < d < d_hat).
// Damped Newton from a regime-dependent initial guess, falling back to time
// integration of the delay-free system plus a Newton polish when Newton
// stalls. Converged states satisfy residual < 1e-10. Throws
// "extinction-regime" for d >= d_hat and "solver-failure" if both paths fail.
EquilibriumState equilibrium(const PatchNetwork& net, double d);

// Same solve but starting from a caller-supplied positive guess. Used for
// continuation and for probing uniqueness from scattered starts.
EquilibriumState equilibrium_from_guess(const PatchNetwork& net, double d,
                                        const Eigen::VectorXd& guess);

// Small-d limit (m_j)_+ per patch. Requires every m_j nonzero; throws
// "a3-violated" otherwise because the limit formula breaks down at m_j = 0.
Eigen::VectorXd equilibrium_limit_small_d(const PatchNetwork& net);

// Large-d limit (delta/n) * (1,...,1). Requires delta > 0; throws
// "delta-nonpositive" otherwise (the population dies out for large d).
Eigen::VectorXd equilibrium_limit_large_d(const PatchNetwork& net);

// Expansion coefficients at the threshold (delta < 0 only):
// alpha = sum(m eta^2) / (lambda_star sum(eta^3)) and the correction xi
// solving the rank-deficient linear system restricted to sum(eta_j xi_j) = 0.
ThresholdExpansion threshold_expansion(const PatchNetwork& net);

// Equilibria along a d grid, warm-starting each solve from the previous
// solution.
std::vector<EquilibriumState> branch_sweep(const PatchNetwork& net,
                                           const std::vector<double>& d_grid);

// CSV with header "d,u1,...,un,residual,method", 17 significant digits.
void write_branch_csv(const std::vector<EquilibriumState>& states,
                      std::ostream& out);

}  // namespace patchhopf

#endif

#ifndef PATCHHOPF_CONVERSIONS_HPP
#define PATCHHOPF_CONVERSIONS_HPP

// The model can be written either with a dispersal rate d in front of the
// network Laplacian (variables d, r, frequency nu) or, after rescaling time
// by d, with a coefficient lambda = 1/d on the reaction term (variables
// lambda, tau). All analysis code works in (d, r); these conversions are the
// single place the rescaled variables are produced for reporting.

namespace patchhopf {

inline double lambda_from_d(double d) { return 1.0 / d; }
inline double d_from_lambda(double lambda) { return 1.0 / lambda; }

// Delay in rescaled time.
inline double tau_from_d_r(double d, double r) { return d * r; }
inline double r_from_lambda_tau(double lambda, double tau) { return lambda * tau; }

// Frequency in rescaled time; nu is the frequency in original time.
inline double nu_rescaled_from_nu(double nu, double d) { return nu / d; }

// The reduced frequency h = nu_rescaled / lambda. Substituting the two
// definitions shows h equals the original-time frequency nu itself.
inline double h_from_nu_rescaled(double nu_rescaled, double lambda) {
  return nu_rescaled / lambda;
}

}  // namespace patchhopf

#endif

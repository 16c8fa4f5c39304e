#pragma once

#include <complex>
#include <string>
#include <vector>

#include "oscillab/hermite.hpp"

namespace oscillab {

using Complex = std::complex<double>;

// Everything the exact wave functional needs from one (possibly random)
// trajectory pair (xi, eta) at a single time.
struct TrajectoryPoint {
  double t = 0.0;
  Complex xi{1.0, 0.0};
  Complex dxi{0.0, 1.0};
  double eta = 0.0;
  double deta = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;  // unwrapped phase of xi (needed only by psi_stc)
};

// Exact state with quantum number n for the trajectory realization:
// a frame transform of the stationary in-state,
//   psi = r^{-1/2} exp{i[deta (x-eta) + (dr/2r)(x-eta)^2 + sigma]}
//         phi_n((x-eta)/r) e^{-i(n+1/2) gamma}.
Complex psi_stc(int n, double x, const TrajectoryPoint& p, double omega_in);

// Coefficients of the bilinear-exponential generating function
//   c00 * exp(A z1^2 + B z2^2 + C z1 z2 + D z1 + L z2)
// whose scaled Taylor coefficients are the transition amplitudes.
// z1 tracks the out-state index, z2 the in-state index.
struct GeneratingCoefficients {
  Complex A, B, C, D, L, M, K;
  Complex prefactor;  // (2 sqrt(w_in w_out) / (K xi))^{1/2}, principal branch
  Complex c00() const { return prefactor * std::exp(M); }
};

GeneratingCoefficients generating_coefficients(Complex xi, Complex dxi,
                                               double eta, double deta,
                                               double sigma, double t,
                                               double omega_in,
                                               double omega_out);

GeneratingCoefficients generating_coefficients(const TrajectoryPoint& p,
                                               double omega_in,
                                               double omega_out);

// Transition amplitudes c[n][m] = <out_m | psi^(n)>, 0 <= n,m <= n_max,
// for one trajectory realization.
struct CoefficientMatrix {
  int n_max = 0;
  std::vector<Complex> c;  // (n_max+1)^2, row-major in (n, m)
  double t = 0.0;

  Complex operator()(int n, int m) const { return c[n * (n_max + 1) + m]; }
  // |sum_m |c_nm|^2 - 1|; grows when n_max truncates the expansion.
  double row_unitarity_defect(int n) const;
  void write_csv(const std::string& path) const;
};

// Scaled bivariate-Hermite recurrence on the Taylor coefficients of the
// generating function; O(n_max^2), no factorials.
CoefficientMatrix coefficients_cnm(const GeneratingCoefficients& gen, int n_max);

}  // namespace oscillab

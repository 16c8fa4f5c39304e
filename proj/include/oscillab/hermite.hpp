#pragma once

#include <vector>

namespace oscillab {

// Stationary oscillator eigenfunction
//   phi_n(x) = (omega/pi)^{1/4} / sqrt(2^n n!) e^{-omega x^2/2} H_n(sqrt(omega) x),
// evaluated through the normalized recurrence
//   hb_0 = pi^{-1/4} e^{-y^2/2},  hb_n = y sqrt(2/n) hb_{n-1} - sqrt((n-1)/n) hb_{n-2},
// which stays bounded for large n and |x| (no factorial overflow).
double eigenfunction(int n, double omega, double x);

// phi_0 .. phi_nmax at one point, sharing the recurrence.
std::vector<double> eigenfunction_column(int n_max, double omega, double x);

}  // namespace oscillab

#pragma once

#include <complex>
#include <vector>

#include "oscillab/classical.hpp"
#include "oscillab/grid.hpp"
#include "oscillab/scenario.hpp"

namespace oscillab {
namespace thermo {

using Complex = std::complex<double>;

// Planck form of the summed canonical weights, beta = omega_in / kT.
double planck_w0(double beta);
// Unnormalized canonical weights e^{-beta (m + 1/2)}, m = 0..m_max.
std::vector<double> canonical_weights(double beta, int m_max);

// Density-matrix kernel on a square x-grid.
struct DensityMatrixGrid {
  Axis x;
  std::vector<Complex> rho;  // n*n row-major, rho(x_i, x_j)
  Complex at(int i, int j) const { return rho[static_cast<std::size_t>(i) * x.n + j]; }
  double hermiticity_defect() const;  // max |rho_ij - conj(rho_ji)|
};

// Sp_x K = sqrt(omega_in/pi) Int K(x, x) dx
double trace_x(const DensityMatrixGrid& k, double omega_in);

// gain-loss balance of level occupations:
// w^(m) = sum_k [w0_k Delta_km - w0_m Delta_mk] + w0_m
double nonequilibrium_w(const std::vector<double>& w0,
                        const std::vector<double>& delta, int n_size, int m);
// 1 - sum_k Delta_mk: how much of row m the truncation lost
double truncation_defect(const std::vector<double>& delta, int n_size, int m);

// Spectrum diagnostics of a (Hermitian) kernel, with the quadrature weight
// folded in so eigenvalues approximate the integral operator's.
struct SpectrumDiagnostics {
  std::vector<double> eigenvalues;  // descending
  double lambda1 = 0.0;
  double rank_one_defect = 0.0;  // sum_{i >= 2} |lambda_i| / |lambda_1|
  double entropy = 0.0;          // -sum lambda ln lambda over positive lambda
};
// weight: multiply the kernel by `weight` before decomposing (use
// sqrt(omega/pi) * h for operator scaling, 1 for a plain matrix).
SpectrumDiagnostics spectrum_diagnostics(const std::vector<Complex>& kernel,
                                         int n, double weight);
SpectrumDiagnostics entropy_formal_partial(const DensityMatrixGrid& rho,
                                           double omega_in);

struct AveragedEntropy {
  double entropy_normalized = 0.0;  // of the trace-normalized spectrum
  double entropy_raw = 0.0;         // of the raw spectrum
  double trace = 0.0;
  double min_eigenvalue = 0.0;
};
AveragedEntropy entropy_averaged(const DensityMatrixGrid& rho_av,
                                 double omega_in);

// Ground-state stochastic density matrix for one frequency-noise realization
// at equal times, from (u3, u4) = Re, Im of dxi/xi and i3 = Int u3:
//   rho(x, x') = e^{-i3}/r(t1) exp{-u4 (x^2+x'^2)/2 + i u3 (x^2 - x'^2)/2}.
DensityMatrixGrid rho0_realization(const Axis& x, double u3, double u4,
                                   double i3, double r_t1);

struct Rho0Ensemble {
  DensityMatrixGrid averaged;
  std::size_t n_used = 0;
  std::size_t n_flagged = 0;
  double mean_trace = 0.0;
};
// MC average of the per-realization kernels at time t.
Rho0Ensemble build_rho0(const ScenarioConfig& config, const ClassicalSolution& cl,
                        const Axis& x, std::size_t n_paths, double t,
                        double dt = 0.0, int threads = 0);

// Ground level of the noisy oscillator: level + shift, broadening, lifetime,
// all functions of the dimensionless lambda (larger lambda = weaker noise;
// lambda = (omega^3/eps1)^(2/3)).
struct EnergyResult {
  double lambda = 1.0;
  double e0 = 0.0;         // omega/2 + shift
  double shift = 0.0;
  double broadening = 0.0;
  double lifetime = 0.0;
  double k1_integral = 0.0;
  double k2_integral = 0.0;
  double tail_sensitivity = 0.0;  // integral change when the domain is halved
};
struct GroundEnergyOptions {
  double u3_halfspan = 0.0;  // 0 -> max(60, 24 sqrt(lambda))
  int n_u3 = 6001;
  int n_u4 = 96;
  double omega_in = 1.0;
};
EnergyResult ground_energy(double lambda, const GroundEnergyOptions& opt = {});
// lambda from the scenario's (eps1, omega_in)
EnergyResult ground_energy_scaled(double eps1, double omega_in,
                                  GroundEnergyOptions opt = {});

}  // namespace thermo
}  // namespace oscillab

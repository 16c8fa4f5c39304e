#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "oscillab/scenario.hpp"

namespace oscillab {

using Complex = std::complex<double>;

// Deterministic trajectories of the unperturbed problem on a uniform grid:
//   xi0'' + omega0_sq(t) xi0 = 0,   xi0 ~ e^{i omega_in t} at the left end
//   eta0'' + omega0_sq(t) eta0 = f0(t),  eta0 = eta0' = 0 at the left end
// together with the unwrapped phase gamma0 of xi0, the classical action
// sigma, and the running force-response integral d(t).
// All samples carry derivatives, so evaluation between nodes is cubic
// Hermite and keeps the integrator's accuracy.
struct ClassicalSolution {
  std::vector<double> t;
  std::vector<double> xi01, xi02, dxi01, dxi02;
  std::vector<double> gamma0;      // continuous phase, gamma0(t_min) = omega_in t_min
  std::vector<double> eta0, deta0;
  std::vector<double> sigma;       // action integral along eta0
  std::vector<double> d_re, d_im;  // d(t) = i/sqrt(2 omega_in) Int xi0 f0 dt'
  std::vector<double> w2;          // omega0_sq samples (for Hermite slopes)
  std::vector<double> f;           // f0 samples
  double omega_in = 1.0;
  double omega_out = 1.0;

  Complex xi(double time) const;
  Complex dxi(double time) const;
  double r(double time) const;      // |xi0|, positive by the Wronskian
  double gamma(double time) const;  // unwrapped phase
  double tau(double time) const { return gamma(time) / omega_in; }
  double eta(double time) const;
  double deta(double time) const;
  double action(double time) const;
  Complex d(double time) const;

  // max_t |Im(conj(xi) dxi) - omega_in| over the grid
  double wronskian_defect() const;

  void write_csv(const std::string& path) const;
};

// Asymptotic content of xi0 and eta0 at the right end of the window:
//   xi0(t) = C1 e^{i omega_out t} + C2 e^{-i omega_out t}
//   d      = lim d(t) = sqrt(nu) e^{i beta}
struct AsymptoticData {
  Complex C1{1.0, 0.0};
  Complex C2{0.0, 0.0};
  double delta1 = 0.0;      // arg C1
  double delta2 = 0.0;      // arg C2
  double delta = 0.0;       // delta1 + delta2
  double rho = 0.0;         // |C2/C1|^2, in [0, 1)
  Complex d{0.0, 0.0};
  double nu = 0.0;          // |d|^2
  double beta = 0.0;        // arg d
  double fit_error = 0.0;   // max |xi0 - reconstruction| over the tail window
  // |(omega_out/omega_in)(|C1|^2 - |C2|^2) - 1|; zero for the exact solution
  double bogoliubov_defect = 0.0;
};

ClassicalSolution solve_classical(const ScenarioConfig& config);
// Spec-facing wrappers; both share solve_classical.
ClassicalSolution solve_xi0(const ScenarioConfig& config);
ClassicalSolution solve_eta0(const ScenarioConfig& config);

AsymptoticData extract_asymptotics(const ClassicalSolution& solution);

// Endpoint data and time-dependent frame of the characteristics that solve
// the first-order transport problem after the noise window closes.
struct CharacteristicFrame {
  double d1, d2, d3, d4, d5, d6;  // xi01, xi02, dxi01, dxi02, eta0, deta0 at t_e
  double t_e;
  double omega_in;
  const ClassicalSolution* solution;

  // e21 = d1 xi02 - d2 xi01, e22 = d4 xi01 - d3 xi02, e11 = e21', e12 = e22'
  double e11(double t) const;
  double e12(double t) const;
  double e21(double t) const;
  double e22(double t) const;
  double h1(double t) const;
  double h2(double t) const;
};

CharacteristicFrame make_frame(const ClassicalSolution& solution, double t_e);

// Forward characteristics map: first integrals (xi1..xi4) -> state (u1..u4)
// at time t. Identity at t = t_e. Throws on a vanishing denominator
// (e21 xi3 + e22)^2 + e21^2 xi4^2 = 0.
std::array<double, 4> characteristics_map(const CharacteristicFrame& frame,
                                          const std::array<double, 4>& xi_vars,
                                          double t);

// det d(u1..u4)/d(xi1..xi4) on the xi4 = 0 slice:
// omega_in^4 / (e21 xi3 + e22)^4.
double characteristics_jacobian(const CharacteristicFrame& frame,
                                const std::array<double, 4>& xi_vars, double t);

}  // namespace oscillab

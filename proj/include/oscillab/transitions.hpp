#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oscillab/classical.hpp"
#include "oscillab/fp.hpp"
#include "oscillab/scenario.hpp"
#include "oscillab/stationary.hpp"

namespace oscillab {
namespace transitions {

enum class Regime { Eps1Zero, Eps2ZeroFull, Eps2ZeroReduced, General, MonteCarlo };

std::string regime_name(Regime r);

struct TransitionTable {
  Regime regime = Regime::Eps1Zero;
  std::uint64_t scenario_hash = 0;
  int n_max = 0;
  std::vector<double> w;    // (n_max+1)^2 row-major in (n, m); NaN = not computed
  std::vector<double> err;  // stderr (MC) or internal consistency spread (grids)

  double at(int n, int m) const { return w[n * (n_max + 1) + m]; }
  double err_at(int n, int m) const { return err[n * (n_max + 1) + m]; }
  // sum_m W_nm over the computed row
  double row_sum(int n) const;
  void write_csv(const std::string& path) const;
};

// --- closed-form pipeline for pure force noise -----------------------------
struct Eps1ZeroOptions {
  int quad_order = 48;        // Gauss-Hermite nodes per axis
  int plateau_samples = 6;    // sample times across the final 20% of the window
  double plateau_rtol = 1e-4;
  double t_eval = 0.0;        // 0 -> t_max
};
// W_nm(t) = Int |c_nm(x1, x2, t)|^2 P1(x1, x2, t) dx1 dx2, with the long-time
// limit detected as a plateau over the end of the window.
TransitionTable w_nm_eps1_zero(const ScenarioConfig& config,
                               const ClassicalSolution& cl, int n_max,
                               const Eps1ZeroOptions& opt = {});

// --- full 4D representation for pure frequency noise -----------------------
struct Eps2ZeroFullOptions {
  GridShape shape4{};       // dims == 0 -> derived from a pilot ensemble
  double cfl = 0.4;
  double init_width_cells = 2.0;
  int threads = 0;
  double settle_periods = 1.0;  // post-window constancy check span
};
struct FullPipelineEntry {
  double w = 0.0;
  double drift = 0.0;  // relative change of the integral over the settle span
  GridFunction q;      // final sink-equation solution
};
FullPipelineEntry w_nm_eps2_zero_full_entry(const ScenarioConfig& config,
                                            const ClassicalSolution& cl, int n,
                                            int m,
                                            const Eps2ZeroFullOptions& opt);
TransitionTable w_nm_eps2_zero_full(const ScenarioConfig& config,
                                    const ClassicalSolution& cl, int n_max,
                                    const Eps2ZeroFullOptions& opt = {});

// --- reduced (stationary) representation ------------------------------------
struct ReducedOptions {
  GridShape shape3{};  // (xi1, xi2, xi3); dims == 0 -> default box
  GridShape shape4{};  // conjugate-solution domain; dims == 0 -> default box
  int gl_order = 64;   // tensor Gauss-Legendre order for Int qbar Hbar
  int threads = 0;
  fp::Reconstruction rec = fp::Reconstruction::Fromm;
};
TransitionTable w_nm_eps2_zero_reduced(const ScenarioConfig& config,
                                       const ClassicalSolution& cl,
                                       const ReducedOptions& opt = {});

// --- general case -----------------------------------------------------------
struct GeneralOptions {
  GridShape shape3{};
  GridShape shape4{};
  int gl_order = 64;
  int threads = 0;
};
TransitionTable w_nm_general(const ScenarioConfig& config,
                             const ClassicalSolution& cl,
                             const GeneralOptions& opt = {});

// --- weight functions --------------------------------------------------------
// Full-representation weights H_nm(u) for n, m in {0, 1}.
double h_weight(int n, int m, const std::array<double, 4>& u, double omega_in,
                double omega_out, double xi_t1_abs);

// Reduced weights built from asymptotic data and endpoint frame values.
struct ReducedWeights {
  double omega_in = 1.0, omega_out = 1.0, xi_t1_abs = 1.0;
  double mu1 = 0.0, mu2 = 0.0;
  double pref = 1.0;            // omega_in omega_out / (1 - rho)
  double c2 = 1.0, c1 = 0.0, c0 = 1.0;  // Sigma = pref (c2 x3^2 + 2 c1 x3 + c0)
  double sigma(double xi3) const;
  double hbar(int n, int m, double xi1, double xi2, double xi3) const;
};
ReducedWeights make_reduced_weights(const AsymptoticData& asym,
                                    const CharacteristicFrame& frame,
                                    double omega_in, double omega_out,
                                    double xi_t1_abs);

// Default stationary-state boxes used when options pass empty shapes.
GridShape default_shape3(const ScenarioConfig& config, int n_cells = 48);
GridShape default_shape4(const ScenarioConfig& config,
                         const ClassicalSolution& cl, int n12 = 10,
                         int n34 = 32);

}  // namespace transitions
}  // namespace oscillab

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oscillab/classical.hpp"
#include "oscillab/rng.hpp"
#include "oscillab/scenario.hpp"
#include "oscillab/wavefunction.hpp"

namespace oscillab {
namespace sde {

enum class DriftScheme { Euler, Heun };

struct SdeOptions {
  double dt = 0.0;  // 0 -> (2 pi / omega_in) / 200
  // Heun on the drift by default: the plain Euler drift map of an undamped
  // oscillator expands phase-space area by 1 + (omega h)^2 per step, which
  // biases long-window ensembles at the percent level. The noise increments
  // stay Euler-Maruyama either way.
  DriftScheme drift = DriftScheme::Heun;
  // Riccati guard: substep when |u3| h exceeds substep_target, flag the
  // trajectory once |u3| passes flag_threshold * omega_in.
  double substep_target = 0.03;
  double flag_threshold = 1e4;
  int max_substeps = 4096;

  double resolved_dt(const ScenarioConfig& c) const;
};

// Called after every accepted step with the current state.
using Observer = std::function<void(double t, const double* state, int dim)>;

// Force-noise trajectory (eta, deta) plus the running action.
struct EtaState {
  double eta = 0.0, deta = 0.0, sigma = 0.0;
  bool flagged = false;
};

// Full four-component state plus the integrals needed to rebuild xi:
//   xi(t) = xi0(t1) exp(i3 + i i4),  (u3, u4) = Re, Im of dxi/xi.
struct UState {
  double u1 = 0.0, u2 = 0.0, u3 = 0.0, u4 = 0.0;
  double i3 = 0.0, i4 = 0.0;
  double sigma = 0.0;
  bool flagged = false;
};

EtaState simulate_eta(const ScenarioConfig& config, const ClassicalSolution& cl,
                      NoiseStream& noise, double t_final, const SdeOptions& opt,
                      const Observer& obs = {});

// Frequency-noise system from t1 (force noise gated off by the scenario).
UState simulate_u(const ScenarioConfig& config, const ClassicalSolution& cl,
                  NoiseStream& noise, double t_final, const SdeOptions& opt,
                  const Observer& obs = {});

// General system: runs the appropriate reduced dynamics before
// max(t1, t2), then the full four-component SDE.
UState simulate_z(const ScenarioConfig& config, const ClassicalSolution& cl,
                  NoiseStream& noise, double t_final, const SdeOptions& opt,
                  const Observer& obs = {});

// Ito-substitution representation of the free-particle + force-noise case.
// State layout for observers: (Re xi1, Im xi1, Re xi2, Im xi2, Re xi3, Im xi3).
struct ItoState {
  Complex xi1{0.0, 0.0}, xi2{0.0, 0.0}, xi3{0.0, 0.0};
};

ItoState simulate_ito_wavefunction(double eps2, double t2, NoiseStream& noise,
                                   double t_final, const SdeOptions& opt,
                                   const Observer& obs = {});

// Amplitude-evaluation points for the two trajectory sources.
TrajectoryPoint point_eps1_zero(const ClassicalSolution& cl, const EtaState& s,
                                double t);
TrajectoryPoint point_from_u(const ClassicalSolution& cl, const UState& s,
                             double t1, double t);

// Deterministic ensemble reduction. Per-path observables are accumulated in
// fixed-size chunks and merged in a fixed order, so the result is
// bit-identical for any worker count. Throws if more than 1% of the paths
// came back flagged.
struct EnsembleStats {
  std::vector<double> mean;
  std::vector<double> sem;  // standard error of the mean
  std::size_t n_used = 0;
  std::size_t n_flagged = 0;
};

// path_fn fills obs[0..n_obs) for the given path id and returns true when the
// trajectory was flagged (its observables are then excluded).
EnsembleStats run_ensemble(
    std::uint64_t seed, std::size_t n_paths, std::size_t n_obs, int threads,
    const std::function<bool(std::uint64_t id, NoiseStream& ns, double* obs)>&
        path_fn);

// mean +- stderr of one scalar observable with the flag policy applied.
struct McEstimate {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n = 0;
  std::size_t flagged = 0;
};
McEstimate mc_average(const std::vector<double>& values,
                      const std::vector<unsigned char>& flags);

// MC transition-probability table: W[n][m] estimates of <|c_nm|^2> at t_eval.
struct McTransitionTable {
  int n_max = 0;
  std::vector<double> w;    // (n_max+1)^2
  std::vector<double> sem;  // same layout
  std::size_t n_paths = 0;
  std::size_t n_flagged = 0;
  double at(int n, int m) const { return w[n * (n_max + 1) + m]; }
  double sem_at(int n, int m) const { return sem[n * (n_max + 1) + m]; }
};

McTransitionTable mc_transition_table(const ScenarioConfig& config,
                                      const ClassicalSolution& cl,
                                      std::size_t n_paths, int n_max,
                                      double t_eval, const SdeOptions& opt,
                                      int threads);

// Flat binary ensemble checkpoint: magic "OSLB", version, N, dim, dt,
// then N * dim doubles.
void write_checkpoint(const std::string& path, double dt, int dim,
                      const std::vector<double>& states);
struct Checkpoint {
  double dt = 0.0;
  int dim = 0;
  std::vector<double> states;
};
Checkpoint read_checkpoint(const std::string& path);

int default_threads();

}  // namespace sde
}  // namespace oscillab

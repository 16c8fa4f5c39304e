#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "oscillab/profiles.hpp"

namespace oscillab {

// Complete problem instance for the randomly driven oscillator
//   H = -d^2/dx^2 / 2 + Omega^2(t) x^2 / 2 - F(t) x
//   Omega^2(t) = omega0_sq(t) + sqrt(2 eps1 p1(t)) f1(t) Theta(t - t1)
//   F(t)       = f0(t)        + sqrt(2 eps2 p2(t)) f2(t) Theta(t - t2)
// in natural units hbar = m = 1. The finite window [t_min, t_max] stands in
// for the infinite time axis; all profiles must sit at their asymptotic
// values at the window ends.
struct ScenarioConfig {
  double omega_in = 1.0;   // asymptotic frequency as t -> t_min
  double omega_out = 1.0;  // asymptotic frequency as t -> t_max

  TimeProfile omega0_sq = TimeProfile::constant(1.0);  // frequency^2 units
  TimeProfile f0 = TimeProfile::constant(0.0);         // regular force
  TimeProfile p1 = TimeProfile::constant(0.0);         // frequency-noise gate
  TimeProfile p2 = TimeProfile::constant(0.0);         // force-noise gate

  double eps1 = 0.0;  // frequency-noise strength, >= 0
  double eps2 = 0.0;  // force-noise strength, >= 0

  double t1 = 0.0;   // frequency noise activates for t > t1
  double t2 = 0.0;   // force noise activates for t > t2
  double t_e = 0.0;  // end of the unit noise window (reduced pipeline)

  double t_min = -20.0;
  double t_max = 60.0;

  std::uint64_t seed = 1;
  int n_max = 32;  // basis truncation for coefficient matrices

  int grid_nt = 4001;  // classical-solution sampling grid

  // Noise gates including the activation step: sqrt(2 eps_i p_i(t)) Theta(t-t_i).
  double noise_amp1(double t) const;
  double noise_amp2(double t) const;

  double period_in() const;  // 2 pi / omega_in
  std::string canonical_text() const;
  std::uint64_t hash() const;  // FNV-1a of the canonical text
};

// One failed invariant: which field, what went wrong.
struct Violation {
  std::string field;
  std::string message;
};

std::vector<Violation> validate(const ScenarioConfig& config);

// Pure profile evaluation; throws for out-of-range tabulated t.
double evaluate_profile(const TimeProfile& profile, double t);

// Key/value config file (one "key = value" per line, '#' comments).
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(std::istream& in);
void save_scenario(const ScenarioConfig& config, const std::string& path);

}  // namespace oscillab

#pragma once

#include <array>
#include <functional>
#include <vector>

#include "oscillab/fp.hpp"
#include "oscillab/grid.hpp"
#include "oscillab/rng.hpp"

namespace oscillab {
namespace kac {

// Diffusion generator given as drift + diffusion on a truncated grid;
// the sink is supplied separately by the functional below.
struct Generator {
  GridShape shape;
  std::function<double(int axis, const std::array<double, 4>& x)> drift;
  // symmetric diffusion matrix D = b b^T / 2; may be null for pure drift
  std::function<double(int a, int b, const std::array<double, 4>& x)> diffusion;
};

// Average target: < exp{ -Int_t0^t V1(state(tau), state(t)) dtau - V2(state(t)) } >
struct FunctionalSpec {
  std::function<double(const std::array<double, 4>& x,
                       const std::array<double, 4>& endpoint)>
      v1;  // null -> 0
  std::function<double(const std::array<double, 4>& endpoint)> v2;  // null -> 0
  double t0 = 0.0;
  double t = 1.0;
  bool v1_endpoint_dependent = false;
  int endpoint_points_per_axis = 9;
};

struct SolveOptions {
  std::array<double, 4> x0{};  // initial (delta) position
  double init_width_cells = 2.0;
  double cfl = 0.4;
  double dt_max = 1e30;
  int threads = 1;
};

// The family Q(., xp, t): one field per endpoint parameter xp (a single
// field when V1 ignores the endpoint).
struct QFamily {
  GridShape shape;
  std::vector<std::array<double, 4>> endpoints;
  std::vector<GridFunction> q;
  bool endpoint_dependent = false;
  // Q(x, x, t): interpolates across the endpoint family at xp = x.
  double diagonal(const std::array<double, 4>& x) const;
};

QFamily solve_q(const Generator& gen, const FunctionalSpec& fs,
                const SolveOptions& opt);

// Int e^{-V2(x)} Q(x, x, t) dx
double average(const QFamily& family, const FunctionalSpec& fs);

// Neumann/Duhamel terms Q_k and partial sums S_k = sum_{j<=k} (-1)^j Q_j;
// endpoint-independent V1 only.
struct NeumannResult {
  std::vector<GridFunction> partial_sums;  // index k = 0..k_max
  std::vector<double> term_norms;          // L2 norms of Q_k
  bool diverging = false;
};
NeumannResult neumann_terms(const Generator& gen, const FunctionalSpec& fs,
                            int k_max, const SolveOptions& opt);

// L2 norm of Q(t) + Int_t0^t dtau e^{(t-tau) L}[V1 Q(tau)] - Q0(t), computed
// with an independent time quadrature (n_tau slabs). With
// `substitute_q0` the (wrong) plain density replaces Q inside the integrand,
// which must inflate the residual to O(V1).
struct ResidualReport {
  double residual_norm = 0.0;
  double q0_norm = 0.0;
};
ResidualReport integral_equation_residual(const Generator& gen,
                                          const FunctionalSpec& fs,
                                          const SolveOptions& opt,
                                          int n_tau = 48,
                                          bool substitute_q0 = false);

// Euler-Maruyama MC of the same average for product-form functionals
// V1 = running(x) * endpoint_factor(x_t), starting from x0.
struct McKacResult {
  double mean = 0.0;
  double sem = 0.0;
};
McKacResult mc_kac_average(
    const Generator& gen, const std::array<double, 4>& x0, double t0, double t,
    double dt, std::size_t n_paths, std::uint64_t seed,
    const std::function<double(const std::array<double, 4>&)>& running,
    const std::function<double(const std::array<double, 4>&)>& endpoint_factor,
    const std::function<double(const std::array<double, 4>&)>& v2,
    int threads = 0);

}  // namespace kac
}  // namespace oscillab

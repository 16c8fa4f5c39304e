#pragma once

#include <array>
#include <functional>

#include "oscillab/fp.hpp"
#include "oscillab/grid.hpp"

namespace oscillab {
namespace fp {

// Decaying solution of (A - lambda) q = 0 with lambda the eigenvalue of the
// discretized operator nearest the shift. q is L2-normalized with positive
// dominant sign; `residual` is ||A q - lambda q|| / ||q||; `lambda` itself is
// the stationarity defect left by the domain truncation.
struct StationaryResult {
  GridFunction q;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Shifted inverse iteration on the assembled sparse operator (or its
// transpose, for conjugate/adjoint solutions). Intended for dims 1-3.
StationaryResult solve_stationary(const ExplicitFpEngine& engine, bool adjoint,
                                  double shift = 0.0, int max_iter = 100,
                                  double tol = 1e-10);

// Stationary solution by pseudo-time marching with the (transposed) one-step
// evolution operator; the workhorse for 4D conjugate solutions where a
// factorization does not fit. dt <= 0 picks the engine's stable step.
struct MarchingOptions {
  double dt = 0.0;
  double cfl = 0.6;
  long max_steps = 200000;
  long check_every = 50;
  double tol = 1e-9;  // relative field change per unit pseudo-time
};
StationaryResult solve_stationary_marching(const ExplicitFpEngine& engine,
                                           bool adjoint, GridFunction init,
                                           const MarchingOptions& opt = {});

// C = Y(u0) / Int Y|_{u4=0} qbar d^3u for a 3D qbar and a conjugate solution
// evaluated through `y_at` (interpolating a 4D grid or a known slice).
double normalization_constant(
    const GridFunction& qbar,
    const std::function<double(const std::array<double, 4>&)>& y_at,
    const std::array<double, 4>& u0);

}  // namespace fp
}  // namespace oscillab

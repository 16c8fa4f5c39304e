#pragma once

#include <array>
#include <functional>
#include <vector>

#include "oscillab/classical.hpp"
#include "oscillab/grid.hpp"
#include "oscillab/scenario.hpp"

namespace oscillab {
namespace fp {

// Closed-form Gaussian density of (eta, deta) once the force noise is on.
// Mean follows the deterministic trajectory; the covariance comes from the
// quadratures b1 = (1/w^2) Int q2 xi01^2, b3 = (1/w^2) Int q2 xi02^2,
// b2 = -(2/w^2) Int q2 xi01 xi02 with q2 = eps2 p2 Theta(t - t2), expressed
// in the rotating-frame coordinates
//   y1 = -[dxi01 (x1-eta0) - xi01 (x2-deta0)]/w,
//   y2 =  [dxi02 (x1-eta0) - xi02 (x2-deta0)]/w.
struct GaussianP1 {
  double t = 0.0;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double mean1 = 0.0, mean2 = 0.0;        // eta0(t), deta0(t)
  double s11 = 0.0, s12 = 0.0, s22 = 0.0;  // covariance of (x1, x2)
  double xi01 = 0.0, xi02 = 0.0, dxi01 = 0.0, dxi02 = 0.0;
  double omega_in = 1.0;
  bool degenerate = false;  // 4 b1 b3 - b2^2 <= 0 (delta limit at t -> t2+)

  double det_y() const { return 4.0 * b1 * b3 - b2 * b2; }
  double density(double x1, double x2) const;         // covariance form
  double density_y_form(double x1, double x2) const;  // rotating-frame form
};

GaussianP1 analytic_p1(const ScenarioConfig& config, const ClassicalSolution& cl,
                       double t);
GridFunction p1_grid(const GaussianP1& p, const Axis& a1, const Axis& a2);

// ---------------------------------------------------------------------------
// Generic explicit solver for divergence-form drift-diffusion(-sink)
// operators on 1-4D grids:
//   A P = -sum_a d_a(v_a P) + sum_a d_a(D_aa d_a P)
//         + sum_{a<b} 2 d_a d_b (D_ab P) - V P
// with absorbing-zero boundaries. Coefficients are sampled onto face/cell
// grids by refresh(t); D_ab must not depend on coordinates a or b (true for
// every operator in this project), which keeps the diffusion part symmetric
// and makes the exact transpose available for adjoint solves.
// ---------------------------------------------------------------------------

enum class Reconstruction { Fromm, Upwind1 };

// Algebraic-tail boundary model for axes whose stationary solutions decay
// like (x^2 + omega^2)^{power} and carry a through-current (the phase
// circulation of the frequency-noise system re-enters from +infinity):
// ghost cells extrapolate the edge value along that profile instead of
// absorbing to zero.
struct TailGhost {
  int axis = -1;
  double omega2 = 1.0;
  double power = -0.5;
};

struct FpCoefficients {
  std::function<double(int axis, const std::array<double, 4>& x_face, double t)>
      velocity;
  std::function<double(int a, int b, const std::array<double, 4>& x_cell,
                       double t)>
      diffusion;  // optional
  std::function<double(const std::array<double, 4>& x_cell, double t)>
      sink;  // optional
  std::vector<TailGhost> tails;
};

struct MatrixEntry {
  std::size_t row, col;
  double val;
};

class ExplicitFpEngine {
 public:
  ExplicitFpEngine(const GridShape& shape, FpCoefficients coeffs,
                   Reconstruction rec = Reconstruction::Fromm, int threads = 0);

  void refresh(double t);
  double sampled_time() const { return sampled_t_; }

  // out = A in (or A^T in)
  void apply(const double* in, double* out, bool transpose) const;
  void heun_step(std::vector<double>& field, double dt, bool transpose) const;
  double stable_dt(double cfl) const;

  const GridShape& shape() const { return shape_; }
  std::vector<MatrixEntry> matrix_entries() const;

 private:
  void add_advection(const double* in, double* out, bool transpose) const;
  void add_diffusion(const double* in, double* out) const;
  void add_sink(const double* in, double* out) const;

  GridShape shape_;
  FpCoefficients co_;
  Reconstruction rec_;
  int threads_;
  double sampled_t_ = 0.0;
  std::array<std::vector<double>, 4> vface_;
  std::array<std::vector<double>, 4> daa_;
  std::vector<std::array<int, 2>> mixed_pairs_;
  std::vector<std::vector<double>> dab_;
  std::vector<double> sink_;
  bool has_diffusion_ = false;
  bool has_sink_ = false;
  // ghost factors per axis: value at 1 and 2 cells outside each end,
  // relative to the edge cell (zero = absorbing)
  std::array<std::array<double, 4>, 4> ghost_{};  // [axis][lo1, lo2, hi1, hi2]
  // asymptotic-profile value at the two boundary faces, relative to the edge
  // cell; nonzero only on tail axes
  std::array<std::array<double, 2>, 4> ghost_face_{};
  mutable std::vector<double> scratch_;
};

// Paper operators on the four-component state (eta, deta, Re dxi/xi, Im dxi/xi):
// both noise channels gated by the scenario; sink strength p_nm (0 = none).
ExplicitFpEngine make_fp4d_engine(const ScenarioConfig& config,
                                  const GridShape& shape4, double p_nm,
                                  int threads = 0);

// Shortened stationary operator on (xi1, xi2, xi3) and its low-dimensional
// relatives; constant coefficients.
struct StationaryParams {
  double omega = 1.0;
  double f0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double p_nm = 1.0;
};

// Constant-coefficient 4D operator (unit gates, fixed frequency/force), the
// stationary limit used by conjugate solutions.
ExplicitFpEngine make_fp4d_stationary_engine(const StationaryParams& par,
                                             const GridShape& shape4,
                                             int threads = 0);

ExplicitFpEngine make_shortened3_engine(const StationaryParams& par,
                                        const GridShape& shape3,
                                        Reconstruction rec = Reconstruction::Fromm,
                                        int threads = 0);
// (u3, u4) sector, forward form; the conjugate solve uses its transpose.
ExplicitFpEngine make_ricatti2_engine(const StationaryParams& par,
                                      const GridShape& shape2,
                                      Reconstruction rec = Reconstruction::Fromm);
// u3 only (the 1D stationary equation of the ground-energy computation).
ExplicitFpEngine make_ricatti1_engine(const StationaryParams& par,
                                      const GridShape& shape1,
                                      Reconstruction rec = Reconstruction::Fromm);

// ---------------------------------------------------------------------------
// 2D solver for the force-noise density: Strang split with implicit
// (Crank-Nicolson) diffusion along x2 and explicit Heun/Fromm advection.
// ---------------------------------------------------------------------------
struct Fp2dOptions {
  double cfl = 0.35;
  double dt_max = 1e30;
  Reconstruction rec = Reconstruction::Fromm;
  int threads = 0;
};

struct Fp2dDiagnostics {
  double mass_initial = 0.0;
  double mass_final = 0.0;
  long steps = 0;
};

GridFunction solve_fp2d(const ScenarioConfig& config, GridFunction init,
                        double t0, double t1, const Fp2dOptions& opt = {},
                        Fp2dDiagnostics* diag = nullptr);

}  // namespace fp
}  // namespace oscillab

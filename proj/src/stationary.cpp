#include "oscillab/stationary.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace oscillab {
namespace fp {

namespace {

Eigen::SparseMatrix<double> assemble(const ExplicitFpEngine& engine,
                                     bool adjoint) {
  const auto entries = engine.matrix_entries();
  const auto n = static_cast<Eigen::Index>(engine.shape().size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries.size());
  for (const MatrixEntry& e : entries) {
    const auto r = static_cast<Eigen::Index>(adjoint ? e.col : e.row);
    const auto c = static_cast<Eigen::Index>(adjoint ? e.row : e.col);
    trips.emplace_back(r, c, e.val);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

void fix_sign(GridFunction& q) {
  double best = 0.0;
  for (double x : q.v)
    if (std::abs(x) > std::abs(best)) best = x;
  if (best < 0.0)
    for (double& x : q.v) x = -x;
}

}  // namespace

StationaryResult solve_stationary(const ExplicitFpEngine& engine, bool adjoint,
                                  double shift, int max_iter, double tol) {
  Eigen::SparseMatrix<double> A = assemble(engine, adjoint);
  const Eigen::Index n = A.rows();
  Eigen::SparseMatrix<double> M = A;
  if (shift != 0.0) {
    Eigen::SparseMatrix<double> I(n, n);
    I.setIdentity();
    M = A - shift * I;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success) {
    // nearly singular at the target eigenvalue: nudge the shift
    Eigen::SparseMatrix<double> I(n, n);
    I.setIdentity();
    M = A - (shift + 1e-10) * I;
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("solve_stationary: LU factorization failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  x.normalize();
  StationaryResult res;
  double lambda = shift;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    if (!y.allFinite())
      throw std::runtime_error("solve_stationary: inverse iteration diverged");
    y.normalize();
    const Eigen::VectorXd Ay = A * y;
    lambda = y.dot(Ay);
    const double resid = (Ay - lambda * y).norm();
    res.iterations = it + 1;
    x = y;
    if (resid < tol * std::max(1.0, std::abs(lambda))) break;
  }
  res.q = GridFunction::zeros(engine.shape());
  for (Eigen::Index i = 0; i < n; ++i) res.q.v[static_cast<std::size_t>(i)] = x(i);
  fix_sign(res.q);
  res.lambda = lambda;
  Eigen::VectorXd xv(n);
  for (Eigen::Index i = 0; i < n; ++i) xv(i) = res.q.v[static_cast<std::size_t>(i)];
  res.residual = (A * xv - lambda * xv).norm() / xv.norm();
  return res;
}

StationaryResult solve_stationary_marching(const ExplicitFpEngine& engine,
                                           bool adjoint, GridFunction init,
                                           const MarchingOptions& opt) {
  const std::size_t n = engine.shape().size();
  if (init.v.size() != n)
    throw std::invalid_argument("solve_stationary_marching: shape mismatch");
  double dt = opt.dt > 0.0 ? opt.dt : engine.stable_dt(opt.cfl);
  std::vector<double>& f = init.v;
  std::vector<double> prev;
  auto normalize = [&]() {
    double s = 0.0;
    for (double x : f) s += x * x;
    s = std::sqrt(s);
    if (s == 0.0) throw std::runtime_error("marching: field collapsed to zero");
    for (double& x : f) x /= s;
  };
  normalize();
  StationaryResult res;
  long step = 0;
  for (; step < opt.max_steps; ++step) {
    if (step % opt.check_every == 0) prev = f;
    engine.heun_step(f, dt, adjoint);
    normalize();
    if (step % opt.check_every == opt.check_every - 1) {
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff += (f[i] - prev[i]) * (f[i] - prev[i]);
      diff = std::sqrt(diff);
      // sign-flipped convergence also counts (eigenvector defined up to sign)
      double diff2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff2 += (f[i] + prev[i]) * (f[i] + prev[i]);
      diff = std::min(diff, std::sqrt(diff2));
      if (diff < opt.tol * dt * opt.check_every) break;
    }
  }
  res.iterations = static_cast<int>(step);
  res.q = std::move(init);
  fix_sign(res.q);
  // Rayleigh quotient and residual through the engine
  std::vector<double> Aq(n);
  engine.apply(res.q.v.data(), Aq.data(), adjoint);
  double num = 0.0, den = 0.0, rnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += res.q.v[i] * Aq[i];
    den += res.q.v[i] * res.q.v[i];
  }
  res.lambda = num / den;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = Aq[i] - res.lambda * res.q.v[i];
    rnorm += r * r;
  }
  res.residual = std::sqrt(rnorm / den);
  return res;
}

double normalization_constant(
    const GridFunction& qbar,
    const std::function<double(const std::array<double, 4>&)>& y_at,
    const std::array<double, 4>& u0) {
  if (qbar.shape.dims != 3)
    throw std::invalid_argument("normalization_constant: qbar must be 3D");
  const auto& s = qbar.shape;
  const double dv = s.cell_volume();
  double denom = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < s.ax[0].n; ++i)
    for (int j = 0; j < s.ax[1].n; ++j)
      for (int k = 0; k < s.ax[2].n; ++k, ++idx) {
        const std::array<double, 4> u{s.ax[0].center(i), s.ax[1].center(j),
                                      s.ax[2].center(k), 0.0};
        denom += y_at(u) * qbar.v[idx] * dv;
      }
  if (std::abs(denom) < 1e-12)
    throw std::runtime_error("normalization_constant: denominator below 1e-12");
  return y_at(u0) / denom;
}

}  // namespace fp
}  // namespace oscillab

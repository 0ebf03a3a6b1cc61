#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here goes through the FFT-based operator paths it is compared with.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <utility>
#include <numbers>
#include <vector>

#include "toruslab/observability.hpp"
#include "toruslab/torus.hpp"

namespace toruslab::oracle {

/// Grid values of sum_k c_k exp(i k.z) by direct summation over populated modes.
inline std::vector<cplx> synthesize(const FourierField& c) {
  const Torus& t = c.torus();
  std::vector<cplx> out(t.size());
  const double kx = 2.0 * std::numbers::pi / t.period_x();
  const double ky = 2.0 * std::numbers::pi / t.period_y();
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] == cplx{}) continue;
    const Mode md = t.mode(k);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += c[k] * std::polar(1.0, kx * md.m * t.x(i) + ky * md.n * t.y(i));
    }
  }
  return out;
}

/// Fourier coefficient of grid values at one mode by a direct DFT sum.
inline cplx coefficient(const Torus& t, const std::vector<cplx>& values, Mode md) {
  const double kx = 2.0 * std::numbers::pi / t.period_x();
  const double ky = 2.0 * std::numbers::pi / t.period_y();
  cplx s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s += values[i] * std::polar(1.0, -(kx * md.m * t.x(i) + ky * md.n * t.y(i)));
  }
  return s / static_cast<double>(values.size());
}

/// Dense matrix of the Gramian on its subspace, assembled column by column.
inline Eigen::MatrixXcd dense_gramian(const Gramian& g) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e[j] = 1.0;
    m.col(j) = g.apply(e);
  }
  return m;
}

/// Smallest eigenvalue from a full Hermitian eigendecomposition.
inline double dense_lambda_min(const Eigen::MatrixXcd& m) {
  const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[0];
}

/// sum_j w_j ||W exp(i t_j Lap) u||^2 by stepping the state through the nodes
/// with an explicit per-mode phase and synthesizing the grid directly.
inline double observed_energy(const FourierField& u, const std::vector<double>& w_squared,
                              const TimeQuadrature& q) {
  const Torus& t = u.torus();
  double total = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    FourierField ut(u.torus_ptr());
    for (std::size_t k = 0; k < u.size(); ++k) {
      ut[k] = u[k] * std::exp(cplx(0.0, -q.nodes[j] * t.eigenvalue(k)));
    }
    const auto grid = synthesize(ut);
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += w_squared[i] * std::norm(grid[i]);
    total += q.weights[j] * s * t.cell_area();
  }
  return total;
}

/// Continuous-time Gramian on the modes `slots`: entry (k, l) is
/// hat(W^2)(n_k - n_l) * int_0^T exp(i t (lambda_k - lambda_l)) dt, with the
/// Fourier coefficients of W^2 from direct DFT sums and the time integral in
/// closed form.
inline Eigen::MatrixXcd continuous_gramian(const Torus& t, const std::vector<std::size_t>& slots,
                                           const std::vector<double>& w_squared, double horizon) {
  const std::vector<cplx> w2(w_squared.begin(), w_squared.end());
  const auto n = static_cast<Eigen::Index>(slots.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const Mode a = t.mode(slots[k]);
      const Mode b = t.mode(slots[l]);
      const cplx hat = coefficient(t, w2, {a.m - b.m, a.n - b.n});
      const double d = t.eigenvalue(slots[k]) - t.eigenvalue(slots[l]);
      const cplx integral = d == 0.0 ? cplx(horizon)
                                     : (std::exp(cplx(0.0, d * horizon)) - 1.0) / cplx(0.0, d);
      m(k, l) = hat * integral;
    }
  }
  return m;
}

/// Fourth moment of sum_k c_k exp(i n_k.z) under dz / 4pi^2 by expanding
/// |p|^2 = sum_k d_k exp(i k.z), d_k = sum_{n - m = k} c_n conj(c_m).
inline double fourth_moment(const std::vector<Mode>& points, const std::vector<cplx>& c) {
  std::map<std::pair<int, int>, cplx> d;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      d[{points[i].m - points[j].m, points[i].n - points[j].n}] += c[i] * std::conj(c[j]);
    }
  }
  double s = 0.0;
  for (const auto& [k, v] : d) s += std::norm(v);
  return s;
}

/// Number of representations n = p^2 + q^2: 4 (d_1(n) - d_3(n)), with d_r the
/// count of divisors congruent to r mod 4.
inline long sum_of_two_squares_count(long n) {
  if (n == 0) return 1;
  long d1 = 0;
  long d3 = 0;
  for (long d = 1; d <= n; ++d) {
    if (n % d != 0) continue;
    if (d % 4 == 1) ++d1;
    if (d % 4 == 3) ++d3;
  }
  return 4 * (d1 - d3);
}

}  // namespace toruslab::oracle

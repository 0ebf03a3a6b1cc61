#pragma once

// Matrix-free Krylov solvers for Hermitian operators on C^n.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include "toruslab/error.hpp"

namespace toruslab {

struct LanczosResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// Ritz residual norms; |theta - lambda| <= residual for the reported pair.
  double residual_min = 0.0;
  double residual_max = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXcd min_vector;
};

/// Extreme eigenvalues of a Hermitian positive semidefinite operator by
/// Lanczos with full (two-pass) reorthogonalization.
///
/// `apply(x, y)` must write A x into y. Stops once both extreme Ritz residuals
/// fall below rel_tol times the respective Ritz value, or when the Krylov space
/// becomes invariant. The start vector is seeded, so results are reproducible.
template <class Apply>
LanczosResult lanczos_extremal(Apply&& apply, Eigen::Index dim, std::uint64_t seed,
                               double rel_tol = 1e-8, int max_iter = -1) {
  if (dim < 1) throw DomainError("Lanczos needs a nonempty space");
  if (max_iter < 0) max_iter = static_cast<int>(dim);
  max_iter = std::min<int>(max_iter, static_cast<int>(dim));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd basis(dim, max_iter + 1);
  Eigen::VectorXcd q(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    q[i] = {re, im};
  }
  q.normalize();
  basis.col(0) = q;

  std::vector<double> alpha;
  std::vector<double> beta;
  Eigen::VectorXcd w(dim);
  LanczosResult result;

  for (int j = 0; j < max_iter; ++j) {
    apply(basis.col(j), w);
    const double a = basis.col(j).dot(w).real();
    alpha.push_back(a);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd coeffs = basis.leftCols(j + 1).adjoint() * w;
      w.noalias() -= basis.leftCols(j + 1) * coeffs;
    }
    const double b = w.norm();

    const Eigen::Index m = j + 1;
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(std::max<Eigen::Index>(m - 1, 0));
    for (Eigen::Index k = 0; k + 1 < m; ++k) sub[k] = beta[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const auto& theta = tri.eigenvalues();
    const auto& s = tri.eigenvectors();

    result.iterations = j + 1;
    result.lambda_min = theta[0];
    result.lambda_max = theta[m - 1];
    result.residual_min = b * std::abs(s(m - 1, 0));
    result.residual_max = b * std::abs(s(m - 1, m - 1));
    result.min_vector = basis.leftCols(m) * s.col(0).cast<std::complex<double>>();

    const double scale = std::max(std::abs(result.lambda_max), 1e-300);
    const bool invariant = b <= 1e-13 * scale || m == dim;
    const bool small_min = result.residual_min <= rel_tol * std::abs(result.lambda_min);
    const bool small_max = result.residual_max <= rel_tol * std::abs(result.lambda_max);
    if (invariant || (small_min && small_max)) {
      if (invariant) {
        result.residual_min = std::min(result.residual_min, b);
        result.residual_max = std::min(result.residual_max, b);
      }
      result.converged = true;
      return result;
    }
    beta.push_back(b);
    basis.col(j + 1) = w / b;
  }
  std::ostringstream msg;
  msg << "Lanczos did not converge in " << result.iterations
      << " iterations; smallest eigenvalue bracketed in ["
      << result.lambda_min - result.residual_min << ", " << result.lambda_min << "]";
  throw NumericalError(msg.str());
}

struct CgResult {
  Eigen::VectorXcd solution;
  int iterations = 0;
  /// ||b - A x|| / ||b|| recomputed from the returned iterate.
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients for a Hermitian positive definite operator.
/// The recursion is restarted from the true residual when rounding leaves it
/// above tolerance. Returns the last iterate with converged = false when
/// max_iter applications are exhausted or the operator loses definiteness.
template <class Apply>
CgResult conjugate_gradient(Apply&& apply, const Eigen::VectorXcd& rhs, double tol,
                            int max_iter) {
  const Eigen::Index n = rhs.size();
  CgResult out;
  out.solution = Eigen::VectorXcd::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXcd r = rhs;
  Eigen::VectorXcd p(n);
  Eigen::VectorXcd ap(n);
  for (int restart = 0; restart < 4; ++restart) {
    if (restart > 0) {
      apply(out.solution, ap);
      r = rhs - ap;
    }
    double rr = r.squaredNorm();
    out.relative_residual = std::sqrt(rr) / bnorm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      return out;
    }
    p = r;
    bool broke_down = false;
    while (out.iterations < max_iter && std::sqrt(rr) > tol * bnorm) {
      apply(p, ap);
      const double pap = p.dot(ap).real();
      if (!(pap > 0.0)) {
        broke_down = true;
        break;
      }
      const double step = rr / pap;
      out.solution += step * p;
      r -= step * ap;
      const double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
      ++out.iterations;
    }
    if (broke_down || out.iterations >= max_iter) break;
  }
  apply(out.solution, ap);
  out.relative_residual = (rhs - ap).norm() / bnorm;
  out.converged = out.relative_residual <= tol;
  return out;
}

}  // namespace toruslab

#pragma once

// Damped Schrodinger evolution i u_t + Lap u + i a u = 0 with a >= 0, by
// Strang splitting exp(-a dt/2) o exp(i dt Lap) o exp(-a dt/2). Each factor is
// a contraction, so discrete norms never increase. The L2 energy obeys
// d/dt ||u||^2 = -2 <a, |u|^2>.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/torus.hpp"
#include "toruslab/weights.hpp"

namespace toruslab {

namespace detail {

// Precomputed factors of one splitting step of size dt.
class DampedStepper {
 public:
  DampedStepper(const SpatialField& a, double dt) : torus_(a.torus_ptr()), dt_(dt) {
    require_nonnegative(a, "damping coefficient a");
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const Torus& t = *torus_;
    a_.resize(t.size());
    half_.resize(t.size());
    free_.resize(t.size());
    half_free_.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      a_[i] = std::max(0.0, a[i].real());
      half_[i] = std::exp(-0.5 * dt * a_[i]);
      free_[i] = std::polar(1.0, -dt * t.eigenvalue(i));
      half_free_[i] = std::polar(1.0, -0.5 * dt * t.eigenvalue(i));
    }
    coeffs_.resize(t.size());
  }

  // u <- D F D u. When `mid` is given it receives F_{dt/2} D u, the
  // midpoint state used by the energy balance.
  void step(std::span<cplx> u, std::span<cplx> mid = {}) {
    const Torus& t = *torus_;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= half_[i];
    t.forward(u, coeffs_);
    if (!mid.empty()) {
      std::vector<cplx> c(coeffs_.size());
      for (std::size_t k = 0; k < c.size(); ++k) c[k] = coeffs_[k] * half_free_[k];
      t.backward(c, mid);
    }
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] *= free_[k];
    t.backward(coeffs_, u);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= half_[i];
  }

  // <a, |v|^2> with the grid measure.
  double dissipation(std::span<const cplx> v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += a_[i] * std::norm(v[i]);
    return s * torus_->cell_area();
  }

  double dt() const noexcept { return dt_; }

 private:
  TorusPtr torus_;
  double dt_;
  std::vector<double> a_;
  std::vector<double> half_;
  std::vector<cplx> free_;
  std::vector<cplx> half_free_;
  std::vector<cplx> coeffs_;
};

inline double squared_norm(std::span<const cplx> u, double cell) {
  double s = 0.0;
  for (auto v : u) s += std::norm(v);
  return s * cell;
}

}  // namespace detail

/// One Strang step of size dt.
inline SpatialField damped_step(const SpatialField& u, const SpatialField& a, double dt) {
  u.require_same(a);
  detail::DampedStepper stepper(a, dt);
  SpatialField out = u;
  stepper.step(out.values());
  return out;
}

struct DecayReport {
  std::vector<double> times;
  std::vector<double> norms;
  /// Per step: ||u_{n+1}||^2 - ||u_n||^2 + 2 dt <a, |u_mid|^2>.
  std::vector<double> energy_residuals;
  /// Sum of |energy_residuals| over the run.
  double global_energy_residual = 0.0;
  double rate = 0.0;       ///< fitted c in ||u(t)|| ~ C exp(-c t) ||u0||
  double prefactor = 0.0;  ///< fitted C
  double r_squared = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  double dt = 0.0;
  int norm_violations = 0;  ///< steps with ||u_{n+1}|| > ||u_n||
  std::string damping;      ///< descriptor supplied by the caller
};

struct ExponentialFit {
  double rate = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
};

/// Least squares fit of log y = log P - c t.
inline ExponentialFit fit_exponential(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 2) throw DomainError("decay fit needs at least two samples");
  const auto n = static_cast<double>(t.size());
  double st = 0, sy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0)) throw NumericalError("decay fit hit a nonpositive norm");
    st += t[i];
    sy += std::log(y[i]);
  }
  const double mt = st / n;
  const double my = sy / n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dt = t[i] - mt;
    const double dy = std::log(y[i]) - my;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (stt == 0.0) throw DomainError("decay fit window has no time extent");
  const double slope = sty / stt;
  ExponentialFit f;
  f.rate = -slope;
  f.prefactor = std::exp(my - slope * mt);
  f.r_squared = syy == 0.0 ? 1.0 : (sty * sty) / (stt * syy);
  return f;
}

using DampedObserver = std::function<void(double t, const SpatialField& u)>;

/// Trajectory on [0, t_max] with step dt (t_max must be a multiple of dt).
/// The decay fit uses samples with t >= fit_start; a negative value selects
/// t_max / 5.
inline DecayReport damped_evolve(const SpatialField& u0, const SpatialField& a, double t_max,
                                 double dt, double fit_start = -1.0,
                                 const DampedObserver& observer = {}) {
  u0.require_same(a);
  if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
  detail::DampedStepper stepper(a, dt);
  const long steps = std::lround(t_max / dt);
  if (steps < 1 || std::abs(steps * dt - t_max) > 1e-9 * t_max) {
    throw DomainError("t_max must be a positive multiple of the time step");
  }
  const double cell = u0.torus().cell_area();

  DecayReport r;
  r.dt = dt;
  r.window_start = fit_start < 0.0 ? t_max / 5.0 : fit_start;
  r.window_end = t_max;
  SpatialField u = u0;
  SpatialField mid(u0.torus_ptr());
  double e_prev = detail::squared_norm(u.values(), cell);
  r.times.push_back(0.0);
  r.norms.push_back(std::sqrt(e_prev));
  if (observer) observer(0.0, u);
  for (long n = 1; n <= steps; ++n) {
    stepper.step(u.values(), mid.values());
    const double e = detail::squared_norm(u.values(), cell);
    const double res = e - e_prev + 2.0 * dt * stepper.dissipation(mid.values());
    r.energy_residuals.push_back(res);
    r.global_energy_residual += std::abs(res);
    const double t = static_cast<double>(n) * dt;
    r.times.push_back(t);
    r.norms.push_back(std::sqrt(e));
    if (r.norms[n] > r.norms[n - 1]) ++r.norm_violations;
    e_prev = e;
    if (observer) observer(t, u);
  }

  std::vector<double> ft;
  std::vector<double> fy;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.times[i] >= r.window_start - 1e-12 * t_max) {
      ft.push_back(r.times[i]);
      fy.push_back(r.norms[i]);
    }
  }
  const auto fit = fit_exponential(ft, fy);
  r.rate = fit.rate;
  r.prefactor = fit.prefactor / r.norms.front();
  r.r_squared = fit.r_squared;
  return r;
}

}  // namespace toruslab

#pragma once

// Spectral cutoffs: the shell projector chi((-h^2 Lap - 1)/rho) and a
// Littlewood-Paley style partition phi_0^2 + sum_k phi_k^2 = 1.

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "toruslab/error.hpp"
#include "toruslab/torus.hpp"

namespace toruslab {

/// Monotone transition sigma: [0,1] -> [0,1] built as the normalized integral
/// of a compactly supported bump. order 0 uses exp(-1/(t(1-t))) (C-infinity);
/// order k >= 1 uses (t(1-t))^k (C^k).
class SmoothStep {
 public:
  explicit SmoothStep(int order = 0) : order_(order) {
    if (order < 0) throw DomainError("smoothness order must be >= 0");
    total_ = integrate(1.0);
  }

  int order() const noexcept { return order_; }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // Integrate over the shorter side so that sigma(x) + sigma(1-x) = 1 to rounding.
    if (x > 0.5) return 1.0 - integrate(1.0 - x) / total_;
    return integrate(x) / total_;
  }

 private:
  double bump(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = t * (1.0 - t);
    if (order_ == 0) return std::exp(-1.0 / s);
    return std::pow(s, order_);
  }

  // Composite 8-point Gauss-Legendre on [0, x]; bump is symmetric about 1/2.
  double integrate(double x) const {
    static constexpr double nodes[4] = {0.1834346424956498, 0.5255324099163290,
                                        0.7966664774136267, 0.9602898564975363};
    static constexpr double weights[4] = {0.3626837833783620, 0.3137066458778873,
                                          0.2223810344533745, 0.1012285362903763};
    constexpr int panels = 24;
    const double h = x / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * h;
      for (int q = 0; q < 4; ++q) {
        const double d = 0.5 * h * nodes[q];
        sum += weights[q] * (bump(mid - d) + bump(mid + d));
      }
    }
    return 0.5 * h * sum;
  }

  int order_;
  double total_ = 1.0;
};

/// Even cutoff chi with chi = 1 on |r| <= plateau, chi = 0 on |r| >= 1.
class CutoffProfile {
 public:
  explicit CutoffProfile(double plateau = 0.5, int smoothness = 0)
      : plateau_(plateau), step_(smoothness) {
    if (!(plateau > 0.0 && plateau < 1.0)) {
      throw DomainError("cutoff plateau half-width must lie in (0, 1)");
    }
  }

  double plateau() const noexcept { return plateau_; }
  int smoothness() const noexcept { return step_.order(); }

  double operator()(double r) const {
    const double a = std::abs(r);
    if (a <= plateau_) return 1.0;
    if (a >= 1.0) return 0.0;
    return 1.0 - step_((a - plateau_) / (1.0 - plateau_));
  }

 private:
  double plateau_;
  SmoothStep step_;
};

/// Multiplies c_k by chi((h^2 lambda_k - 1) / rho).
inline FourierField project_spectral(FourierField u, double h, double rho,
                                     const CutoffProfile& chi) {
  if (!(h > 0.0) || !(rho > 0.0)) throw DomainError("project_spectral needs h > 0 and rho > 0");
  const auto lambda = u.torus().eigenvalues();
  auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= chi((h * h * lambda[i] - 1.0) / rho);
  return u;
}

/// Dyadic partition in the frequency magnitude r = sqrt(lambda).
///
/// With s = log_R(r), level k >= 1 is a bump centered at s = k, equal to 1 on
/// [k - 1/2 + w, k + 1/2 - w] and supported in (k - 1/2 - w, k + 1/2 + w), so
/// the base profile lives in (1/R, R). Level 0 is the low-pass piece equal to
/// 1 for s <= 1/2 - w. Adjacent levels are sin/cos of the same angle, so
/// phi_0^2 + sum_{k=1..K} phi_k^2 = 1 for s <= K + 1/2 - w.
class DyadicSpec {
 public:
  DyadicSpec(double ratio, int max_level, double transition = 0.25, int smoothness = 0)
      : ratio_(ratio), max_level_(max_level), transition_(transition), step_(smoothness) {
    if (!(ratio > 1.0)) throw DomainError("dyadic ratio must exceed 1");
    if (max_level < 0) throw DomainError("dyadic max level must be >= 0");
    if (!(transition > 0.0 && transition < 0.5)) {
      throw DomainError("dyadic transition half-width must lie in (0, 1/2)");
    }
  }

  double ratio() const noexcept { return ratio_; }
  int max_level() const noexcept { return max_level_; }
  double transition() const noexcept { return transition_; }

  /// Largest frequency magnitude r on which the partition sums to one.
  double covered_radius() const noexcept {
    return std::pow(ratio_, max_level_ + 0.5 - transition_);
  }

  /// phi_k(r), r = frequency magnitude >= 0.
  double profile(int level, double r) const {
    if (level < 0 || level > max_level_) throw DomainError("dyadic level out of range");
    if (r <= 0.0) return level == 0 ? 1.0 : 0.0;
    const double s = std::log(r) / std::log(ratio_);
    if (level == 0) return falling(s - 0.5);
    const double k = level;
    if (s <= k) return rising(s - (k - 0.5));
    return falling(s - (k + 0.5));
  }

 private:
  double fraction(double x) const { return step_((x + transition_) / (2.0 * transition_)); }
  // Saturated steps return exact 0/1 rather than cos(pi/2).
  double rising(double x) const {
    const double f = fraction(x);
    return f <= 0.0 ? 0.0 : f >= 1.0 ? 1.0 : std::sin(0.5 * std::numbers::pi * f);
  }
  double falling(double x) const {
    const double f = fraction(x);
    return f <= 0.0 ? 1.0 : f >= 1.0 ? 0.0 : std::cos(0.5 * std::numbers::pi * f);
  }

  double ratio_;
  int max_level_;
  double transition_;
  SmoothStep step_;
};

/// Multiplies c_k by phi_level(sqrt(lambda_k)). Throws when u has nonzero
/// modes beyond the covered range, listing (a few of) them.
inline FourierField dyadic_project(FourierField u, const DyadicSpec& spec, int level) {
  if (level < 0 || level > spec.max_level()) throw DomainError("dyadic level out of range");
  const auto& torus = u.torus();
  const double covered = spec.covered_radius();
  std::ostringstream uncovered;
  int bad = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] != cplx{0.0, 0.0} && std::sqrt(torus.eigenvalue(i)) > covered) {
      if (bad < 8) {
        const Mode md = torus.mode(i);
        uncovered << " (" << md.m << "," << md.n << ") lambda=" << torus.eigenvalue(i);
      }
      ++bad;
    }
  }
  if (bad > 0) {
    throw DomainError("dyadic partition covers lambda <= " + std::to_string(covered * covered) +
                      " but " + std::to_string(bad) + " populated mode(s) lie beyond:" +
                      uncovered.str());
  }
  auto c = u.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] *= spec.profile(level, std::sqrt(torus.eigenvalue(i)));
  }
  return u;
}

}  // namespace toruslab

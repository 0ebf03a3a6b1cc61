#pragma once

// Lattice points on circles, the L4/L2 ratio of trigonometric polynomials
// with frequencies on one circle (bounded by 5^{1/4} in normalized measure),
// and Gram matrices of exponentials exp(i t lambda_j) on (0, T), whose
// smallest eigenvalue B(T) is the constant of an Ingham-type lower bound.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/observability.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/torus.hpp"

namespace toruslab {

struct LatticeCircle {
  long lambda = 0;
  std::vector<Mode> points;  ///< (p, q) with p^2 + q^2 = lambda, sorted by p then q
  std::size_t count() const noexcept { return points.size(); }
};

namespace detail {

inline long isqrt(long n) {
  auto r = static_cast<long>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace detail

/// All integer points on p^2 + q^2 = lambda by a search over p.
inline LatticeCircle lattice_circle(long lambda) {
  if (lambda < 0) throw DomainError("lattice circle radius squared must be nonnegative");
  LatticeCircle c{lambda, {}};
  const long r = detail::isqrt(lambda);
  for (long p = -r; p <= r; ++p) {
    const long rest = lambda - p * p;
    const long q = detail::isqrt(rest);
    if (q * q != rest) continue;
    if (q > 0) c.points.push_back({static_cast<int>(p), static_cast<int>(-q)});
    c.points.push_back({static_cast<int>(p), static_cast<int>(q)});
  }
  return c;
}

/// ||p||^2_{L4(dmu)} / ||p||^2_{L2(dmu)} for p(z) = sum_k c_k exp(i n_k . z) on
/// (R/2piZ)^2 with dmu = dz / 4pi^2 and n_k = lattice_circle(lambda).points[k].
/// |p|^4 has frequencies of size at most 4 sqrt(lambda), so a grid with more
/// points per side integrates it exactly.
inline double zygmund_ratio(long lambda, std::span<const cplx> coefficients) {
  const LatticeCircle circle = lattice_circle(lambda);
  if (coefficients.size() != circle.count()) {
    throw DomainError("expected " + std::to_string(circle.count()) + " coefficients for lambda = " +
                      std::to_string(lambda));
  }
  double l2 = 0.0;
  for (auto c : coefficients) l2 += std::norm(c);
  if (!(l2 > 0.0)) throw DomainError("zygmund_ratio needs a nonzero coefficient vector");
  int n = 4 * static_cast<int>(detail::isqrt(lambda)) + 1;
  n += n % 2;
  const auto torus = Torus::square_2pi(std::max(n, 2));
  FourierField poly(torus);
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    poly[*torus->mode_index(circle.points[k])] = coefficients[k];
  }
  const SpatialField grid = from_fourier(poly);
  double l4 = 0.0;
  for (auto v : grid.values()) l4 += std::pow(std::norm(v), 2);
  l4 /= static_cast<double>(grid.size());
  return std::sqrt(l4) / l2;
}

struct ZygmundRow {
  long lambda = 0;
  std::size_t circle_count = 0;
  double max_ratio = 0.0;
};

/// Largest ratio over `trials` complex Gaussian coefficient vectors for every
/// lambda <= lambda_max whose circle has at least min_count points. Each lambda
/// draws from its own stream seeded by (seed, lambda).
inline std::vector<ZygmundRow> zygmund_sweep(long lambda_max, std::size_t min_count, int trials,
                                             std::uint64_t seed, unsigned threads = 1) {
  std::vector<ZygmundRow> rows;
  for (long lam = 0; lam <= lambda_max; ++lam) {
    const auto c = lattice_circle(lam).count();
    if (c >= min_count && c > 0) rows.push_back({lam, c, 0.0});
  }
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rows[i].lambda)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> g;
    std::vector<cplx> coeffs(rows[i].circle_count);
    for (int t = 0; t < trials; ++t) {
      for (auto& v : coeffs) {
        const double re = g(rng);
        v = {re, g(rng)};
      }
      rows[i].max_ratio = std::max(rows[i].max_ratio, zygmund_ratio(rows[i].lambda, coeffs));
    }
  });
  return rows;
}

struct InghamReport {
  std::vector<double> frequencies;
  double horizon = 0.0;
  double smallest = 0.0;  ///< B(T)
  double largest = 0.0;
  double condition = 0.0;  ///< largest / smallest, infinite when B <= 0
};

/// M_jk = int_0^T exp(i t (l_j - l_k)) dt = T exp(iTd/2) sinc(Td/2), d = l_j - l_k.
inline Eigen::MatrixXcd ingham_matrix(std::span<const double> freqs, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("Ingham horizon must be positive");
  for (std::size_t j = 1; j < freqs.size(); ++j) {
    if (freqs[j] == freqs[j - 1]) {
      throw DomainError("duplicate frequency " + std::to_string(freqs[j]));
    }
    if (freqs[j] < freqs[j - 1]) throw DomainError("frequencies must be strictly increasing");
  }
  const auto n = static_cast<Eigen::Index>(freqs.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double half = 0.5 * horizon * (freqs[j] - freqs[k]);
      const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
      m(j, k) = horizon * sinc * std::polar(1.0, half);
    }
  }
  return m;
}

inline InghamReport ingham_gram(std::span<const double> freqs, double horizon) {
  if (freqs.empty()) throw DomainError("Ingham Gram matrix needs at least one frequency");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(ingham_matrix(freqs, horizon),
                                                      Eigen::EigenvaluesOnly);
  InghamReport r;
  r.frequencies.assign(freqs.begin(), freqs.end());
  r.horizon = horizon;
  r.smallest = eig.eigenvalues()[0];
  r.largest = eig.eigenvalues()[eig.eigenvalues().size() - 1];
  r.condition = r.smallest > 0.0 ? r.largest / r.smallest : std::numeric_limits<double>::infinity();
  return r;
}

struct InghamChartPoint {
  double horizon = 0.0;
  double smallest = 0.0;
};

inline std::vector<InghamChartPoint> ingham_chart(std::span<const double> freqs,
                                                  std::span<const double> horizons) {
  std::vector<InghamChartPoint> out;
  for (double t : horizons) out.push_back({t, ingham_gram(freqs, t).smallest});
  return out;
}

/// Distinct eigenvalues of -Lap up to lambda_cut on the torus (Nyquist modes
/// excluded), grouped with a relative tolerance of 1e-9.
inline std::vector<double> distinct_eigenvalues(const Torus& torus, double lambda_cut) {
  std::vector<double> all;
  for (std::size_t i = 0; i < torus.size(); ++i) {
    if (!torus.is_nyquist(i) && torus.eigenvalue(i) <= lambda_cut) all.push_back(torus.eigenvalue(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double v : all) {
    if (out.empty() || v - out.back() > 1e-9 * std::max(1.0, v)) out.push_back(v);
  }
  return out;
}

struct InghamCertificate {
  double smallest = 0.0;  ///< B(T) for the distinct eigenvalues
  double eigenspace_min = 0.0;
  double worst_eigenvalue = 0.0;  ///< eigenspace attaining eigenspace_min
  double bound = 0.0;             ///< B(T) * eigenspace_min when certified
  bool certified = false;
  std::string note;
};

/// Lower bound for the smallest eigenvalue of the continuous-time Gramian on
/// {lambda <= lambda_cut}: B(T) times the worst eigenspace constant.
inline InghamCertificate observability_from_ingham(const SpatialField& weight, double horizon,
                                                   double lambda_cut) {
  const Torus& t = weight.torus();
  if (t.dim() != 2 || t.period_x() != t.period_y() || t.nx() != t.ny()) {
    throw DomainError("the Ingham route needs a square torus");
  }
  const auto freqs = distinct_eigenvalues(t, lambda_cut);
  if (freqs.empty()) throw DomainError("no eigenvalues below the cutoff");
  InghamCertificate c;
  c.smallest = ingham_gram(freqs, horizon).smallest;
  c.eigenspace_min = std::numeric_limits<double>::infinity();
  for (double lam : freqs) {
    const double v = eigenspace_observability(weight.torus_ptr(), lam, weight);
    if (v < c.eigenspace_min) {
      c.eigenspace_min = v;
      c.worst_eigenvalue = lam;
    }
  }
  if (c.smallest <= 0.0) {
    c.note = "no certificate at this T";
    return c;
  }
  c.certified = c.eigenspace_min > 0.0;
  c.bound = c.certified ? c.smallest * c.eigenspace_min : 0.0;
  if (!c.certified) c.note = "an eigenspace is unobserved";
  return c;
}

}  // namespace toruslab

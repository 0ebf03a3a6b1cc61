#pragma once

// Finite-frequency proxies for phase-space concentration of free solutions:
// the time-integrated density U(z) = int_0^tau |exp(itLap)u0|^2 dt, the split
// of Fourier mass by rational direction, and how far U is from being constant
// along a rational flow direction.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/observability.hpp"
#include "toruslab/quadrature.hpp"
#include "toruslab/torus.hpp"

namespace toruslab {

struct TimeAveragedDensity {
  TorusPtr torus;
  std::vector<double> values;  ///< U on the grid
  double horizon = 0.0;
  int nodes = 0;

  /// int U dz
  double mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * torus->cell_area();
  }
  double l2_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s * torus->cell_area());
  }
  SpatialField field() const { return SpatialField::weight(torus, values); }
};

/// Node count for |u|^2: twice the spread of the populated eigenvalues.
inline int density_nodes(const FourierField& u0, double horizon) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    if (u0[i] != cplx{}) {
      lo = std::min(lo, u0.torus().eigenvalue(i));
      hi = std::max(hi, u0.torus().eigenvalue(i));
    }
  }
  return hi >= lo ? sampling_rule_nodes(horizon, 2.0 * (hi - lo)) : 1;
}

/// Time quadrature of |exp(itLap)u0|^2 at every grid point. nodes = 0
/// selects density_nodes().
inline TimeAveragedDensity time_averaged_density(const FourierField& u0, double horizon,
                                                 int nodes = 0,
                                                 QuadratureRule rule = QuadratureRule::midpoint) {
  const int need = density_nodes(u0, horizon);
  if (nodes == 0) nodes = need;
  if (nodes < need) {
    throw DomainError("node count " + std::to_string(nodes) + " is below the sampling rule minimum " +
                      std::to_string(need));
  }
  const auto q = TimeQuadrature::make(rule, horizon, nodes);
  return {u0.torus_ptr(), time_integrated_square(u0, q), horizon, nodes};
}

/// Primitive representative of the line through (m, n): divided by the gcd and
/// flipped into p > 0, or p = 0 and q > 0.
inline Mode primitive_direction(Mode k) {
  if (k.m == 0 && k.n == 0) throw DomainError("the zero mode has no direction");
  const int g = std::gcd(k.m, k.n);
  Mode d{k.m / g, k.n / g};
  if (d.m < 0 || (d.m == 0 && d.n < 0)) d = {-d.m, -d.n};
  return d;
}

struct DirectionBin {
  Mode direction;
  double fraction = 0.0;
};

struct DirectionHistogram {
  /// Sorted by max(|p|, |q|), then p, then q.
  std::vector<DirectionBin> bins;
  double zero_mode_fraction = 0.0;
  /// residual[m - 1]: fraction on directions with max(|p|, |q|) > m, m = 1..m_max.
  std::vector<double> residual;
  int m_max = 0;
  /// Directions pair the integer mode indices (m, n) regardless of periods.
  static constexpr const char* convention = "integer mode pair (m,n), gcd-reduced, p>0 or p=0,q>0";
};

inline int direction_height(Mode d) { return std::max(std::abs(d.m), std::abs(d.n)); }

/// Fourier mass |c_k|^2 grouped by the primitive direction of k.
inline DirectionHistogram direction_mass(const FourierField& u, int m_max) {
  if (m_max < 1) throw DomainError("m_max must be at least 1");
  double total = 0.0;
  for (auto c : u.coefficients()) total += std::norm(c);
  if (!(total > 0.0)) throw DomainError("direction_mass needs a nonzero field");
  std::map<std::pair<int, int>, double> mass;
  DirectionHistogram h;
  h.m_max = m_max;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = std::norm(u[i]);
    if (w == 0.0) continue;
    const Mode k = u.torus().mode(i);
    if (k.m == 0 && k.n == 0) {
      h.zero_mode_fraction += w / total;
      continue;
    }
    const Mode d = primitive_direction(k);
    mass[{d.m, d.n}] += w / total;
  }
  for (const auto& [d, f] : mass) h.bins.push_back({{d.first, d.second}, f});
  std::sort(h.bins.begin(), h.bins.end(), [](const DirectionBin& a, const DirectionBin& b) {
    const int ha = direction_height(a.direction);
    const int hb = direction_height(b.direction);
    if (ha != hb) return ha < hb;
    if (a.direction.m != b.direction.m) return a.direction.m < b.direction.m;
    return a.direction.n < b.direction.n;
  });
  h.residual.assign(m_max, 0.0);
  for (const auto& b : h.bins) {
    const int height = direction_height(b.direction);
    for (int m = 1; m <= m_max && m < height; ++m) h.residual[m - 1] += b.fraction;
  }
  return h;
}

/// Orthogonal projection onto functions invariant along the flow in direction
/// (p, q): keeps the Fourier modes (m, n) with m p + n q = 0.
inline SpatialField direction_average(const SpatialField& f, Mode dir) {
  if (dir.m == 0 && dir.n == 0) throw DomainError("flow direction must be nonzero");
  if (std::gcd(dir.m, dir.n) != 1) throw DomainError("flow direction must be primitive");
  FourierField c = to_fourier(f);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Mode k = c.torus().mode(i);
    if (static_cast<long>(k.m) * dir.m + static_cast<long>(k.n) * dir.n != 0) c[i] = 0.0;
  }
  return from_fourier(c, f.role());
}

/// ||U - avg U|| / ||U|| for the time-integrated density of u0, with avg the
/// direction average along (p, q).
inline double flow_average_defect(const FourierField& u0, double horizon, Mode dir, int nodes = 0) {
  const SpatialField u = time_averaged_density(u0, horizon, nodes).field();
  SpatialField diff = u;
  diff -= direction_average(u, dir);
  const double n = u.norm();
  return n > 0.0 ? diff.norm() / n : 0.0;
}

}  // namespace toruslab

#pragma once

// Constructors for observation weights W and damping coefficients a,
// including rough sets (fat Cantor products) and L4-but-unbounded power
// singularities.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/tcf1.hpp"
#include "toruslab/torus.hpp"

namespace toruslab {

enum class WeightKind { uniform, strip, disk, checkerboard, fat_cantor, power_singularity, file };

inline std::string_view to_string(WeightKind k) {
  switch (k) {
    case WeightKind::uniform: return "uniform";
    case WeightKind::strip: return "strip";
    case WeightKind::disk: return "disk";
    case WeightKind::checkerboard: return "checkerboard";
    case WeightKind::fat_cantor: return "fat_cantor";
    case WeightKind::power_singularity: return "power_singularity";
    case WeightKind::file: return "file";
  }
  return "?";
}

inline WeightKind parse_weight_kind(std::string_view name) {
  for (auto k : {WeightKind::uniform, WeightKind::strip, WeightKind::disk, WeightKind::checkerboard,
                 WeightKind::fat_cantor, WeightKind::power_singularity, WeightKind::file}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown weight kind '" + std::string(name) + "'");
}

/// Tagged parameter set; only the fields of the selected kind are read.
struct WeightSpec {
  WeightKind kind = WeightKind::uniform;
  double level = 1.0;             // uniform
  double x0 = 0.0, x1 = 0.0;      // strip: x0 <= x < x1 (periodic)
  double cx = 0.0, cy = 0.0;      // disk center, singularity location
  double radius = 0.0;            // disk
  int cells = 2;                  // checkerboard: cells per side
  int depth = 3;                  // fat_cantor
  double ratio = 0.8;             // fat_cantor: kept fraction per level
  double beta = 0.25;             // power_singularity exponent
  std::filesystem::path path;     // file

  static WeightSpec uniform(double level = 1.0) {
    WeightSpec s;
    s.level = level;
    return s;
  }
  static WeightSpec strip(double x0, double x1) {
    WeightSpec s;
    s.kind = WeightKind::strip;
    s.x0 = x0;
    s.x1 = x1;
    return s;
  }
  static WeightSpec disk(double cx, double cy, double r) {
    WeightSpec s;
    s.kind = WeightKind::disk;
    s.cx = cx;
    s.cy = cy;
    s.radius = r;
    return s;
  }
  static WeightSpec checkerboard(int k) {
    WeightSpec s;
    s.kind = WeightKind::checkerboard;
    s.cells = k;
    return s;
  }
  static WeightSpec fat_cantor(int depth, double ratio) {
    WeightSpec s;
    s.kind = WeightKind::fat_cantor;
    s.depth = depth;
    s.ratio = ratio;
    return s;
  }
  static WeightSpec power_singularity(double cx, double cy, double beta) {
    WeightSpec s;
    s.kind = WeightKind::power_singularity;
    s.cx = cx;
    s.cy = cy;
    s.beta = beta;
    return s;
  }
  static WeightSpec file(std::filesystem::path p) {
    WeightSpec s;
    s.kind = WeightKind::file;
    s.path = std::move(p);
    return s;
  }

  std::string describe() const {
    std::ostringstream o;
    o << to_string(kind);
    switch (kind) {
      case WeightKind::uniform: o << "(" << level << ")"; break;
      case WeightKind::strip: o << "(" << x0 << "," << x1 << ")"; break;
      case WeightKind::disk: o << "(" << cx << "," << cy << "," << radius << ")"; break;
      case WeightKind::checkerboard: o << "(" << cells << ")"; break;
      case WeightKind::fat_cantor: o << "(" << depth << "," << ratio << ")"; break;
      case WeightKind::power_singularity: o << "(" << cx << "," << cy << "," << beta << ")"; break;
      case WeightKind::file: o << "(" << path.string() << ")"; break;
    }
    return o.str();
  }
};

/// Side information produced while building a weight.
struct WeightNotes {
  /// power_singularity: value written at the singular grid point.
  std::optional<double> cap;
  /// fat_cantor: closed-form measure fraction ratio^(depth * dim).
  std::optional<double> expected_fraction;
};

namespace detail {

// Kept intervals of a fat Cantor set on [0, 1): every level replaces each
// interval of length l by its two ends of length ratio * l / 2.
inline std::vector<std::pair<double, double>> fat_cantor_intervals(int depth, double ratio) {
  std::vector<std::pair<double, double>> cur{{0.0, 1.0}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : cur) {
      const double piece = 0.5 * ratio * (b - a);
      next.emplace_back(a, a + piece);
      next.emplace_back(b - piece, b);
    }
    cur = std::move(next);
  }
  return cur;
}

// Covered fraction of each of n equal cells of [0, 1).
inline std::vector<double> cell_fractions(const std::vector<std::pair<double, double>>& set,
                                          int n) {
  std::vector<double> f(n, 0.0);
  for (auto [a, b] : set) {
    const int first = std::max(0, static_cast<int>(std::floor(a * n)));
    const int last = std::min(n - 1, static_cast<int>(std::floor(b * n)));
    for (int i = first; i <= last; ++i) {
      const double lo = std::max(a, static_cast<double>(i) / n);
      const double hi = std::min(b, static_cast<double>(i + 1) / n);
      if (hi > lo) f[i] += (hi - lo) * n;
    }
  }
  for (auto& v : f) v = std::min(v, 1.0);
  return f;
}

inline double periodic_offset(double d, double period) {
  d = std::fmod(d, period);
  if (d < -0.5 * period) d += period;
  if (d >= 0.5 * period) d -= period;
  return d;
}

}  // namespace detail

/// Grid realization of a weight. Strips, disks and checkerboards are point
/// samples of indicators. Fat Cantor products are box-filtered: each cell
/// holds its covered area fraction, so the grid mean equals the set's measure
/// fraction exactly.
inline SpatialField build_weight(const WeightSpec& s, const TorusPtr& torus,
                                 WeightNotes* notes = nullptr) {
  const Torus& t = *torus;
  std::vector<double> w(t.size(), 0.0);
  const bool two_d = t.dim() == 2;
  switch (s.kind) {
    case WeightKind::uniform:
      std::fill(w.begin(), w.end(), s.level);
      break;
    case WeightKind::strip: {
      if (!(s.x1 > s.x0)) throw DomainError("strip needs x0 < x1");
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double rel = std::fmod(t.x(i) - s.x0, t.period_x());
        const double off = rel < 0 ? rel + t.period_x() : rel;
        w[i] = off < s.x1 - s.x0 ? 1.0 : 0.0;
      }
      break;
    }
    case WeightKind::disk: {
      if (!(s.radius > 0.0)) throw DomainError("disk radius must be positive");
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double dx = detail::periodic_offset(t.x(i) - s.cx, t.period_x());
        const double dy = two_d ? detail::periodic_offset(t.y(i) - s.cy, t.period_y()) : 0.0;
        w[i] = std::hypot(dx, dy) < s.radius ? 1.0 : 0.0;
      }
      break;
    }
    case WeightKind::checkerboard: {
      if (s.cells < 1) throw DomainError("checkerboard needs at least one cell per side");
      for (std::size_t i = 0; i < w.size(); ++i) {
        const auto cx = static_cast<long>(std::floor(s.cells * t.x(i) / t.period_x()));
        const auto cy = two_d ? static_cast<long>(std::floor(s.cells * t.y(i) / t.period_y())) : 0;
        w[i] = (cx + cy) % 2 == 0 ? 1.0 : 0.0;
      }
      break;
    }
    case WeightKind::fat_cantor: {
      if (!(s.ratio > 0.0 && s.ratio < 1.0)) throw DomainError("fat_cantor ratio must lie in (0, 1)");
      if (s.depth < 0) throw DomainError("fat_cantor depth must be nonnegative");
      const auto set = detail::fat_cantor_intervals(s.depth, s.ratio);
      const auto fx = detail::cell_fractions(set, t.nx());
      const auto fy = two_d ? detail::cell_fractions(set, t.ny()) : std::vector<double>{1.0};
      for (int ix = 0; ix < t.nx(); ++ix) {
        for (int iy = 0; iy < t.ny(); ++iy) w[t.index(ix, iy)] = fx[ix] * fy[iy];
      }
      if (notes) notes->expected_fraction = std::pow(s.ratio, s.depth * t.dim());
      break;
    }
    case WeightKind::power_singularity: {
      if (!(s.beta > 0.0 && s.beta < 0.5)) {
        throw DomainError("power_singularity exponent must lie in (0, 1/2)");
      }
      // Nearest grid point to the singularity gets the average of its neighbors.
      const auto sx = static_cast<int>(std::lround(s.cx / t.period_x() * t.nx())) % t.nx();
      const auto sy = two_d ? static_cast<int>(std::lround(s.cy / t.period_y() * t.ny())) % t.ny() : 0;
      const int gx = (sx + t.nx()) % t.nx();
      const int gy = (sy + t.ny()) % t.ny();
      auto value = [&](std::size_t i) {
        const double dx = detail::periodic_offset(t.x(i) - s.cx, t.period_x());
        const double dy = two_d ? detail::periodic_offset(t.y(i) - s.cy, t.period_y()) : 0.0;
        return std::pow(std::hypot(dx, dy), -s.beta);
      };
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = value(i);
      double sum = 0.0;
      int count = 0;
      for (int ddx = -1; ddx <= 1; ++ddx) {
        for (int ddy = two_d ? -1 : 0; ddy <= (two_d ? 1 : 0); ++ddy) {
          if (ddx == 0 && ddy == 0) continue;
          sum += value(t.index((gx + ddx + t.nx()) % t.nx(), (gy + ddy + t.ny()) % t.ny()));
          ++count;
        }
      }
      const double cap = sum / count;
      w[t.index(gx, gy)] = cap;
      if (notes) notes->cap = cap;
      break;
    }
    case WeightKind::file: {
      const SpatialField f = tcf1::load(s.path, torus, FieldRole::weight);
      require_real_weight(f, "weight file");
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = f[i].real();
      break;
    }
  }
  return SpatialField::weight(torus, w);
}

/// Damping coefficients must be nonnegative.
inline void require_nonnegative(const SpatialField& a, const char* what) {
  require_real_weight(a, what);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].real() < -1e-12) {
      throw DomainError(std::string(what) + " has a negative entry " +
                        std::to_string(a[i].real()) + " at grid index " + std::to_string(i));
    }
  }
}

}  // namespace toruslab

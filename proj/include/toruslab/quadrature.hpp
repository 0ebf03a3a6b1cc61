#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "toruslab/error.hpp"

namespace toruslab {

enum class QuadratureRule { midpoint, trapezoid };

inline std::string_view to_string(QuadratureRule rule) {
  return rule == QuadratureRule::midpoint ? "midpoint" : "trapezoid";
}

inline QuadratureRule parse_quadrature_rule(std::string_view name) {
  if (name == "midpoint") return QuadratureRule::midpoint;
  if (name == "trapezoid") return QuadratureRule::trapezoid;
  throw DomainError("unknown quadrature rule '" + std::string(name) + "'");
}

/// Nodes and positive weights on (0, T) or [0, T]; weights sum to T.
struct TimeQuadrature {
  QuadratureRule rule = QuadratureRule::midpoint;
  double horizon = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;

  static TimeQuadrature make(QuadratureRule rule, double horizon, int count) {
    if (!(horizon > 0.0)) throw DomainError("time horizon must be positive");
    TimeQuadrature q;
    q.rule = rule;
    q.horizon = horizon;
    if (rule == QuadratureRule::midpoint) {
      if (count < 1) throw DomainError("midpoint rule needs at least one node");
      const double h = horizon / count;
      for (int j = 0; j < count; ++j) {
        q.nodes.push_back((j + 0.5) * h);
        q.weights.push_back(h);
      }
    } else {
      if (count < 2) throw DomainError("trapezoid rule needs at least two nodes");
      const double h = horizon / (count - 1);
      for (int j = 0; j < count; ++j) {
        q.nodes.push_back(j == count - 1 ? horizon : j * h);
        q.weights.push_back(j == 0 || j == count - 1 ? 0.5 * h : h);
      }
    }
    return q;
  }

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Minimum node count: ceil(4 * T * band / (2 pi)), at least 1, where band is
/// the fastest angular frequency the integrand carries.
inline int sampling_rule_nodes(double horizon, double band) {
  const double n = std::ceil(4.0 * horizon * band / (2.0 * std::numbers::pi) - 1e-12);
  return std::max(1, static_cast<int>(n));
}

}  // namespace toruslab

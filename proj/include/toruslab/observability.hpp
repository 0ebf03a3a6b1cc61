#pragma once

// Observability Gramian G_T = int_0^T exp(-itLap) M_{W^2} exp(itLap) dt on a
// truncated mode subspace, realized with a time quadrature and two FFTs per
// node. Also the mixed L4(L2) norm of free solutions and the restriction of
// M_{W^2} to a single eigenspace of -Lap.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/krylov.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/quadrature.hpp"
#include "toruslab/torus.hpp"

namespace toruslab {

struct ObservationSetup {
  SpatialField weight;  ///< W, real-valued
  double horizon = 1.0;
  /// Quadrature node count; 0 selects the sampling rule.
  int nodes = 0;
  QuadratureRule rule = QuadratureRule::midpoint;
  double lambda_max = 0.0;
  /// Accept node counts below the sampling rule (recorded in reports).
  bool sampling_override = false;
};

/// Node count implied by the sampling rule for a given horizon and truncation.
inline int required_nodes(double horizon, double lambda_max) {
  return sampling_rule_nodes(horizon, lambda_max);
}

/// The discretized Gramian restricted to a ModeSubspace. Immutable once built;
/// apply() may be called concurrently.
class Gramian {
 public:
  /// `square_weight` holds W^2 pointwise.
  Gramian(ModeSubspace subspace, std::vector<double> square_weight, TimeQuadrature quadrature,
          unsigned threads = 1)
      : subspace_(std::move(subspace)),
        square_weight_(std::move(square_weight)),
        quadrature_(std::move(quadrature)),
        threads_(threads) {
    if (square_weight_.size() != subspace_.torus().size()) {
      throw DomainError("weight does not match the grid");
    }
  }

  static Gramian from_setup(const ObservationSetup& setup, unsigned threads = 1) {
    require_real_weight(setup.weight, "observation weight W");
    if (!(setup.weight.lp_norm(4.0) > 1e-12)) {
      throw DomainError("observation weight has vanishing L4 norm");
    }
    ModeSubspace sub(setup.weight.torus_ptr(), setup.lambda_max);
    const int rule_nodes = required_nodes(setup.horizon, setup.lambda_max);
    const int nodes = setup.nodes > 0 ? setup.nodes : rule_nodes;
    if (nodes < rule_nodes && !setup.sampling_override) {
      throw DomainError("node count " + std::to_string(nodes) +
                        " is below the sampling rule minimum " + std::to_string(rule_nodes));
    }
    std::vector<double> w2(setup.weight.size());
    for (std::size_t i = 0; i < w2.size(); ++i) {
      const double w = setup.weight[i].real();
      w2[i] = w * w;
    }
    return Gramian(std::move(sub), std::move(w2),
                   TimeQuadrature::make(setup.rule, setup.horizon, nodes), threads);
  }

  const ModeSubspace& subspace() const noexcept { return subspace_; }
  const TimeQuadrature& quadrature() const noexcept { return quadrature_; }
  std::span<const double> square_weight() const noexcept { return square_weight_; }
  std::size_t dim() const noexcept { return subspace_.dim(); }

  /// y = G x on compact subspace coordinates.
  void apply_compact(std::span<const cplx> x, std::span<cplx> y) const {
    const std::size_t dim = subspace_.dim();
    if (x.size() != dim || y.size() != dim) throw DomainError("compact vector has wrong length");
    const std::size_t nodes = quadrature_.size();
    const std::size_t blocks = (nodes + block_size - 1) / block_size;
    std::vector<std::vector<cplx>> partial(blocks);
    parallel_for(blocks, threads_, [&](std::size_t b) {
      partial[b] = apply_block(x, b * block_size, std::min(nodes, (b + 1) * block_size));
    });
    auto total = pairwise_reduce(std::move(partial), [](std::vector<cplx>& acc,
                                                        const std::vector<cplx>& more) {
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += more[k];
    });
    std::copy(total.begin(), total.end(), y.begin());
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const {
    Eigen::VectorXcd y(x.size());
    apply_compact(std::span<const cplx>(x.data(), static_cast<std::size_t>(x.size())),
                  std::span<cplx>(y.data(), static_cast<std::size_t>(y.size())));
    return y;
  }

  /// G u followed by projection onto the subspace; u must live in the subspace.
  FourierField apply(const FourierField& u) const {
    if (!u.torus().same_geometry(subspace_.torus())) {
      throw DomainError("field geometry does not match the Gramian");
    }
    subspace_.require_inside(u, "Gramian input");
    const auto x = subspace_.gather(u);
    std::vector<cplx> y(x.size());
    apply_compact(x, y);
    return subspace_.scatter(y);
  }

 private:
  static constexpr std::size_t block_size = 8;

  std::vector<cplx> apply_block(std::span<const cplx> x, std::size_t first,
                                std::size_t last) const {
    const Torus& torus = subspace_.torus();
    const auto idx = subspace_.indices();
    std::vector<cplx> acc(idx.size());
    std::vector<cplx> coeffs(torus.size());
    std::vector<cplx> grid(torus.size());
    for (std::size_t j = first; j < last; ++j) {
      const double t = quadrature_.nodes[j];
      std::fill(coeffs.begin(), coeffs.end(), cplx{});
      for (std::size_t k = 0; k < idx.size(); ++k) {
        coeffs[idx[k]] = x[k] * std::polar(1.0, -t * torus.eigenvalue(idx[k]));
      }
      torus.backward(coeffs, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) grid[i] *= square_weight_[i];
      torus.forward(grid, coeffs);
      const double w = quadrature_.weights[j];
      for (std::size_t k = 0; k < idx.size(); ++k) {
        acc[k] += w * std::polar(1.0, t * torus.eigenvalue(idx[k])) * coeffs[idx[k]];
      }
    }
    return acc;
  }

  ModeSubspace subspace_;
  std::vector<double> square_weight_;
  TimeQuadrature quadrature_;
  unsigned threads_;
};

/// One application of the Gramian defined by `setup`.
inline FourierField gramian_apply(const ObservationSetup& setup, const FourierField& u,
                                  unsigned threads = 1) {
  return Gramian::from_setup(setup, threads).apply(u);
}

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = -1;  ///< -1: subspace dimension
  std::uint64_t seed = 20170321;
  unsigned threads = 1;
};

struct GramianReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double observability_constant = 0.0;  ///< K = 1 / lambda_min
  double residual_min = 0.0;
  double residual_max = 0.0;
  int iterations = 0;
  std::size_t dim = 0;
  // setup echo
  double horizon = 0.0;
  int nodes = 0;
  int rule_nodes = 0;
  QuadratureRule rule = QuadratureRule::midpoint;
  double lambda_cut = 0.0;
  bool sampling_override = false;
  double weight_l4 = 0.0;
  std::optional<RationalRatio> aspect_ratio;
};

/// Smallest and largest eigenvalue of G_T on {lambda <= lambda_max} and K = 1/lambda_min.
inline GramianReport observability_constant(const ObservationSetup& setup,
                                            const SolverOptions& options = {}) {
  const Gramian gram = Gramian::from_setup(setup, options.threads);
  const auto lz = lanczos_extremal(
      [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { y = gram.apply(x); },
      static_cast<Eigen::Index>(gram.dim()), options.seed, options.tolerance,
      options.max_iterations);
  GramianReport r;
  r.lambda_min = std::max(lz.lambda_min, 0.0);
  r.lambda_max = lz.lambda_max;
  r.observability_constant =
      r.lambda_min > 0.0 ? 1.0 / r.lambda_min : std::numeric_limits<double>::infinity();
  r.residual_min = lz.residual_min;
  r.residual_max = lz.residual_max;
  r.iterations = lz.iterations;
  r.dim = gram.dim();
  r.horizon = setup.horizon;
  r.nodes = static_cast<int>(gram.quadrature().size());
  r.rule_nodes = required_nodes(setup.horizon, setup.lambda_max);
  r.rule = setup.rule;
  r.lambda_cut = setup.lambda_max;
  r.sampling_override = r.nodes < r.rule_nodes;
  r.weight_l4 = setup.weight.lp_norm(4.0);
  r.aspect_ratio = setup.weight.torus().aspect_ratio();
  return r;
}

struct SweepPoint {
  double lambda_max = 0.0;
  std::size_t dim = 0;
  double lambda_min = 0.0;
  double observability_constant = 0.0;
  int iterations = 0;
};

/// K(lambda_max) curve. Node counts follow the sampling rule at each cut
/// unless the base setup fixes them.
inline std::vector<SweepPoint> observability_sweep(ObservationSetup setup,
                                                   std::span<const double> cuts,
                                                   const SolverOptions& options = {}) {
  const int fixed_nodes = setup.nodes;
  std::vector<SweepPoint> out;
  for (double cut : cuts) {
    setup.lambda_max = cut;
    setup.nodes = fixed_nodes;
    const auto rep = observability_constant(setup, options);
    out.push_back({cut, rep.dim, rep.lambda_min, rep.observability_constant, rep.iterations});
  }
  return out;
}

/// Smallest node count for which time integrals of |exp(itLap) u|^2 are
/// sampled per the rule: the band is the spread of populated eigenvalues.
inline int required_nodes_for(const FourierField& u, double horizon) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] != cplx{}) {
      lo = std::min(lo, u.torus().eigenvalue(i));
      hi = std::max(hi, u.torus().eigenvalue(i));
    }
  }
  return hi >= lo ? sampling_rule_nodes(horizon, hi - lo) : 1;
}

/// Pointwise time integral sum_j w_j |exp(i t_j Lap) u0|^2 on the grid.
inline std::vector<double> time_integrated_square(const FourierField& u0,
                                                  const TimeQuadrature& quad) {
  const Torus& torus = u0.torus();
  std::vector<double> acc(torus.size());
  SpatialField grid(u0.torus_ptr());
  for (std::size_t j = 0; j < quad.size(); ++j) {
    const FourierField c = propagate(u0, quad.nodes[j]);
    torus.backward(c.coefficients(), grid.values());
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += quad.weights[j] * std::norm(grid[i]);
  }
  return acc;
}

/// ||exp(itLap) u0||_{L4(T; L2(0,T))}: the time integral of |u|^2 at every grid
/// point, then the spatial L4 norm of its square root.
inline double mixed_norm_L4L2(const FourierField& u0, double horizon, int nodes,
                              QuadratureRule rule = QuadratureRule::midpoint,
                              bool allow_undersampling = false) {
  const int need = required_nodes_for(u0, horizon);
  if (nodes < need && !allow_undersampling) {
    throw DomainError("node count " + std::to_string(nodes) +
                      " is below the sampling rule minimum " + std::to_string(need));
  }
  const auto acc = time_integrated_square(u0, TimeQuadrature::make(rule, horizon, nodes));
  double s = 0.0;
  for (double v : acc) s += v * v;
  return std::pow(s * u0.torus().cell_area(), 0.25);
}

/// Largest ratio ||exp(itLap)u||_{L4(L2)} / ||u|| over random band-limited states.
inline double strichartz_ratio_max(const TorusPtr& torus, double lambda_max, double horizon,
                                   int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const FourierField u = random_band_limited(torus, lambda_max, rng);
    const int nodes = std::max(required_nodes_for(u, horizon), 8);
    best = std::max(best, mixed_norm_L4L2(u, horizon, nodes) / u.norm());
  }
  return best;
}

/// Modes of the eigenspace {-Lap u = lambda u} on the grid (Nyquist excluded).
inline std::vector<std::size_t> eigenspace_slots(const Torus& torus, double lambda) {
  std::vector<std::size_t> slots;
  const double tol = 1e-9 * std::max(1.0, std::abs(lambda));
  for (std::size_t i = 0; i < torus.size(); ++i) {
    if (!torus.is_nyquist(i) && std::abs(torus.eigenvalue(i) - lambda) <= tol) slots.push_back(i);
  }
  return slots;
}

/// Matrix of P_lambda M_{W^2} P_lambda in the orthonormal exponential basis of
/// the eigenspace: entry (k, l) is the Fourier coefficient of W^2 at mode k - l.
inline Eigen::MatrixXcd eigenspace_matrix(const Torus& torus, std::span<const std::size_t> slots,
                                          const FourierField& w2_hat) {
  const auto n = static_cast<Eigen::Index>(slots.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Mode mk = torus.mode(slots[k]);
    for (Eigen::Index l = 0; l < n; ++l) {
      const Mode ml = torus.mode(slots[l]);
      const int dm = ((mk.m - ml.m) % torus.nx() + torus.nx()) % torus.nx();
      const int dn = torus.ny() == 1 ? 0 : ((mk.n - ml.n) % torus.ny() + torus.ny()) % torus.ny();
      m(k, l) = w2_hat[torus.index(dm, dn)];
    }
  }
  return m;
}

/// Smallest eigenvalue of P_lambda M_{W^2} P_lambda; its reciprocal is the
/// constant of the eigenfunction restriction inequality
/// ||u_lambda||^2 <= C ||W u_lambda||^2.
inline double eigenspace_observability(const TorusPtr& torus, double lambda,
                                       const SpatialField& weight) {
  require_real_weight(weight, "observation weight W");
  if (!weight.torus().same_geometry(*torus)) throw DomainError("weight geometry mismatch");
  const auto slots = eigenspace_slots(*torus, lambda);
  if (slots.empty()) {
    throw DomainError("no lattice modes with eigenvalue " + std::to_string(lambda));
  }
  SpatialField w2(weight.torus_ptr());
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = std::norm(weight[i].real());
  const FourierField w2_hat = to_fourier(w2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(eigenspace_matrix(*torus, slots, w2_hat),
                                                      Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[0];
}

}  // namespace toruslab

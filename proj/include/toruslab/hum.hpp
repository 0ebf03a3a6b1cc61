#pragma once

// Null control of i u_t + Lap u = a f on (0, T) by the Hilbert Uniqueness
// Method. With S v0 = a exp(itLap) v0 and R f = i int exp(-itLap)(a f) dt, the
// operator -i R S is the observability Gramian with W = a. Solving
// G w = u0 and setting v0 = -i w, f = S v0 drives u0 to zero at time T.
//
// S, R, G and the forward solver share one time quadrature, so u(T) = 0 holds
// up to the CG tolerance on the truncated subspace. An independent finer
// midpoint rule measures the time discretization error.

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/krylov.hpp"
#include "toruslab/observability.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/quadrature.hpp"
#include "toruslab/torus.hpp"

namespace toruslab {

/// plain: the reported control is f = a exp(itLap) v0 and the source is a f.
/// a_times_g: the reported control is g = exp(itLap) v0 with source a^2 g.
/// Both give the same physical source.
enum class ControlForm { plain, a_times_g };

inline std::string_view to_string(ControlForm f) {
  return f == ControlForm::plain ? "plain" : "a_times_g";
}

inline ControlForm parse_control_form(std::string_view name) {
  if (name == "plain") return ControlForm::plain;
  if (name == "a_times_g") return ControlForm::a_times_g;
  throw DomainError("unknown control form '" + std::string(name) + "'");
}

/// A space-time function sampled at the nodes of a time quadrature.
struct SampledSignal {
  TimeQuadrature quadrature;
  std::vector<SpatialField> samples;

  /// Discrete L2((0,T) x torus) norm.
  double norm() const {
    double s = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      s += quadrature.weights[j] * std::pow(samples[j].norm(), 2);
    }
    return std::sqrt(s);
  }
};

inline cplx inner(const SampledSignal& f, const SampledSignal& g) {
  if (f.samples.size() != g.samples.size() || f.quadrature.nodes != g.quadrature.nodes) {
    throw DomainError("signals live on different time grids");
  }
  cplx s = 0.0;
  for (std::size_t j = 0; j < f.samples.size(); ++j) {
    s += f.quadrature.weights[j] * inner(f.samples[j], g.samples[j]);
  }
  return s;
}

namespace detail {

inline void require_control_coefficient(const SpatialField& a, const Torus& torus) {
  require_real_weight(a, "control coefficient a");
  if (!a.torus().same_geometry(torus)) throw DomainError("control coefficient geometry mismatch");
}

}  // namespace detail

/// S v0: sample j is a * exp(i t_j Lap) v0.
inline SampledSignal apply_S(const FourierField& v0, const SpatialField& a,
                             const TimeQuadrature& quad) {
  detail::require_control_coefficient(a, v0.torus());
  SampledSignal out{quad, {}};
  out.samples.reserve(quad.size());
  for (double t : quad.nodes) out.samples.push_back(multiply(a, from_fourier(propagate(v0, t))));
  return out;
}

/// Sum_j w_j exp(-i t_j Lap) s_j in Fourier form, with s_j written into the
/// grid buffer by source(j, grid).
template <class Source>
FourierField duhamel_sum(const TorusPtr& torus, const TimeQuadrature& quad, Source&& source,
                         unsigned threads = 1) {
  const Torus& t = *torus;
  auto acc = blocked_sum<cplx>(quad.size(), t.size(), threads,
                               [&](std::size_t first, std::size_t last, std::vector<cplx>& out) {
                                 std::vector<cplx> grid(t.size());
                                 std::vector<cplx> coeffs(t.size());
                                 for (std::size_t j = first; j < last; ++j) {
                                   source(j, std::span<cplx>(grid));
                                   t.forward(grid, coeffs);
                                   const double tj = quad.nodes[j];
                                   const double wj = quad.weights[j];
                                   for (std::size_t k = 0; k < coeffs.size(); ++k) {
                                     out[k] += wj * std::polar(1.0, tj * t.eigenvalue(k)) * coeffs[k];
                                   }
                                 }
                               });
  return FourierField(torus, std::move(acc));
}

/// R f = i Sum_j w_j exp(-i t_j Lap)(a f_j), the state at t = 0 of the
/// backward problem with u(T) = 0.
inline FourierField apply_R(const SampledSignal& f, const SpatialField& a, unsigned threads = 1) {
  if (f.samples.size() != f.quadrature.size()) throw DomainError("signal does not match its time grid");
  detail::require_control_coefficient(a, a.torus());
  for (const auto& s : f.samples) {
    if (!s.torus().same_geometry(a.torus())) throw DomainError("signal geometry mismatch");
  }
  FourierField out = duhamel_sum(a.torus_ptr(), f.quadrature,
                                 [&](std::size_t j, std::span<cplx> grid) {
                                   for (std::size_t i = 0; i < grid.size(); ++i) {
                                     grid[i] = a[i] * f.samples[j][i];
                                   }
                                 },
                                 threads);
  out *= cplx(0.0, 1.0);
  return out;
}

/// u(T) for i u_t + Lap u = s by exponential quadrature:
/// u(T) = exp(iTLap) (u0 - i Sum_j w_j exp(-i t_j Lap) s_j).
template <class Source>
FourierField forward_with_source(const FourierField& u0, const TimeQuadrature& quad,
                                 Source&& source, unsigned threads = 1) {
  FourierField acc = duhamel_sum(u0.torus_ptr(), quad, std::forward<Source>(source), threads);
  acc *= cplx(0.0, -1.0);
  acc += u0;
  return propagate(std::move(acc), quad.horizon);
}

inline FourierField forward_with_source(const FourierField& u0, const SampledSignal& sources,
                                        unsigned threads = 1) {
  if (sources.samples.size() != sources.quadrature.size()) {
    throw DomainError("source does not match its time grid");
  }
  for (const auto& s : sources.samples) {
    if (!s.torus().same_geometry(u0.torus())) throw DomainError("source geometry mismatch");
  }
  return forward_with_source(
      u0, sources.quadrature,
      [&](std::size_t j, std::span<cplx> grid) {
        std::copy(sources.samples[j].values().begin(), sources.samples[j].values().end(), grid.begin());
      },
      threads);
}

struct HumOptions {
  double lambda_max = 0.0;
  int nodes = 0;  ///< 0 selects the sampling rule
  QuadratureRule rule = QuadratureRule::midpoint;
  bool sampling_override = false;
  double tolerance = 1e-8;
  int max_iterations = -1;  ///< -1: ten times the subspace dimension
  ControlForm form = ControlForm::plain;
  unsigned threads = 1;
};

struct ForwardResidual {
  double subspace = 0.0;  ///< ||P u(T)|| / ||u0||, P the truncation projector
  double full = 0.0;      ///< ||u(T)|| / ||u0|| on the whole grid
};

/// HUM datum and the control it generates. Control samples are evaluated on
/// demand from v0 rather than stored.
struct ControlSolution {
  FourierField v0;
  SpatialField a;
  TimeQuadrature quadrature;
  ControlForm form = ControlForm::plain;
  double lambda_max = 0.0;
  std::size_t dim = 0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  ForwardResidual forward_residual;

  /// The reported control at time t in (0, T): f or g depending on form.
  SpatialField control_at(double t) const {
    SpatialField g = from_fourier(propagate(v0, t));
    return form == ControlForm::plain ? multiply(a, g) : g;
  }
  /// The physical source a * f = a^2 * g at time t.
  void source_at(double t, std::span<cplx> grid) const {
    a.torus().backward(propagate(v0, t).coefficients(), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] *= std::norm(a[i].real());
  }
  SpatialField control_sample(std::size_t j) const { return control_at(quadrature.nodes.at(j)); }

  /// All control samples on the solver's grid.
  SampledSignal controls() const {
    SampledSignal s{quadrature, {}};
    for (std::size_t j = 0; j < quadrature.size(); ++j) s.samples.push_back(control_sample(j));
    return s;
  }
};

/// u(T) driven by the solution's source, integrated with `quad`; relative to ||u0||.
inline ForwardResidual control_residual(const ControlSolution& sol, const FourierField& u0,
                                        const TimeQuadrature& quad, unsigned threads = 1) {
  const FourierField uT = forward_with_source(
      u0, quad, [&](std::size_t j, std::span<cplx> grid) { sol.source_at(quad.nodes[j], grid); },
      threads);
  const ModeSubspace sub(u0.torus_ptr(), sol.lambda_max);
  return {sub.project(uT).norm() / u0.norm(), uT.norm() / u0.norm()};
}

/// Solve G w = u0 on {lambda <= lambda_max} by CG, with G the Gramian for W = a.
inline ControlSolution synthesize_control(const FourierField& u0, const SpatialField& a,
                                          double horizon, const HumOptions& options = {}) {
  detail::require_control_coefficient(a, u0.torus());
  if (!(a.norm() > 1e-12)) throw DomainError("control coefficient a has vanishing L2 norm");
  ObservationSetup setup{a};
  setup.horizon = horizon;
  setup.nodes = options.nodes;
  setup.rule = options.rule;
  setup.lambda_max = options.lambda_max;
  setup.sampling_override = options.sampling_override;
  const Gramian gram = Gramian::from_setup(setup, options.threads);
  const ModeSubspace& sub = gram.subspace();
  sub.require_inside(u0, "initial state u0");
  if (!(u0.norm() > 0.0)) throw DomainError("initial state u0 is zero");

  const std::vector<cplx> rhs_c = sub.gather(u0);
  const Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(
      rhs_c.data(), static_cast<Eigen::Index>(rhs_c.size()));
  const int max_iter = options.max_iterations > 0 ? options.max_iterations
                                                  : 10 * static_cast<int>(gram.dim());
  const auto cg = conjugate_gradient(
      [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { y = gram.apply(x); }, rhs,
      options.tolerance, max_iter);
  if (!cg.converged) {
    std::ostringstream msg;
    msg << "HUM conjugate gradients stalled at relative residual " << cg.relative_residual
        << " after " << cg.iterations << " iterations (tolerance " << options.tolerance
        << "); the Gramian is numerically singular on the subspace: use a longer horizon T "
           "or a smaller lambda_max";
    throw NumericalError(msg.str());
  }

  ControlSolution sol{sub.scatter(std::vector<cplx>(cg.solution.data(),
                                                    cg.solution.data() + cg.solution.size())),
                      a, gram.quadrature()};
  sol.v0 *= cplx(0.0, -1.0);
  sol.form = options.form;
  sol.lambda_max = options.lambda_max;
  sol.dim = gram.dim();
  sol.cg_iterations = cg.iterations;
  sol.cg_residual = cg.relative_residual;
  sol.forward_residual = control_residual(sol, u0, sol.quadrature, options.threads);
  return sol;
}

/// Residual of the same continuous-time control integrated with an
/// independent midpoint rule of factor * Nt nodes.
inline ForwardResidual verify_control(const ControlSolution& sol, const FourierField& u0,
                                      int factor = 4, unsigned threads = 1) {
  const auto fine = TimeQuadrature::make(QuadratureRule::midpoint, sol.quadrature.horizon,
                                         factor * static_cast<int>(sol.quadrature.size()));
  return control_residual(sol, u0, fine, threads);
}

struct RefinementLevel {
  int nodes = 0;
  int cg_iterations = 0;
  double solver_residual = 0.0;        ///< on the solver's own grid, subspace
  double verification_residual = 0.0;  ///< independent finer grid, subspace
  double verification_residual_full = 0.0;
};

struct RefinementStudy {
  std::vector<RefinementLevel> levels;
  /// log2 of successive verification residual ratios.
  std::vector<double> observed_orders;

  double min_order() const {
    double m = std::numeric_limits<double>::infinity();
    for (double o : observed_orders) m = std::min(m, o);
    return m;
  }
};

/// Re-solve with Nt, 2 Nt, ... and verify each with factor times its nodes.
inline RefinementStudy refine_control(const FourierField& u0, const SpatialField& a, double horizon,
                                      HumOptions options, int levels = 3, int factor = 4) {
  const int base = options.nodes > 0 ? options.nodes : required_nodes(horizon, options.lambda_max);
  RefinementStudy study;
  for (int l = 0; l < levels; ++l) {
    options.nodes = base << l;
    const auto sol = synthesize_control(u0, a, horizon, options);
    const auto ver = verify_control(sol, u0, factor, options.threads);
    study.levels.push_back({options.nodes, sol.cg_iterations, sol.forward_residual.subspace,
                            ver.subspace, ver.full});
  }
  for (std::size_t l = 1; l < study.levels.size(); ++l) {
    study.observed_orders.push_back(std::log2(study.levels[l - 1].verification_residual /
                                              study.levels[l].verification_residual));
  }
  return study;
}

struct TrajectoryPoint {
  double t = 0.0;
  double state_norm = 0.0;
  double control_norm = 0.0;
};

/// ||u(t)|| and ||f(t)|| at t = 0, every node, and T. The state at a node
/// includes the quadrature terms up to and including that node.
inline std::vector<TrajectoryPoint> control_trajectory(const ControlSolution& sol,
                                                       const FourierField& u0) {
  const Torus& torus = u0.torus();
  std::vector<TrajectoryPoint> out;
  out.push_back({0.0, u0.norm(), sol.control_at(0.0).norm()});
  FourierField acc(u0.torus_ptr());
  std::vector<cplx> grid(torus.size());
  std::vector<cplx> coeffs(torus.size());
  const auto& q = sol.quadrature;
  for (std::size_t j = 0; j < q.size(); ++j) {
    sol.source_at(q.nodes[j], grid);
    torus.forward(grid, coeffs);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      acc[k] += q.weights[j] * std::polar(1.0, q.nodes[j] * torus.eigenvalue(k)) * coeffs[k];
    }
    FourierField state = acc;
    state *= cplx(0.0, -1.0);
    state += u0;
    out.push_back({q.nodes[j], state.norm(), sol.control_at(q.nodes[j]).norm()});
  }
  if (out.back().t < q.horizon) {
    out.push_back({q.horizon, out.back().state_norm, sol.control_at(q.horizon).norm()});
  }
  return out;
}

}  // namespace toruslab

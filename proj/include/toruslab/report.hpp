#pragma once

// JSON conversions for the module reports and the CSV tables the runner
// emits. Numbers are written with 17 significant digits so a run is
// reproducible byte for byte.

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "toruslab/damped.hpp"
#include "toruslab/diagnostics.hpp"
#include "toruslab/error.hpp"
#include "toruslab/hum.hpp"
#include "toruslab/inequalities.hpp"
#include "toruslab/observability.hpp"

namespace toruslab {

using json = nlohmann::ordered_json;

class CsvTable {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) {
      throw DomainError("CSV row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(columns_.size()));
    }
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += format(row[i]);
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << str();
  }

 private:
  static std::string format(const Cell& c) {
    char buf[40];
    if (const double* d = std::get_if<double>(&c)) {
      std::snprintf(buf, sizeof buf, "%.17g", *d);
      return buf;
    }
    if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

inline json geometry_json(const Torus& t) {
  json j{{"dim", t.dim()}, {"period_x", t.period_x()}, {"nx", t.nx()}};
  if (t.dim() == 2) {
    j["period_y"] = t.period_y();
    j["ny"] = t.ny();
  }
  if (const auto r = t.aspect_ratio()) j["aspect_ratio"] = std::to_string(r->p) + "/" + std::to_string(r->q);
  return j;
}

inline json to_json(const GramianReport& r) {
  json j{{"lambda_min", r.lambda_min},
         {"lambda_max", r.lambda_max},
         {"K", r.observability_constant},
         {"residual_min", r.residual_min},
         {"residual_max", r.residual_max},
         {"iterations", r.iterations},
         {"dim", r.dim},
         {"horizon", r.horizon},
         {"nodes", r.nodes},
         {"rule_nodes", r.rule_nodes},
         {"rule", std::string(to_string(r.rule))},
         {"lambda_cut", r.lambda_cut},
         {"sampling_override", r.sampling_override},
         {"weight_l4", r.weight_l4}};
  return j;
}

/// Columns: lambda_max, dim, lambda_min, K, iters.
inline CsvTable sweep_csv(const std::vector<SweepPoint>& points) {
  CsvTable t({"lambda_max", "dim", "lambda_min", "K", "iters"});
  for (const auto& p : points) {
    t.add({p.lambda_max, static_cast<long long>(p.dim), p.lambda_min, p.observability_constant,
           static_cast<long long>(p.iterations)});
  }
  return t;
}

inline json to_json(const ForwardResidual& r) { return {{"subspace", r.subspace}, {"full", r.full}}; }

inline json to_json(const ControlSolution& s) {
  return {{"form", std::string(to_string(s.form))},
          {"lambda_max", s.lambda_max},
          {"dim", s.dim},
          {"horizon", s.quadrature.horizon},
          {"nodes", s.quadrature.size()},
          {"rule", std::string(to_string(s.quadrature.rule))},
          {"cg_iterations", s.cg_iterations},
          {"cg_residual", s.cg_residual},
          {"forward_residual", to_json(s.forward_residual)},
          {"v0_norm", s.v0.norm()}};
}

/// Columns: t, state_norm, control_norm.
inline CsvTable trajectory_csv(const std::vector<TrajectoryPoint>& pts) {
  CsvTable t({"t", "state_norm", "control_norm"});
  for (const auto& p : pts) t.add({p.t, p.state_norm, p.control_norm});
  return t;
}

/// Columns: nodes, cg_iterations, solver_residual, verification_residual,
/// verification_residual_full, observed_order (empty on the first level).
inline CsvTable refinement_csv(const RefinementStudy& s) {
  CsvTable t({"nodes", "cg_iterations", "solver_residual", "verification_residual",
              "verification_residual_full", "observed_order"});
  for (std::size_t l = 0; l < s.levels.size(); ++l) {
    const auto& v = s.levels[l];
    CsvTable::Cell order = std::string();
    if (l > 0) order = s.observed_orders[l - 1];
    t.add({static_cast<long long>(v.nodes), static_cast<long long>(v.cg_iterations), v.solver_residual,
           v.verification_residual, v.verification_residual_full, order});
  }
  return t;
}

inline json to_json(const RefinementStudy& s) {
  json levels = json::array();
  for (const auto& v : s.levels) {
    levels.push_back({{"nodes", v.nodes},
                      {"cg_iterations", v.cg_iterations},
                      {"solver_residual", v.solver_residual},
                      {"verification_residual", v.verification_residual},
                      {"verification_residual_full", v.verification_residual_full}});
  }
  return {{"levels", levels}, {"observed_orders", s.observed_orders}, {"min_order", s.min_order()}};
}

/// Summary only; the time series goes to decay_csv().
inline json to_json(const DecayReport& r) {
  return {{"damping", r.damping},
          {"dt", r.dt},
          {"steps", r.times.size() - 1},
          {"rate", r.rate},
          {"prefactor", r.prefactor},
          {"r_squared", r.r_squared},
          {"window_start", r.window_start},
          {"window_end", r.window_end},
          {"norm_violations", r.norm_violations},
          {"global_energy_residual", r.global_energy_residual},
          {"final_norm", r.norms.back()}};
}

/// Columns: t, norm, energy_residual (empty at t = 0).
inline CsvTable decay_csv(const DecayReport& r) {
  CsvTable t({"t", "norm", "energy_residual"});
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    CsvTable::Cell res = std::string();
    if (i > 0) res = r.energy_residuals[i - 1];
    t.add({r.times[i], r.norms[i], res});
  }
  return t;
}

/// Columns: lambda, circle_count, max_ratio.
inline CsvTable zygmund_csv(const std::vector<ZygmundRow>& rows) {
  CsvTable t({"lambda", "circle_count", "max_ratio"});
  for (const auto& r : rows) {
    t.add({static_cast<long long>(r.lambda), static_cast<long long>(r.circle_count), r.max_ratio});
  }
  return t;
}

inline json to_json(const InghamReport& r) {
  return {{"frequencies", r.frequencies.size()},
          {"horizon", r.horizon},
          {"B", r.smallest},
          {"largest", r.largest},
          {"condition", r.condition}};
}

inline json to_json(const InghamCertificate& c) {
  return {{"B", c.smallest},
          {"eigenspace_min", c.eigenspace_min},
          {"worst_eigenvalue", c.worst_eigenvalue},
          {"bound", c.bound},
          {"certified", c.certified},
          {"note", c.note}};
}

/// Columns: T, B.
inline CsvTable ingham_csv(const std::vector<InghamChartPoint>& pts) {
  CsvTable t({"T", "B"});
  for (const auto& p : pts) t.add({p.horizon, p.smallest});
  return t;
}

/// Columns: p, q, height, fraction.
inline CsvTable direction_csv(const DirectionHistogram& h) {
  CsvTable t({"p", "q", "height", "fraction"});
  for (const auto& b : h.bins) {
    t.add({static_cast<long long>(b.direction.m), static_cast<long long>(b.direction.n),
           static_cast<long long>(direction_height(b.direction)), b.fraction});
  }
  return t;
}

/// Columns: m, residual.
inline CsvTable direction_residual_csv(const DirectionHistogram& h) {
  CsvTable t({"m", "residual"});
  for (int m = 1; m <= h.m_max; ++m) t.add({static_cast<long long>(m), h.residual[m - 1]});
  return t;
}

inline json to_json(const DirectionHistogram& h) {
  return {{"proxy", true},
          {"bins", h.bins.size()},
          {"zero_mode_fraction", h.zero_mode_fraction},
          {"m_max", h.m_max},
          {"residual", h.residual},
          {"convention", h.convention}};
}

}  // namespace toruslab

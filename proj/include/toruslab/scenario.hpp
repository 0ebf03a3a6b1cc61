#pragma once

// Scenario orchestration: validates a Config, builds geometry, weight and
// initial state, runs one module, and writes manifest.json plus CSV and TCF1
// artifacts into an output directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "toruslab/config.hpp"
#include "toruslab/damped.hpp"
#include "toruslab/diagnostics.hpp"
#include "toruslab/error.hpp"
#include "toruslab/hum.hpp"
#include "toruslab/inequalities.hpp"
#include "toruslab/observability.hpp"
#include "toruslab/report.hpp"
#include "toruslab/tcf1.hpp"
#include "toruslab/weights.hpp"

namespace toruslab {

enum class ScenarioKind { observability, control, damp, zygmund, ingham, density, directions };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::observability: return "observability";
    case ScenarioKind::control: return "control";
    case ScenarioKind::damp: return "damp";
    case ScenarioKind::zygmund: return "zygmund";
    case ScenarioKind::ingham: return "ingham";
    case ScenarioKind::density: return "density";
    case ScenarioKind::directions: return "directions";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view name) {
  for (auto k : {ScenarioKind::observability, ScenarioKind::control, ScenarioKind::damp,
                 ScenarioKind::zygmund, ScenarioKind::ingham, ScenarioKind::density,
                 ScenarioKind::directions}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown scenario kind '" + std::string(name) + "'");
}

enum class RunMode { run, sweep };

inline std::string_view to_string(RunMode m) { return m == RunMode::run ? "run" : "sweep"; }

/// A validated configuration with its geometry and weight spec resolved.
struct Scenario {
  Config config;
  ScenarioKind kind = ScenarioKind::observability;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  TorusPtr torus;
  WeightSpec weight;
  QuadratureRule rule = QuadratureRule::midpoint;

  static Scenario from_config(Config cfg);

  /// The seed, or a ConfigError naming what needed it.
  std::uint64_t require_seed(std::string_view what) const {
    if (!seed) throw ConfigError("seed must be set for " + std::string(what));
    return *seed;
  }
};

namespace detail {

inline void check(bool ok, std::string_view key, std::string_view message) {
  if (!ok) throw ConfigError(std::string(key) + ": " + std::string(message));
}

inline void check_positive(const Config& c, std::string_view key) {
  const double v = c.get<double>(key);
  check(std::isfinite(v) && v > 0.0, key, "must be positive");
}

inline void check_at_least(const Config& c, std::string_view key, int lo) {
  check(c.get<int>(key) >= lo, key, "must be at least " + std::to_string(lo));
}

inline WeightSpec weight_from_config(const Config& c) {
  WeightSpec s;
  try {
    s.kind = parse_weight_kind(c.get<std::string>("weight.kind"));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("weight.kind: ") + e.what());
  }
  s.level = c.get<double>("weight.level");
  s.x0 = c.get<double>("weight.x0");
  s.x1 = c.get<double>("weight.x1");
  s.cx = c.get<double>("weight.cx");
  s.cy = c.get<double>("weight.cy");
  s.radius = c.get<double>("weight.radius");
  s.cells = c.get<int>("weight.cells");
  s.depth = c.get<int>("weight.depth");
  s.ratio = c.get<double>("weight.ratio");
  s.beta = c.get<double>("weight.beta");
  if (s.kind == WeightKind::file) {
    s.path = c.resolve_path("weight.path");
    check(!s.path.empty(), "weight.path", "must be set for kind = file");
    check(std::filesystem::exists(s.path), "weight.path", "file not found: " + s.path.string());
  }
  return s;
}

}  // namespace detail

inline Scenario Scenario::from_config(Config cfg) {
  Scenario s;
  s.kind = parse_scenario_kind(cfg.get<std::string>("kind"));
  if (cfg.has("seed")) {
    const auto v = cfg.get<std::int64_t>("seed");
    detail::check(v >= 0, "seed", "must be nonnegative");
    s.seed = static_cast<std::uint64_t>(v);
  }
  detail::check_at_least(cfg, "threads", 1);
  s.threads = static_cast<unsigned>(cfg.get<int>("threads"));

  const int dim = cfg.get<int>("geometry.dim");
  detail::check(dim == 1 || dim == 2, "geometry.dim", "must be 1 or 2");
  detail::check_positive(cfg, "geometry.period_x");
  const int nx = cfg.get<int>("geometry.nx");
  detail::check(nx >= 2 && nx % 2 == 0, "geometry.nx", "must be even and at least 2");
  if (dim == 2) {
    detail::check_positive(cfg, "geometry.period_y");
    const int ny = cfg.get<int>("geometry.ny");
    detail::check(ny >= 2 && ny % 2 == 0, "geometry.ny", "must be even and at least 2");
    s.torus = Torus::make_2d(cfg.get<double>("geometry.period_x"), cfg.get<double>("geometry.period_y"),
                             nx, ny);
  } else {
    s.torus = Torus::make_1d(cfg.get<double>("geometry.period_x"), nx);
  }

  s.weight = detail::weight_from_config(cfg);
  detail::check_positive(cfg, "time.horizon");
  detail::check_at_least(cfg, "time.nodes", 0);
  try {
    s.rule = parse_quadrature_rule(cfg.get<std::string>("time.rule"));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("time.rule: ") + e.what());
  }

  const std::string state = cfg.get<std::string>("state.kind");
  detail::check(state == "random" || state == "mode" || state == "file", "state.kind",
                "must be random, mode or file");
  detail::check_positive(cfg, "state.band");
  if (state == "file") {
    const auto p = cfg.resolve_path("state.path");
    detail::check(!p.empty() && std::filesystem::exists(p), "state.path",
                  "file not found: " + p.string());
  }

  detail::check_positive(cfg, "observability.lambda_max");
  detail::check_positive(cfg, "observability.tolerance");
  for (double c : cfg.get<std::vector<double>>("observability.cuts")) {
    detail::check(c > 0.0, "observability.cuts", "entries must be positive");
  }
  detail::check_positive(cfg, "control.lambda_max");
  detail::check_positive(cfg, "control.tolerance");
  try {
    parse_control_form(cfg.get<std::string>("control.form"));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("control.form: ") + e.what());
  }
  detail::check_at_least(cfg, "control.verify_factor", 1);
  detail::check_at_least(cfg, "control.levels", 2);
  detail::check_at_least(cfg, "control.snapshots", 0);
  detail::check_positive(cfg, "damping.dt");
  detail::check_positive(cfg, "damping.t_max");
  detail::check_at_least(cfg, "damping.levels", 2);
  detail::check_at_least(cfg, "zygmund.lambda_max", 0);
  detail::check_at_least(cfg, "zygmund.min_count", 1);
  detail::check_at_least(cfg, "zygmund.trials", 1);
  detail::check_positive(cfg, "ingham.lambda_cut");
  detail::check_positive(cfg, "ingham.t_min");
  detail::check(cfg.get<double>("ingham.t_max") >= cfg.get<double>("ingham.t_min"), "ingham.t_max",
                "must not be below ingham.t_min");
  detail::check_at_least(cfg, "ingham.t_count", 1);
  detail::check_positive(cfg, "density.tau");
  detail::check_at_least(cfg, "density.nodes", 0);
  for (double t : cfg.get<std::vector<double>>("density.taus")) {
    detail::check(t > 0.0, "density.taus", "entries must be positive");
  }
  detail::check_at_least(cfg, "directions.m_max", 1);

  s.config = std::move(cfg);
  return s;
}

namespace detail {

/// Independent stream per purpose so adding a randomized stage does not
/// shift the draws of another.
inline std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

inline constexpr std::uint32_t state_stream = 1;

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json config_json(const Config& c) {
  json j = json::object();
  for (const auto& [k, v] : c.values()) {
    std::visit([&](const auto& x) { j[k] = x; }, v);
  }
  return j;
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void csv(const std::string& name, const CsvTable& table) {
    table.write(dir_ / name);
    files_.push_back(name);
  }

  template <class Field>
  void field(const std::string& name, const Field& f) {
    tcf1::save(dir_ / name, f);
    files_.push_back(name);
  }

  const std::filesystem::path& path() const noexcept { return dir_; }
  const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline json weight_json(const WeightSpec& spec, const SpatialField& w, const WeightNotes& notes) {
  json j{{"spec", spec.describe()}, {"l2", w.norm()}, {"l4", w.lp_norm(4.0)}, {"sup", w.max_abs()}};
  if (notes.cap) j["cap"] = *notes.cap;
  if (notes.expected_fraction) j["expected_fraction"] = *notes.expected_fraction;
  return j;
}

}  // namespace detail

/// u0 per state.kind, normalized to unit L2 norm.
inline FourierField initial_state(const Scenario& s) {
  const Config& c = s.config;
  const std::string kind = c.get<std::string>("state.kind");
  if (kind == "random") {
    auto rng = detail::seeded_stream(s.require_seed("state.kind = random"), detail::state_stream);
    return random_band_limited(s.torus, c.get<double>("state.band"), rng);
  }
  FourierField u(s.torus);
  if (kind == "mode") {
    const Mode m{c.get<int>("state.m"), s.torus->dim() == 2 ? c.get<int>("state.n") : 0};
    const auto idx = s.torus->mode_index(m);
    if (!idx) throw ConfigError("state.m, state.n: mode is outside the grid band");
    u[*idx] = 1.0;
  } else {
    u = to_fourier(tcf1::load(s.config.resolve_path("state.path"), s.torus));
  }
  if (!(u.norm() > 0.0)) throw DomainError("initial state is zero");
  u *= 1.0 / u.norm();
  return u;
}

namespace detail {

inline ObservationSetup observation_setup(const Scenario& s, const SpatialField& w, double cut) {
  ObservationSetup setup{w};
  setup.horizon = s.config.get<double>("time.horizon");
  setup.nodes = s.config.get<int>("time.nodes");
  setup.rule = s.rule;
  setup.lambda_max = cut;
  setup.sampling_override = setup.nodes > 0;
  return setup;
}

inline json run_observability(const Scenario& s, RunMode mode, OutputDir& out) {
  const Config& c = s.config;
  WeightNotes notes;
  const SpatialField w = build_weight(s.weight, s.torus, &notes);
  SolverOptions opts;
  opts.tolerance = c.get<double>("observability.tolerance");
  opts.max_iterations = c.get<int>("observability.max_iterations");
  opts.threads = s.threads;
  if (s.seed) opts.seed = *s.seed;
  out.field("weight.tcf1", w);
  json report{{"weight", weight_json(s.weight, w, notes)}};
  if (mode == RunMode::run) {
    report["gramian"] =
        to_json(observability_constant(observation_setup(s, w, c.get<double>("observability.lambda_max")), opts));
    return report;
  }
  const auto cuts = c.get<std::vector<double>>("observability.cuts");
  const auto points = observability_sweep(observation_setup(s, w, cuts.front()), cuts, opts);
  out.csv("sweep.csv", sweep_csv(points));
  // Stabilization measure: max/min of K over the last four cuts.
  const std::size_t tail = std::min<std::size_t>(4, points.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = points.size() - tail; i < points.size(); ++i) {
    lo = std::min(lo, points[i].observability_constant);
    hi = std::max(hi, points[i].observability_constant);
  }
  report["sweep"] = {{"points", points.size()}, {"K_last", points.back().observability_constant},
                     {"tail_spread", hi / lo}};
  return report;
}

inline HumOptions hum_options(const Scenario& s) {
  const Config& c = s.config;
  HumOptions o;
  o.lambda_max = c.get<double>("control.lambda_max");
  o.nodes = c.get<int>("time.nodes");
  o.rule = s.rule;
  o.sampling_override = o.nodes > 0;
  o.tolerance = c.get<double>("control.tolerance");
  o.max_iterations = c.get<int>("control.max_iterations");
  o.form = parse_control_form(c.get<std::string>("control.form"));
  o.threads = s.threads;
  return o;
}

inline json run_control(const Scenario& s, RunMode mode, OutputDir& out) {
  const Config& c = s.config;
  WeightNotes notes;
  const SpatialField a = build_weight(s.weight, s.torus, &notes);
  const FourierField u0 = initial_state(s);
  const double horizon = c.get<double>("time.horizon");
  const int factor = c.get<int>("control.verify_factor");
  json report{{"weight", weight_json(s.weight, a, notes)}};
  if (mode == RunMode::sweep) {
    const auto study = refine_control(u0, a, horizon, hum_options(s), c.get<int>("control.levels"), factor);
    out.csv("refinement.csv", refinement_csv(study));
    report["refinement"] = to_json(study);
    report["verify_factor"] = factor;
    return report;
  }
  const auto sol = synthesize_control(u0, a, horizon, hum_options(s));
  const auto ver = verify_control(sol, u0, factor, s.threads);
  out.field("u0.tcf1", u0);
  out.field("v0.tcf1", sol.v0);
  const int snaps = c.get<int>("control.snapshots");
  const std::size_t nt = sol.quadrature.size();
  json snapshot_times = json::array();
  for (int k = 0; k < snaps; ++k) {
    const std::size_t j = snaps == 1 ? nt / 2 : (k * (nt - 1)) / static_cast<std::size_t>(snaps - 1);
    out.field("control_" + std::to_string(k) + ".tcf1", sol.control_sample(j));
    snapshot_times.push_back(sol.quadrature.nodes[j]);
  }
  out.csv("trajectory.csv", trajectory_csv(control_trajectory(sol, u0)));
  report["control"] = to_json(sol);
  report["verification"] = to_json(ver);
  report["verify_factor"] = factor;
  report["snapshot_times"] = snapshot_times;
  return report;
}

inline json run_damp(const Scenario& s, RunMode mode, OutputDir& out) {
  const Config& c = s.config;
  WeightNotes notes;
  const SpatialField a = build_weight(s.weight, s.torus, &notes);
  require_nonnegative(a, "damping coefficient a");
  const SpatialField u0 = from_fourier(initial_state(s));
  const double dt = c.get<double>("damping.dt");
  const double t_max = c.get<double>("damping.t_max");
  const double fit_start = c.get<double>("damping.fit_start");
  json report{{"weight", weight_json(s.weight, a, notes)}};
  out.field("damping.tcf1", a);
  if (mode == RunMode::sweep) {
    CsvTable table({"dt", "global_energy_residual", "norm_violations", "rate", "observed_order"});
    json levels = json::array();
    double prev = 0.0;
    double min_order = std::numeric_limits<double>::infinity();
    for (int l = 0; l < c.get<int>("damping.levels"); ++l) {
      const double h = dt / std::ldexp(1.0, l);
      auto r = damped_evolve(u0, a, t_max, h, fit_start);
      r.damping = s.weight.describe();
      CsvTable::Cell order = std::string();
      if (l > 0) {
        const double o = std::log2(prev / r.global_energy_residual);
        min_order = std::min(min_order, o);
        order = o;
      }
      table.add({h, r.global_energy_residual, static_cast<long long>(r.norm_violations), r.rate, order});
      levels.push_back(to_json(r));
      prev = r.global_energy_residual;
    }
    out.csv("energy_order.csv", table);
    report["levels"] = levels;
    report["min_order"] = min_order;
    return report;
  }
  std::optional<SpatialField> last;
  auto r = damped_evolve(u0, a, t_max, dt, fit_start, [&](double t, const SpatialField& u) {
    if (t > t_max - 0.5 * dt) last = u;
  });
  r.damping = s.weight.describe();
  out.csv("decay.csv", decay_csv(r));
  out.field("final.tcf1", *last);
  report["decay"] = to_json(r);
  return report;
}

inline json run_zygmund(const Scenario& s, OutputDir& out) {
  const Config& c = s.config;
  const auto rows = zygmund_sweep(c.get<std::int64_t>("zygmund.lambda_max"),
                                  static_cast<std::size_t>(c.get<int>("zygmund.min_count")),
                                  c.get<int>("zygmund.trials"), s.require_seed("kind = zygmund"),
                                  s.threads);
  out.csv("zygmund.csv", zygmund_csv(rows));
  json report{{"rows", rows.size()}, {"bound", std::sqrt(5.0)}};
  if (!rows.empty()) {
    const auto best = std::max_element(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
      return x.max_ratio < y.max_ratio;
    });
    report["max_ratio"] = best->max_ratio;
    report["lambda_at_max"] = best->lambda;
    report["within_bound"] = best->max_ratio <= std::sqrt(5.0);
  }
  return report;
}

inline json run_ingham(const Scenario& s, RunMode mode, OutputDir& out) {
  const Config& c = s.config;
  const double cut = c.get<double>("ingham.lambda_cut");
  const auto freqs = distinct_eigenvalues(*s.torus, cut);
  json report{{"frequencies", freqs.size()}, {"lambda_cut", cut}};
  if (mode == RunMode::sweep) {
    const int n = c.get<int>("ingham.t_count");
    const double t0 = c.get<double>("ingham.t_min");
    const double t1 = c.get<double>("ingham.t_max");
    std::vector<double> horizons;
    for (int i = 0; i < n; ++i) horizons.push_back(n == 1 ? t0 : t0 + (t1 - t0) * i / (n - 1));
    const auto chart = ingham_chart(freqs, horizons);
    out.csv("ingham.csv", ingham_csv(chart));
    report["chart_points"] = chart.size();
    return report;
  }
  const double horizon = c.get<double>("time.horizon");
  report["gram"] = to_json(ingham_gram(freqs, horizon));
  const Torus& t = *s.torus;
  const bool square = t.dim() == 2 && t.period_x() == t.period_y() && t.nx() == t.ny();
  if (c.get<bool>("ingham.certificate")) {
    if (square) {
      report["certificate"] = to_json(observability_from_ingham(build_weight(s.weight, s.torus), horizon, cut));
    } else {
      report["certificate"] = nullptr;
      report["certificate_note"] = "the Ingham route needs a square torus";
    }
  }
  return report;
}

inline json run_density(const Scenario& s, RunMode mode, OutputDir& out) {
  const Config& c = s.config;
  const FourierField u0 = initial_state(s);
  const Mode dir{c.get<int>("directions.p"), c.get<int>("directions.q")};
  json report{{"proxy", true}, {"u0_norm", u0.norm()}};
  if (mode == RunMode::sweep) {
    CsvTable table({"tau", "nodes", "mass", "l2_norm", "defect"});
    for (double tau : c.get<std::vector<double>>("density.taus")) {
      const auto d = time_averaged_density(u0, tau);
      table.add({tau, static_cast<long long>(d.nodes), d.mass(), d.l2_norm(),
                 flow_average_defect(u0, tau, dir)});
    }
    out.csv("density_sweep.csv", table);
    report["direction"] = {dir.m, dir.n};
    return report;
  }
  const double tau = c.get<double>("density.tau");
  const auto d = time_averaged_density(u0, tau, c.get<int>("density.nodes"));
  out.field("density.tcf1", d.field());
  report["tau"] = tau;
  report["nodes"] = d.nodes;
  report["mass"] = d.mass();
  report["expected_mass"] = tau * u0.norm() * u0.norm();
  report["l2_norm"] = d.l2_norm();
  return report;
}

inline json run_directions(const Scenario& s, RunMode mode, OutputDir& out) {
  const Config& c = s.config;
  if (s.torus->dim() != 2) throw ConfigError("kind = directions needs geometry.dim = 2");
  const FourierField u0 = initial_state(s);
  const Mode dir{c.get<int>("directions.p"), c.get<int>("directions.q")};
  json report{{"proxy", true}, {"direction", {dir.m, dir.n}}};
  if (mode == RunMode::sweep) {
    CsvTable table({"tau", "defect"});
    for (double tau : c.get<std::vector<double>>("density.taus")) {
      table.add({tau, flow_average_defect(u0, tau, dir)});
    }
    out.csv("defect.csv", table);
    return report;
  }
  const auto h = direction_mass(u0, c.get<int>("directions.m_max"));
  out.csv("directions.csv", direction_csv(h));
  out.csv("direction_residual.csv", direction_residual_csv(h));
  report["histogram"] = to_json(h);
  report["defect"] = flow_average_defect(u0, c.get<double>("density.tau"), dir);
  return report;
}

}  // namespace detail

/// Run the scenario and write its artifacts and manifest.json into `dir`.
/// The manifest's "created" field is the only nondeterministic output.
inline json run_scenario(const Scenario& s, RunMode mode, const std::filesystem::path& dir) {
  detail::OutputDir out(dir);
  json report;
  switch (s.kind) {
    case ScenarioKind::observability: report = detail::run_observability(s, mode, out); break;
    case ScenarioKind::control: report = detail::run_control(s, mode, out); break;
    case ScenarioKind::damp: report = detail::run_damp(s, mode, out); break;
    case ScenarioKind::zygmund: report = detail::run_zygmund(s, out); break;
    case ScenarioKind::ingham: report = detail::run_ingham(s, mode, out); break;
    case ScenarioKind::density: report = detail::run_density(s, mode, out); break;
    case ScenarioKind::directions: report = detail::run_directions(s, mode, out); break;
  }
  json manifest{{"tool", "toruslab"},
                {"format", 1},
                {"created", detail::utc_timestamp()},
                {"kind", std::string(to_string(s.kind))},
                {"mode", std::string(to_string(mode))},
                {"geometry", geometry_json(*s.torus)},
                {"scenario", detail::config_json(s.config)},
                {"report", report},
                {"files", out.files()}};
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw IoError("cannot write " + (dir / "manifest.json").string());
  f << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace toruslab

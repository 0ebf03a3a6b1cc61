#pragma once

// Scenario configuration: a fixed schema of dotted keys with typed defaults,
// read from TOML and patched by key=value overrides. Every key is always
// present after parsing (defaults filled in), so serialize() emits the fully
// resolved configuration and parse(serialize(c)) == c.

#include <toml.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "toruslab/error.hpp"

namespace toruslab {

enum class ValueType { boolean, integer, real, text, real_list };

using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

struct ConfigKey {
  std::string path;
  ValueType type;
  std::optional<ConfigValue> fallback;  ///< nullopt: no default, must be given when used
  std::string help;
};

inline const std::vector<ConfigKey>& config_schema() {
  using V = ConfigValue;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  static const std::vector<ConfigKey> schema{
      {"kind", ValueType::text, V{std::string("observability")},
       "observability | control | damp | zygmund | ingham | density | directions"},
      {"seed", ValueType::integer, std::nullopt,
       "RNG seed; required for random initial states and the zygmund sweep"},
      {"threads", ValueType::integer, V{std::int64_t{1}}, "worker threads (>= 1)"},

      {"geometry.dim", ValueType::integer, V{std::int64_t{2}}, "1 or 2"},
      {"geometry.period_x", ValueType::real, V{two_pi}, "period A > 0"},
      {"geometry.period_y", ValueType::real, V{two_pi}, "period B > 0 (ignored in 1-D)"},
      {"geometry.nx", ValueType::integer, V{std::int64_t{64}}, "grid points along x, even >= 2"},
      {"geometry.ny", ValueType::integer, V{std::int64_t{64}}, "grid points along y, even >= 2"},

      {"weight.kind", ValueType::text, V{std::string("uniform")},
       "W or a: uniform | strip | disk | checkerboard | fat_cantor | power_singularity | file"},
      {"weight.level", ValueType::real, V{1.0}, "uniform value"},
      {"weight.x0", ValueType::real, V{0.0}, "strip start"},
      {"weight.x1", ValueType::real, V{std::numbers::pi}, "strip end"},
      {"weight.cx", ValueType::real, V{std::numbers::pi}, "disk center / singular point, x"},
      {"weight.cy", ValueType::real, V{std::numbers::pi}, "disk center / singular point, y"},
      {"weight.radius", ValueType::real, V{1.0}, "disk radius"},
      {"weight.cells", ValueType::integer, V{std::int64_t{2}}, "checkerboard cells per side"},
      {"weight.depth", ValueType::integer, V{std::int64_t{3}}, "fat Cantor depth"},
      {"weight.ratio", ValueType::real, V{0.8}, "fat Cantor kept fraction per level, in (0, 1)"},
      {"weight.beta", ValueType::real, V{0.25}, "power singularity exponent, in (0, 1/2)"},
      {"weight.path", ValueType::text, V{std::string()}, "TCF1 file for kind = file"},

      {"time.horizon", ValueType::real, V{1.0}, "T > 0"},
      {"time.nodes", ValueType::integer, V{std::int64_t{0}},
       "quadrature nodes; 0 applies the sampling rule, fewer than the rule is recorded as an override"},
      {"time.rule", ValueType::text, V{std::string("midpoint")}, "midpoint | trapezoid"},

      {"state.kind", ValueType::text, V{std::string("random")}, "initial state: random | mode | file"},
      {"state.band", ValueType::real, V{50.0}, "random: modes with eigenvalue <= band"},
      {"state.m", ValueType::integer, V{std::int64_t{1}}, "mode: x index"},
      {"state.n", ValueType::integer, V{std::int64_t{0}}, "mode: y index"},
      {"state.path", ValueType::text, V{std::string()}, "TCF1 file for kind = file"},

      {"observability.lambda_max", ValueType::real, V{100.0}, "frequency cutoff"},
      {"observability.tolerance", ValueType::real, V{1e-8}, "Ritz residual tolerance (relative)"},
      {"observability.max_iterations", ValueType::integer, V{std::int64_t{-1}},
       "Lanczos steps; -1 allows the subspace dimension"},
      {"observability.cuts", ValueType::real_list,
       V{std::vector<double>{4, 8, 16, 32, 64, 128}}, "sweep: cutoffs for the K curve"},

      {"control.lambda_max", ValueType::real, V{50.0}, "frequency cutoff of the HUM subspace"},
      {"control.tolerance", ValueType::real, V{1e-8}, "CG relative residual"},
      {"control.max_iterations", ValueType::integer, V{std::int64_t{-1}},
       "CG iterations; -1 allows ten times the subspace dimension"},
      {"control.form", ValueType::text, V{std::string("plain")}, "plain | a_times_g"},
      {"control.verify_factor", ValueType::integer, V{std::int64_t{4}},
       "node multiple of the independent verification grid"},
      {"control.levels", ValueType::integer, V{std::int64_t{3}}, "sweep: node doublings"},
      {"control.snapshots", ValueType::integer, V{std::int64_t{4}}, "control fields written as TCF1"},

      {"damping.dt", ValueType::real, V{0.01}, "time step"},
      {"damping.t_max", ValueType::real, V{5.0}, "final time, a multiple of dt"},
      {"damping.fit_start", ValueType::real, V{-1.0}, "start of the decay fit; negative: t_max / 5"},
      {"damping.levels", ValueType::integer, V{std::int64_t{3}}, "sweep: dt halvings"},

      {"zygmund.lambda_max", ValueType::integer, V{std::int64_t{500}}, "largest circle radius squared"},
      {"zygmund.min_count", ValueType::integer, V{std::int64_t{8}}, "skip circles with fewer points"},
      {"zygmund.trials", ValueType::integer, V{std::int64_t{50}}, "random coefficient vectors per circle"},

      {"ingham.lambda_cut", ValueType::real, V{100.0}, "distinct eigenvalues up to this value"},
      {"ingham.t_min", ValueType::real, V{1.0}, "chart: first horizon"},
      {"ingham.t_max", ValueType::real, V{8.0}, "chart: last horizon"},
      {"ingham.t_count", ValueType::integer, V{std::int64_t{29}}, "chart: number of horizons"},
      {"ingham.certificate", ValueType::boolean, V{true},
       "also bound the Gramian of the weight at time.horizon (square tori only)"},

      {"density.tau", ValueType::real, V{1.0}, "averaging time"},
      {"density.nodes", ValueType::integer, V{std::int64_t{0}}, "0 applies the sampling rule"},
      {"density.taus", ValueType::real_list, V{std::vector<double>{1, 10, 100}},
       "sweep: averaging times"},

      {"directions.m_max", ValueType::integer, V{std::int64_t{8}}, "largest direction height binned"},
      {"directions.p", ValueType::integer, V{std::int64_t{1}}, "flow direction (p, q), primitive"},
      {"directions.q", ValueType::integer, V{std::int64_t{0}}, "flow direction (p, q), primitive"},
  };
  return schema;
}

inline const ConfigKey* find_config_key(std::string_view path) {
  for (const auto& k : config_schema()) {
    if (k.path == path) return &k;
  }
  return nullptr;
}

inline std::string_view to_string(ValueType t) {
  switch (t) {
    case ValueType::boolean: return "a boolean";
    case ValueType::integer: return "an integer";
    case ValueType::real: return "a number";
    case ValueType::text: return "a string";
    case ValueType::real_list: return "an array of numbers";
  }
  return "?";
}

namespace detail {

inline std::pair<int, int> position(const toml::node& node) {
  const auto& src = node.source();
  return {static_cast<int>(src.begin.line), static_cast<int>(src.begin.column)};
}

inline std::optional<ConfigValue> convert(const toml::node& node, ValueType type) {
  switch (type) {
    case ValueType::boolean:
      if (auto v = node.value_exact<bool>()) return ConfigValue{*v};
      break;
    case ValueType::integer:
      if (auto v = node.value_exact<std::int64_t>()) return ConfigValue{*v};
      break;
    case ValueType::real:
      if (node.is_number()) return ConfigValue{*node.value<double>()};
      break;
    case ValueType::text:
      if (auto v = node.value_exact<std::string>()) return ConfigValue{*v};
      break;
    case ValueType::real_list:
      if (const auto* arr = node.as_array()) {
        std::vector<double> out;
        for (const auto& el : *arr) {
          if (!el.is_number()) return std::nullopt;
          out.push_back(*el.value<double>());
        }
        return ConfigValue{std::move(out)};
      }
      break;
  }
  return std::nullopt;
}

inline void insert_dotted(toml::table& root, const std::string& path, const ConfigValue& value) {
  toml::table* t = &root;
  std::size_t start = 0;
  for (std::size_t dot; (dot = path.find('.', start)) != std::string::npos; start = dot + 1) {
    const std::string part = path.substr(start, dot - start);
    if (!t->contains(part)) t->insert(part, toml::table{});
    t = (*t)[part].as_table();
  }
  const std::string leaf = path.substr(start);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<double>>) {
          toml::array arr;
          for (double x : v) arr.push_back(x);
          t->insert_or_assign(leaf, std::move(arr));
        } else {
          t->insert_or_assign(leaf, v);
        }
      },
      value);
}

}  // namespace detail

class Config {
 public:
  /// All defaults; keys without a default stay unset.
  static Config defaults() {
    Config c;
    for (const auto& k : config_schema()) {
      if (k.fallback) c.values_[k.path] = *k.fallback;
    }
    return c;
  }

  static Config parse(std::string_view text, std::string_view source = "<config>") {
    toml::table root;
    try {
      root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
      throw ConfigError(std::string(e.description()), static_cast<int>(e.source().begin.line),
                        static_cast<int>(e.source().begin.column));
    }
    Config c = defaults();
    c.absorb(root, "");
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    Config c = parse(text.str(), path.string());
    c.base_dir_ = path.parent_path();
    return c;
  }

  bool has(std::string_view path) const { return values_.count(std::string(path)) > 0; }

  void set(std::string_view path, ConfigValue value) {
    const ConfigKey* key = find_config_key(path);
    if (!key) throw ConfigError("unknown key '" + std::string(path) + "'");
    if (key->type == ValueType::real && std::holds_alternative<std::int64_t>(value)) {
      value = static_cast<double>(std::get<std::int64_t>(value));
    }
    if (value.index() != index_of(key->type)) {
      throw ConfigError("key '" + std::string(path) + "' expects " + std::string(to_string(key->type)));
    }
    values_[key->path] = std::move(value);
  }

  /// Apply "dotted.key=value". The value is read as a TOML value; string keys
  /// also accept it unquoted.
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    }
    const std::string key_text = trim(assignment.substr(0, eq));
    const std::string value_text = trim(assignment.substr(eq + 1));
    const ConfigKey* key = find_config_key(key_text);
    if (!key) throw ConfigError("unknown key '" + key_text + "' in override");
    toml::table parsed;
    try {
      const std::string doc = "v = " + value_text;
      parsed = toml::parse(std::string_view(doc), std::string_view("<override>"));
    } catch (const toml::parse_error& e) {
      if (key->type == ValueType::text) {
        set(key->path, value_text);
        return;
      }
      throw ConfigError("override " + key_text + ": " + std::string(e.description()));
    }
    auto v = detail::convert(*parsed.get("v"), key->type);
    if (!v) throw ConfigError("override " + key_text + " expects " + std::string(to_string(key->type)));
    set(key->path, std::move(*v));
  }

  template <class T>
  T get(std::string_view path) const {
    const auto it = values_.find(std::string(path));
    if (it == values_.end()) {
      if (!find_config_key(path)) throw ConfigError("unknown key '" + std::string(path) + "'");
      throw ConfigError("key '" + std::string(path) + "' must be set");
    }
    if constexpr (std::is_same_v<T, int>) {
      const auto v = std::get<std::int64_t>(it->second);
      if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError("key '" + std::string(path) + "' is out of range");
      }
      return static_cast<int>(v);
    } else {
      return std::get<T>(it->second);
    }
  }

  /// Path-valued keys are relative to the directory of the loaded file.
  std::filesystem::path resolve_path(std::string_view key) const {
    std::filesystem::path p = get<std::string>(key);
    if (p.empty() || p.is_absolute()) return p;
    return base_dir_ / p;
  }

  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }

  std::string serialize() const {
    toml::table root;
    for (const auto& [path, value] : values_) detail::insert_dotted(root, path, value);
    std::ostringstream out;
    out << root << '\n';
    return out.str();
  }

  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  static std::size_t index_of(ValueType t) {
    switch (t) {
      case ValueType::boolean: return 0;
      case ValueType::integer: return 1;
      case ValueType::real: return 2;
      case ValueType::text: return 3;
      case ValueType::real_list: return 4;
    }
    return 0;
  }

  static std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t");
    return std::string(s.substr(a, b - a + 1));
  }

  void absorb(const toml::table& table, const std::string& prefix) {
    for (const auto& [k, node] : table) {
      const std::string path = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
      const auto [line, column] = detail::position(node);
      if (const auto* sub = node.as_table()) {
        bool known = false;
        for (const auto& key : config_schema()) known |= key.path.rfind(path + ".", 0) == 0;
        if (!known) throw ConfigError("unknown section '" + path + "'", line, column);
        absorb(*sub, path);
        continue;
      }
      const ConfigKey* key = find_config_key(path);
      if (!key) {
        const auto& at = k.source().begin ? k.source() : node.source();
        throw ConfigError("unknown key '" + path + "'", static_cast<int>(at.begin.line),
                          static_cast<int>(at.begin.column));
      }
      auto v = detail::convert(node, key->type);
      if (!v) {
        throw ConfigError("key '" + path + "' expects " + std::string(to_string(key->type)), line,
                          column);
      }
      values_[key->path] = std::move(*v);
    }
  }

  std::map<std::string, ConfigValue> values_;
  std::filesystem::path base_dir_;
};

/// Commented TOML listing every key with its default; unset keys are
/// commented out.
inline std::string explain_defaults() {
  std::ostringstream out;
  std::string section;
  for (const auto& key : config_schema()) {
    const auto dot = key.path.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : key.path.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? key.path : key.path.substr(dot + 1);
    if (sec != section) {
      out << "\n[" << sec << "]\n";
      section = sec;
    }
    out << "# " << key.help << '\n';
    if (key.fallback) {
      toml::table t;
      detail::insert_dotted(t, leaf, *key.fallback);
      out << t << '\n';
    } else {
      out << "# " << leaf << " = <" << to_string(key.type) << ">\n";
    }
  }
  return out.str();
}

}  // namespace toruslab

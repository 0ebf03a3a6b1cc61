// toruslab command-line runner.
//
//   toruslab run     --config scenario.toml [--config more.toml ...] [--out DIR]
//   toruslab sweep   --config scenario.toml [--out DIR]
//   toruslab explain [--config scenario.toml]
//   toruslab verify  [--out DIR]
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "acceptance/criteria.hpp"
#include "toruslab/toruslab.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct Options {
  std::vector<std::string> configs;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::optional<int> threads;
  std::string out = "toruslab_out";
};

toruslab::Config resolve(const std::string& path, const Options& o) {
  auto cfg = path.empty() ? toruslab::Config::defaults() : toruslab::Config::load(path);
  for (const auto& ov : o.overrides) cfg.apply_override(ov);
  if (o.seed) cfg.set("seed", *o.seed);
  if (o.threads) cfg.set("threads", std::int64_t{*o.threads});
  return cfg;
}

/// One directory per scenario: --out itself for a single config, otherwise
/// --out/<config stem>, suffixed on collisions.
std::vector<std::filesystem::path> output_dirs(const Options& o) {
  if (o.configs.size() == 1) return {o.out};
  std::vector<std::filesystem::path> dirs;
  std::set<std::string> used;
  for (const auto& c : o.configs) {
    std::string name = std::filesystem::path(c).stem().string();
    for (int k = 2; used.count(name); ++k) name = std::filesystem::path(c).stem().string() + "_" + std::to_string(k);
    used.insert(name);
    dirs.push_back(std::filesystem::path(o.out) / name);
  }
  return dirs;
}

int run_batch(const Options& o, toruslab::RunMode mode) {
  if (o.configs.empty()) {
    std::cerr << "error: --config is required\n";
    return exit_config;
  }
  // Parse everything first so a bad file fails before any work starts.
  std::vector<toruslab::Scenario> scenarios;
  for (const auto& c : o.configs) {
    try {
      scenarios.push_back(toruslab::Scenario::from_config(resolve(c, o)));
    } catch (const toruslab::Error& e) {
      std::cerr << c << ": " << e.what() << '\n';
      return exit_config;
    }
  }
  const auto dirs = output_dirs(o);
  std::vector<int> codes(scenarios.size(), exit_ok);
  std::vector<std::string> messages(scenarios.size());
  // Batches run one scenario per worker, each single-threaded.
  const unsigned pool = scenarios.size() > 1 ? scenarios.front().threads : 1;
  if (scenarios.size() > 1) {
    for (auto& s : scenarios) s.threads = 1;
  }
  toruslab::parallel_for(scenarios.size(), pool, [&](std::size_t i) {
    try {
      const auto manifest = toruslab::run_scenario(scenarios[i], mode, dirs[i]);
      messages[i] = dirs[i].string() + ": " + manifest["report"].dump();
    } catch (const toruslab::NumericalError& e) {
      codes[i] = exit_numerical;
      messages[i] = o.configs[i] + ": numerical failure: " + e.what();
    } catch (const toruslab::Error& e) {
      codes[i] = exit_config;
      messages[i] = o.configs[i] + ": " + e.what();
    } catch (const std::exception& e) {
      codes[i] = exit_numerical;
      messages[i] = o.configs[i] + ": " + e.what();
    }
  });
  int code = exit_ok;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    (codes[i] == exit_ok ? std::cout : std::cerr) << messages[i] << '\n';
    code = std::max(code, codes[i]);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observability, control and damping experiments for Schroedinger equations on tori"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool many) {
    if (many) {
      sub->add_option("--config", o.configs, "scenario TOML file (repeatable)");
    } else {
      sub->add_option("--config", o.configs, "scenario TOML file")->expected(0, 1);
    }
    sub->add_option("--override", o.overrides, "dotted.key=value, applied after the file (repeatable)");
    sub->add_option("--seed", o.seed, "RNG seed, replaces the file's seed");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "run scenarios, one output directory each");
  add_common(run, true);
  run->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "run the sweep or refinement study of each scenario");
  add_common(sweep, true);
  sweep->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* explain = app.add_subcommand("explain", "print every key with its default, or the resolved config");
  add_common(explain, false);

  auto* verify = app.add_subcommand("verify", "re-run the acceptance criteria");
  std::string verify_out;
  int verify_threads = 1;
  verify->add_option("--out", verify_out, "write criterion CSVs and a summary manifest here");
  verify->add_option("--threads", verify_threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  if (*run) return run_batch(o, toruslab::RunMode::run);
  if (*sweep) return run_batch(o, toruslab::RunMode::sweep);
  if (*explain) {
    try {
      if (o.configs.empty() && o.overrides.empty() && !o.seed && !o.threads) {
        std::cout << toruslab::explain_defaults();
      } else {
        const auto cfg = resolve(o.configs.empty() ? std::string() : o.configs.front(), o);
        toruslab::Scenario::from_config(cfg);
        std::cout << cfg.serialize();
      }
    } catch (const toruslab::Error& e) {
      std::cerr << e.what() << '\n';
      return exit_config;
    }
    return exit_ok;
  }
  toruslab::acceptance::Options opts;
  opts.threads = static_cast<unsigned>(verify_threads);
  if (!verify_out.empty()) opts.out = verify_out;
  const auto results = toruslab::acceptance::run_all(opts, std::cout);
  for (const auto& r : results) {
    if (!r.pass) return exit_numerical;
  }
  return exit_ok;
}

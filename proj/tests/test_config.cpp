#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "toruslab/config.hpp"

namespace toruslab {
namespace {

TEST(Config, DefaultsCoverTheSchemaExceptSeed) {
  const auto c = Config::defaults();
  for (const auto& key : config_schema()) EXPECT_EQ(c.has(key.path), key.fallback.has_value()) << key.path;
  EXPECT_FALSE(c.has("seed"));
  EXPECT_EQ(c.get<std::string>("kind"), "observability");
  EXPECT_EQ(c.get<double>("geometry.period_x"), 2 * std::numbers::pi);
  EXPECT_THROW(c.get<std::int64_t>("seed"), ConfigError);
  EXPECT_THROW(c.get<double>("no.such"), ConfigError);
}

TEST(Config, ParsesTablesAndDottedKeys) {
  const auto c = Config::parse(R"(
kind = "control"
seed = 42
geometry.nx = 32
[weight]
kind = "disk"
radius = 2          # integers are accepted for numbers
[observability]
cuts = [1, 2.5, 10]
)");
  EXPECT_EQ(c.get<std::string>("kind"), "control");
  EXPECT_EQ(c.get<std::int64_t>("seed"), 42);
  EXPECT_EQ(c.get<int>("geometry.nx"), 32);
  EXPECT_EQ(c.get<int>("geometry.ny"), 64);
  EXPECT_EQ(c.get<double>("weight.radius"), 2.0);
  EXPECT_EQ(c.get<std::vector<double>>("observability.cuts"), (std::vector<double>{1, 2.5, 10}));
}

TEST(Config, RoundTripIsIdentity) {
  auto c = Config::parse("seed = 7\n[time]\nhorizon = 0.1\n[weight]\nbeta = 0.4999999999999999\n");
  c.apply_override("observability.cuts=[0.1, 1e-3, 3.0]");
  c.apply_override("control.form=a_times_g");
  c.apply_override("ingham.certificate=false");
  const std::string text = c.serialize();
  const auto back = Config::parse(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.serialize(), text);
  EXPECT_EQ(Config::parse(Config::defaults().serialize()), Config::defaults());
}

TEST(Config, ExplainIsValidTomlForTheDefaults) {
  EXPECT_EQ(Config::parse(explain_defaults()), Config::defaults());
}

TEST(Config, ParseErrorsCarryLineAndColumn) {
  try {
    Config::parse("kind = \"damp\"\n[time]\nhorizon = = 3\n");
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 0);
  }
  try {
    Config::parse("[time]\nhorizon = 1.0\nhorizn = 2.0\n");
    FAIL() << "expected an unknown key";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 1);
    EXPECT_NE(std::string(e.what()).find("time.horizn"), std::string::npos);
  }
  try {
    Config::parse("[geometry]\nnx = 3.5\n");
    FAIL() << "expected a type error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("integer"), std::string::npos);
  }
  EXPECT_THROW(Config::parse("[nonsense]\nx = 1\n"), ConfigError);
  EXPECT_THROW(Config::parse("observability.cuts = [1, \"a\"]\n"), ConfigError);
}

TEST(Config, Overrides) {
  auto c = Config::defaults();
  c.apply_override("time.horizon = 2.5");
  c.apply_override("weight.kind=strip");
  c.apply_override("weight.kind=\"disk\"");
  c.apply_override("seed=9");
  c.apply_override("geometry.period_x=3");
  EXPECT_EQ(c.get<double>("time.horizon"), 2.5);
  EXPECT_EQ(c.get<std::string>("weight.kind"), "disk");
  EXPECT_EQ(c.get<std::int64_t>("seed"), 9);
  EXPECT_EQ(c.get<double>("geometry.period_x"), 3.0);
  EXPECT_THROW(c.apply_override("time.horizon"), ConfigError);
  EXPECT_THROW(c.apply_override("time.horizn=1"), ConfigError);
  EXPECT_THROW(c.apply_override("geometry.nx=abc"), ConfigError);
  EXPECT_THROW(c.apply_override("geometry.nx=1.5"), ConfigError);
}

TEST(Config, PathsResolveAgainstTheFileDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "toruslab_config_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "s.toml") << "[weight]\nkind = \"file\"\npath = \"w.tcf1\"\n";
  const auto c = Config::load(dir / "s.toml");
  EXPECT_EQ(c.resolve_path("weight.path"), dir / "w.tcf1");
  EXPECT_THROW(Config::load(dir / "missing.toml"), ConfigError);
}

}  // namespace
}  // namespace toruslab

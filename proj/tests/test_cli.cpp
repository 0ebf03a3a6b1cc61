#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

const fs::path dir = fs::temp_directory_path() / "toruslab_cli_test";

int toruslab(const std::string& args) {
  const std::string cmd = std::string(TORUSLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string scenario(const std::string& name, const std::string& body) {
  fs::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << body;
  return p.string();
}

TEST(Cli, GoodConfigExitsZero) {
  const auto cfg = scenario("ok.toml", "kind = \"observability\"\n[geometry]\nnx = 16\nny = 16\n");
  EXPECT_EQ(toruslab("run --config " + cfg + " --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "manifest.json"));
  EXPECT_EQ(toruslab("explain"), 0);
  EXPECT_EQ(toruslab("explain --config " + cfg + " --override time.horizon=2"), 0);
}

TEST(Cli, BatchWritesOneDirectoryPerScenario) {
  const auto a = scenario("a.toml", "[geometry]\nnx = 16\nny = 16\n");
  const auto b = scenario("b.toml", "kind = \"density\"\nseed = 3\n[geometry]\nnx = 16\nny = 16\n");
  fs::remove_all(dir / "batch");
  EXPECT_EQ(toruslab("run --config " + a + " --config " + b + " --config " + a + " --threads 2 --out " +
                     (dir / "batch").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "batch" / "a" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "batch" / "a_2" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "batch" / "b" / "manifest.json"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(toruslab("run --config " + scenario("typo.toml", "[time]\nhorizn = 1\n")), 2);
  EXPECT_EQ(toruslab("run --config " + scenario("syntax.toml", "[time\nhorizon = 1\n")), 2);
  EXPECT_EQ(toruslab("run --config " + (dir / "missing.toml").string()), 2);
  EXPECT_EQ(toruslab("run --config " + scenario("bad.toml", "[geometry]\nnx = 7\n")), 2);
  EXPECT_EQ(toruslab("run --config " + scenario("noseed.toml", "kind = \"zygmund\"\n") + " --out " +
                     (dir / "noseed").string()),
            2);
  EXPECT_EQ(toruslab("run"), 2);
  EXPECT_EQ(toruslab("frobnicate"), 2);
  EXPECT_EQ(toruslab("explain --override no.such=1"), 2);
}

TEST(Cli, StalledSolverExitsThree) {
  const auto cfg = scenario("stall.toml",
                            "kind = \"control\"\nseed = 1\n"
                            "[geometry]\nnx = 16\nny = 16\n"
                            "[weight]\nkind = \"strip\"\nx0 = 0.0\nx1 = 0.5\n"
                            "[time]\nhorizon = 0.01\n"
                            "[state]\nband = 10\n"
                            "[control]\nlambda_max = 10\nmax_iterations = 2\ntolerance = 1e-14\n");
  EXPECT_EQ(toruslab("run --config " + cfg + " --out " + (dir / "stall").string()), 3);
}

}  // namespace

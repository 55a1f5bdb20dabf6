#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "degen/commands.hpp"
#include "degen/scenario.hpp"

using namespace degen;
namespace fs = std::filesystem;

namespace {

const fs::path kExamples = DEGEN_EXAMPLES_DIR;

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("degen_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DEGEN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int parse_kind(const std::string& text, std::string* message = nullptr) {
  try {
    parse_scenario(text, "test.json");
  } catch (const Error& e) {
    if (message) *message = e.what();
    return int(exit_code_for(e.kind()));
  }
  return 0;
}

}  // namespace

TEST(Parse, DefaultsFromEmptyObject) {
  const auto s = parse_scenario("{}");
  EXPECT_EQ(s.grid.dim, 2);
  EXPECT_EQ(s.p, 2);
  EXPECT_EQ(s.form.preset, "identity");
}

TEST(Parse, InfStringAccepted) {
  const auto s = parse_scenario(R"({"params": {"sstar": "inf"}})");
  EXPECT_TRUE(std::isinf(s.params.sstar));
}

TEST(Parse, UnknownKeyReportsLine) {
  std::string msg;
  EXPECT_EQ(parse_kind("{\n  \"grid\": {\"dim\": 2},\n  \"bogus\": 1\n}", &msg), kExitConfig);
  EXPECT_NE(msg.find("test.json:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;
}

TEST(Parse, PsiOutsideRangeIsConfigError) {
  EXPECT_EQ(parse_kind(R"({"exponents": {"p": 2, "sigma": 3, "psi": 2.9}})"), kExitConfig);
}

TEST(Parse, MalformedJson) {
  std::string msg;
  EXPECT_EQ(parse_kind("{\n\"grid\": {,}\n}", &msg), kExitConfig);
  EXPECT_NE(msg.find("test.json:2"), std::string::npos) << msg;
}

TEST(Parse, BadEnumChoice) {
  EXPECT_EQ(parse_kind(R"({"form": {"preset": "hyperbolic"}})"), kExitConfig);
}

TEST(Parse, UnresolvedBallRejected) {
  EXPECT_EQ(parse_kind(R"({"grid": {"h": 0.25}, "balls": [{"center": [0, 0], "radius": 0.5}]})"), kExitConfig);
}

TEST(Parse, RefinementOverride) {
  auto s = parse_scenario(R"({"grid": {"h": 0.0625}})");
  override_refinements(s, 3);
  ASSERT_EQ(s.refinements.size(), 3u);
  EXPECT_EQ(s.refinements[2], 0.015625);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::ConfigError), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorKind::RangeViolation), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorKind::SingularSystem), kExitNumeric);
  EXPECT_EQ(exit_code_for(ErrorKind::NonConvergence), kExitNumeric);
}

TEST(Binary, NoSubcommandIsUsageError) {
  const auto d = scratch("usage");
  EXPECT_EQ(run("", d / "log"), kExitConfig);
}

TEST(Binary, MissingConfigFile) {
  const auto d = scratch("missing");
  EXPECT_EQ(run("verify-bound --config " + (d / "nope.json").string() + " --out " + d.string(), d / "log"),
            kExitConfig);
}

TEST(Binary, InvalidPsiExitsTwo) {
  const auto d = scratch("psi");
  const auto cfg = write_config(d, R"({"exponents": {"p": 2, "sigma": 3, "psi": 3.5}})");
  EXPECT_EQ(run("verify-bound --config " + cfg.string() + " --out " + (d / "out").string(), d / "log"), kExitConfig);
  EXPECT_NE(slurp(d / "log").find("psi"), std::string::npos);
}

TEST(Binary, VerifyBoundPassesAndIsDeterministic) {
  const auto d = scratch("verify");
  const std::string base = "verify-bound --config " + (kExamples / "euclidean_harmonic.json").string() + " --refine 2";
  ASSERT_EQ(run(base + " --out " + (d / "a").string(), d / "log_a"), kExitPass) << slurp(d / "log_a");
  ASSERT_EQ(run(base + " --out " + (d / "b").string(), d / "log_b"), kExitPass);
  const std::string a = slurp(d / "a" / "report.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(d / "b" / "report.json"));
  EXPECT_NE(a.find("\"ref\""), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "a" / "steps_b0_r0.csv"));
}

TEST(Binary, CheckStructureOnOperator) {
  const auto d = scratch("structure");
  EXPECT_EQ(run("check-structure --config " + (kExamples / "plaplacian_solve.json").string() + " --refine 1 --out " +
                    (d / "o").string(),
                d / "log"),
            kExitPass)
      << slurp(d / "log");
  const std::string rep = slurp(d / "o" / "report.json");
  EXPECT_NE(rep.find("\"solution_trace\""), std::string::npos);
  EXPECT_NE(rep.find("\"round_trip\""), std::string::npos);
}

TEST(Binary, GeometryOnEuclidean) {
  const auto d = scratch("geometry");
  EXPECT_EQ(run("geometry --config " + (kExamples / "euclidean_harmonic.json").string() + " --refine 1 --out " +
                    (d / "o").string(),
                d / "log"),
            kExitPass)
      << slurp(d / "log");
}

TEST(Binary, SolveWritesFields) {
  const auto d = scratch("solve");
  ASSERT_EQ(run("solve --config " + (kExamples / "plaplacian_solve.json").string() + " --refine 1 --out " +
                    (d / "o").string(),
                d / "log"),
            kExitPass)
      << slurp(d / "log");
  EXPECT_TRUE(fs::exists(d / "o" / "u_r0.bin"));
  EXPECT_TRUE(fs::exists(d / "o" / "u_r0.json"));
  EXPECT_TRUE(fs::exists(d / "o" / "u_r0_grad.bin"));
}

TEST(Binary, GrushinPresetPasses) {
  const auto d = scratch("grushin");
  EXPECT_EQ(run("verify-bound --config " + (kExamples / "grushin.json").string() + " --out " + (d / "o").string(),
                d / "log"),
            kExitPass)
      << slurp(d / "log");
}

TEST(Binary, TraceIteration) {
  const auto d = scratch("trace");
  EXPECT_EQ(run("trace-iteration --config " + (kExamples / "euclidean_harmonic.json").string() + " --out " +
                    (d / "o").string(),
                d / "log"),
            kExitPass)
      << slurp(d / "log");
}

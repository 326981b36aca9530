#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "pbound/cli_app.h"

namespace pbound {
namespace {

using nlohmann::json;

const char* kMM1 = R"({"model": "mg1_wcl", "lambda": 0.5,
  "service": {"family": "exponential", "rate": 1.0}, "params": {"theta": 0.4}})";

const char* kMap = R"({"model": "map_gi1", "C": [[-3, 1], [0.5, -1]], "D": [[2, 0], [0, 0.5]],
  "service": {"family": "exponential", "rate": 2.0}, "grid": "0:2:1"})";

std::string with_capacity(double capacity) {
  json j = json::parse(kMM1);
  j["capacity"] = capacity;
  return j.dump();
}

double value_of(const json& j) { return j.at("value").get<double>(); }

TEST(Cli, BoundReportsPrefactorFour) {
  const CliResult r = run_command("bound", kMM1, {});
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const json rep = json::parse(r.report);
  EXPECT_NEAR(value_of(rep["bound"]["prefactor"]), 4.0, 1e-12);
  EXPECT_EQ(rep["bound"]["kind"], "atom");
  for (const json& pt : rep["curve"]) {
    const double x = pt["x"].get<double>();
    EXPECT_NEAR(pt["bound"].get<double>(), 4.0 * (std::exp(0.4 * x) - 1.0), 1e-11);
  }
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "x,bound,estimate,std_error");
}

TEST(Cli, MapReportCarriesWitnessAndPhases) {
  const CliResult r = run_command("bound", kMap, {});
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const json rep = json::parse(r.report);
  EXPECT_TRUE(rep.contains("witness"));
  EXPECT_TRUE(rep.contains("special_case"));
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "x,phase,bound,estimate,std_error");
  EXPECT_EQ(rep["curve"].size(), 6u);
}

TEST(Cli, InputErrorsExitTwo) {
  const std::vector<std::string> bad = {
      "not json",
      R"({"model": "mg1_wcl", "lambda": 0.5, "service": {"family": "exponential", "rate": 1}, "colour": 1})",
      R"({"model": "map_gi1", "C": [[-3, 1], [0.5, -1]], "D": [[2, 0], [0, 0.4]],
          "service": {"family": "exponential", "rate": 2.0}})",
      R"({"model": "mg1_wcl", "lambda": 0.5, "service": {"family": "gamma", "rate": 1}})",
      R"({"model": "mg1_wcl", "lambda": 0.5, "service": {"family": "exponential", "rate": 1},
          "grid": "0:4"})",
  };
  for (const std::string& text : bad) {
    const CliResult r = run_command("bound", text, {});
    EXPECT_EQ(r.exit_code, kExitInput) << text;
    EXPECT_FALSE(r.message.empty());
  }
}

TEST(Cli, VerifyNeedsSeed) {
  EXPECT_EQ(run_command("verify", kMM1, {}).exit_code, kExitInput);
}

TEST(Cli, InfeasibleThetaExitsThree) {
  json j = json::parse(kMM1);
  j["params"]["theta"] = 0.6;
  const CliResult r = run_command("bound", j.dump(), {});
  EXPECT_EQ(r.exit_code, kExitInfeasible);
  EXPECT_NE(r.message.find("InfeasibleTheta"), std::string::npos);
}

TEST(Cli, UnstableModelExitsThree) {
  json j = json::parse(kMM1);
  j["lambda"] = 1.5;
  EXPECT_EQ(run_command("bound", j.dump(), {}).exit_code, kExitInfeasible);
}

TEST(Cli, InfiniteCapacityDistanceIsZero) {
  json j = json::parse(kMM1);
  j["capacity"] = "inf";
  const CliResult r = run_command("wcl-distance", j.dump(), {});
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  EXPECT_EQ(value_of(json::parse(r.report)["distance"]["value"]), 0.0);
}

TEST(Cli, DistanceLadderAndTolerance) {
  double prev = INFINITY;
  for (double capacity : {5.0, 10.0, 20.0}) {
    CliOptions o;
    o.tol = 1e-3;
    const CliResult r = run_command("wcl-distance", with_capacity(capacity), o);
    ASSERT_EQ(r.exit_code, kExitOk) << r.message;
    const json d = json::parse(r.report)["distance"];
    EXPECT_LT(value_of(d["value"]), prev);
    EXPECT_LE(value_of(d["truncation_error"]), 1e-3);
    prev = value_of(d["value"]);
  }
}

TEST(Cli, ModerateAutoSearchIsSufficient) {
  const char* text = R"({"model": "mg1_wcl", "lambda": 0.5,
    "service": {"family": "weibull_tail", "shape": 0.5, "scale": 0.5}, "regime": "moderate",
    "envelope": {"constant": 1, "gamma": 1.4142135623730951, "beta": 0.5}})";
  EXPECT_EQ(run_command("bound", text, {}).exit_code, kExitInput);  // needs params or --auto
  CliOptions o;
  o.auto_search = true;
  const CliResult r = run_command("bound", text, o);
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const json p = json::parse(r.report)["certificate"]["parameters"];
  EXPECT_LE(value_of(p["sufficient_integral"]), value_of(p["rho_tilde"]));
  EXPECT_TRUE(json::parse(r.report)["certificate"]["generator_check"]["passed"].get<bool>());
}

TEST(Cli, EchoedInputReproducesReport) {
  CliOptions o;
  o.grid = "0:3:0.5";
  o.tol = 1e-2;
  const CliResult first = run_command("wcl-distance", with_capacity(8.0), o);
  ASSERT_EQ(first.exit_code, kExitOk) << first.message;
  const std::string echoed = nlohmann::ordered_json::parse(first.report)["input"].dump();
  const CliResult second = run_command("wcl-distance", echoed, {});
  EXPECT_EQ(first.report, second.report);
  EXPECT_EQ(first.csv, second.csv);
}

TEST(Cli, VerifyIsReproducible) {
  CliOptions o;
  o.seed = 17;
  o.reps = 500;
  const CliResult a = run_command("verify", kMap, o);
  const CliResult b = run_command("verify", kMap, o);
  ASSERT_EQ(a.exit_code, kExitOk) << a.message;
  EXPECT_EQ(a.report, b.report);
  const json rep = json::parse(a.report);
  EXPECT_TRUE(rep.contains("checks"));
  o.seed = 18;
  EXPECT_NE(run_command("verify", kMap, o).report, a.report);
}

TEST(Cli, FrontEndWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "pbound_cli_test";
  std::filesystem::create_directories(dir);
  const std::string model = (dir / "m.json").string();
  const std::string out = (dir / "r.json").string();
  const std::string csv = (dir / "c.csv").string();
  std::ofstream(model) << kMM1;
  std::vector<std::string> args = {"pbound", "bound", "--model", model, "--out", out,
                                   "--csv", csv, "--grid", "0:1:0.5"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream so, se;
  EXPECT_EQ(run_cli(static_cast<int>(argv.size()), argv.data(), so, se), kExitOk) << se.str();
  std::ifstream rin(out), cin(csv);
  const json rep = json::parse(rin);
  EXPECT_EQ(rep["curve"].size(), 3u);
  std::string header;
  std::getline(cin, header);
  EXPECT_EQ(header, "x,bound,estimate,std_error");

  std::vector<std::string> missing = {"pbound", "bound", "--model", (dir / "nope.json").string()};
  std::vector<char*> argv2;
  for (auto& a : missing) argv2.push_back(a.data());
  EXPECT_EQ(run_cli(static_cast<int>(argv2.size()), argv2.data(), so, se), kExitInput);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace pbound

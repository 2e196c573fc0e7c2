#include "submc/experiment.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace submc;
namespace fs = std::filesystem;

namespace
{

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("submc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args)
{
  const std::string cmd = std::string(SUBMC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const Json& j)
{
  std::ofstream(p) << j.dump(2);
}

ErrorCode validation_code(const Json& spec, Json (*resolve)(const Json&))
{
  try
  {
    resolve(spec);
  }
  catch(const Error& e)
  {
    return e.code();
  }
  return ErrorCode::io;
}

} // namespace

TEST(Overrides, NestedAndTyped)
{
  Json spec = Json::parse(R"({"engine": {"seed": 1}, "runs": [{"a": 1}, {"a": 2}]})");
  apply_override(spec, "engine.seed=3");
  apply_override(spec, "estimator.kind=de-srs");
  apply_override(spec, "runs.1.a=[1,2]");
  apply_override(spec, "engine.flag=true");
  EXPECT_EQ(spec["engine"]["seed"], 3);
  EXPECT_EQ(spec["estimator"]["kind"], "de-srs");
  EXPECT_EQ(spec["runs"][1]["a"], Json::parse("[1,2]"));
  EXPECT_EQ(spec["engine"]["flag"], true);
  EXPECT_THROW(apply_override(spec, "noequals"), Error);
  EXPECT_THROW(apply_override(spec, "runs.7.a=1"), Error);
  EXPECT_THROW(apply_override(spec, "engine.seed.x=1"), Error);
}

TEST(Resolve, FillsEveryDefault)
{
  const Json r = resolve_run_spec(Json::parse(R"({"model": {"kind": "ar1"}})"));
  EXPECT_EQ(r["model"]["generator"]["n"], 10000);
  EXPECT_EQ(r["model"]["parameterization"], "standard");
  EXPECT_EQ(r["model"]["nu"], 5.0);
  EXPECT_EQ(r["estimator"]["kind"], "exact");
  EXPECT_EQ(r["estimator"]["variates"], "taylor");
  EXPECT_EQ(r["estimator"]["omega"], 1.0);
  EXPECT_EQ(r["engine"]["iterations"], 10000);
  EXPECT_EQ(r["engine"]["target_acceptance"], 0.35);
  EXPECT_EQ(r["engine"]["proposal"], "rwm");
  EXPECT_EQ(r["output"]["directory"], "submc-run");
  // Resolution is idempotent.
  EXPECT_EQ(resolve_run_spec(r), r);

  const Json pm = resolve_run_spec(Json::parse(R"({"model": {"kind": "weibull"}, "estimator": {"kind": "hh-pps"}})"));
  EXPECT_EQ(pm["estimator"]["variates"], "numerical");
  EXPECT_EQ(pm["engine"]["target_acceptance"], 0.15);
}

TEST(Resolve, RejectsBadSpecs)
{
  auto code = [](const char* text) { return validation_code(Json::parse(text), resolve_run_spec); };
  EXPECT_EQ(code(R"({"model": {"kind": "logistic"}, "engine": {"iterationz": 5}})"), ErrorCode::validation);
  EXPECT_EQ(code(R"({"model": {"kind": "logistic", "generator": {"n": 0}}})"), ErrorCode::validation);
  EXPECT_EQ(code(R"({"model": {"kind": "poisson"}})"), ErrorCode::validation);
  EXPECT_EQ(code(R"({"model": {"kind": "logistic"}, "estimator": {"omega": 2}})"), ErrorCode::validation);
  EXPECT_EQ(code(R"({"model": {"kind": "logistic"}, "estimator": {"kind": "hh-pps"}, "engine": {"proposal": "imh"}})"),
            ErrorCode::validation);
  try
  {
    resolve_run_spec(Json::parse(R"({"model": {"kind": "logistic"}, "engine": {"iterationz": 5}})"));
  }
  catch(const Error& e)
  {
    EXPECT_NE(std::string(e.what()).find("engine.iterationz"), std::string::npos) << e.what();
  }
  const Json empty_grid = Json::parse(R"({"model": {"kind": "logistic"}, "scaling": {"m_grid": []}})");
  EXPECT_EQ(validation_code(empty_grid, resolve_scaling_spec), ErrorCode::validation);
  const Json few = Json::parse(R"({"model": {"kind": "logistic"}, "scaling": {"replications": 50}})");
  EXPECT_EQ(validation_code(few, resolve_scaling_spec), ErrorCode::validation);
}

TEST(Generate, DeterministicDatasets)
{
  const auto dir = scratch("generate");
  Json spec = Json::parse(R"({"model": {"kind": "ar1", "generator": {"n": 300, "seed": 5}}})");
  spec["output"] = {{"directory", (dir / "a").string()}};
  ASSERT_EQ(cmd_generate(spec), 0);
  spec["output"]["directory"] = (dir / "b").string();
  ASSERT_EQ(cmd_generate(spec), 0);
  EXPECT_EQ(slurp(dir / "a" / "data.csv"), slurp(dir / "b" / "data.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "provenance.json"));
  spec["model"]["generator"]["seed"] = 6;
  spec["output"]["directory"] = (dir / "c").string();
  ASSERT_EQ(cmd_generate(spec), 0);
  EXPECT_NE(slurp(dir / "a" / "data.csv"), slurp(dir / "c" / "data.csv"));
}

TEST(Run, ExactRunHasNoRelativeMeasures)
{
  const auto dir = scratch("exact");
  Json spec = Json::parse(R"({"model": {"kind": "normal", "generator": {"n": 200}},
                              "engine": {"iterations": 1000}})");
  spec["output"] = {{"directory", dir.string()}};
  ASSERT_EQ(cmd_run(spec), 0);
  const Json report = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["estimator"], "exact");
  EXPECT_EQ(report["mean_sampling_fraction"], 1.0);
  EXPECT_FALSE(report["efficiency"].contains("relative_effective_draws"));
  EXPECT_EQ(report["iterations_completed"], 1000);
  EXPECT_TRUE(report["error"].is_null());
}

TEST(Run, ManifestReproducesTheTrace)
{
  const auto dir = scratch("manifest");
  Json spec = Json::parse(R"({
    "model": {"kind": "logistic", "generator": {"n": 500, "theta": [-0.3, 0.5, -0.4]}},
    "estimator": {"kind": "de-srs", "variates": "taylor", "epsilon": 1.0, "fraction": 0.05},
    "engine": {"iterations": 1500, "seed": 4}
  })");
  spec["output"] = {{"directory", (dir / "first").string()}};
  ASSERT_EQ(cmd_run(spec), 0);

  const Json report = Json::parse(slurp(dir / "first" / "report.json"));
  EXPECT_NEAR(report["mean_sampling_fraction"].get<double>(), 0.05, 0.01);
  EXPECT_EQ(report["current_recomputations"], 0);

  Json again = load_spec(dir / "first" / "manifest.json");
  apply_override(again, "output.directory=\"" + (dir / "second").string() + "\"");
  ASSERT_EQ(cmd_run(again), 0);
  EXPECT_EQ(slurp(dir / "first" / "trace.csv"), slurp(dir / "second" / "trace.csv"));

  // Through the binary, from the manifest file.
  EXPECT_EQ(run_cli("run " + (dir / "first" / "manifest.json").string() + " --set output.directory=" +
                    (dir / "third").string()),
            0);
  EXPECT_EQ(slurp(dir / "first" / "trace.csv"), slurp(dir / "third" / "trace.csv"));
  const std::string header = slurp(dir / "first" / "trace.csv").substr(0, 60);
  EXPECT_EQ(header.rfind("iteration,theta0,theta1,theta2,accepted,refreshed,m,sigma2", 0), 0u) << header;
}

TEST(Run, CorruptedDatasetExitsWithTwo)
{
  const auto dir = scratch("corrupt");
  std::ofstream(dir / "bad.csv") << "y,x0,x1\n1,1,0.2\n0,1,oops\n";
  Json spec;
  spec["model"] = {{"kind", "logistic"}, {"dataset", (dir / "bad.csv").string()}};
  spec["output"] = {{"directory", (dir / "out").string()}};
  EXPECT_EQ(cmd_run(spec), 2);
  const Json err = Json::parse(slurp(dir / "out" / "error.json"));
  EXPECT_EQ(err["error"]["code"], "io");
  EXPECT_NE(err["error"]["message"].get<std::string>().find("bad.csv:3"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
  const auto dir = scratch("codes");
  write(dir / "bad.json", Json::parse(R"({"model": {"kind": "logistic"}, "estimator": {"omega": 2}})"));
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string()), 2);
  write(dir / "ok.json", Json::parse(R"({"model": {"kind": "logistic"}})"));
  EXPECT_EQ(run_cli("run " + (dir / "ok.json").string() + " --resolve"), 0);
  EXPECT_EQ(run_cli("run " + (dir / "ok.json").string() + " --set engine.iterations=0 --resolve"), 2);
  EXPECT_NE(run_cli("run " + (dir / "missing.json").string()), 0);
  std::ofstream(dir / "broken.json") << "{not json";
  EXPECT_EQ(run_cli("run " + (dir / "broken.json").string()), 2);
}

TEST(Compare, BaselineHasUnitRelativeMeasures)
{
  const auto dir = scratch("compare");
  Json spec = Json::parse(R"({
    "base": {"model": {"kind": "normal", "generator": {"n": 400}},
             "estimator": {"variates": "taylor", "epsilon": 0.2, "m": 20},
             "engine": {"iterations": 1500}},
    "runs": [{"label": "exact"}, {"label": "pm", "estimator": {"kind": "de-srs"}}]
  })");
  spec["output"] = {{"directory", dir.string()}};
  ASSERT_EQ(cmd_compare(spec), 0);
  const Json report = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["baseline"], "exact");
  for(double v : report["runs"][0]["efficiency"]["relative_effective_draws"])
    EXPECT_DOUBLE_EQ(v, 1.0);
  for(double v : report["runs"][0]["efficiency"]["relative_inefficiency"])
    EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_TRUE(report["runs"][1]["efficiency"].contains("relative_effective_draws"));
  for(const char* f : {"trace_exact.csv", "trace_pm.csv", "efficiency.csv", "fractions.csv",
                       "comparison.csv", "kde.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Compare, RunsMustShareTheDataset)
{
  Json spec = Json::parse(R"({
    "base": {"model": {"kind": "normal"}},
    "runs": [{}, {"model": {"generator": {"seed": 9}}}]
  })");
  EXPECT_EQ(validation_code(spec, resolve_compare_spec), ErrorCode::validation);
  Json one = Json::parse(R"({"base": {"model": {"kind": "normal"}}, "runs": [{}]})");
  EXPECT_EQ(validation_code(one, resolve_compare_spec), ErrorCode::validation);
}

TEST(Scaling, WritesTableAndSlope)
{
  const auto dir = scratch("scaling");
  Json spec = Json::parse(R"({
    "model": {"kind": "logistic", "generator": {"n": 400, "theta": [-0.3, 0.5, -0.4]}},
    "estimator": {"variates": "taylor", "epsilon": 1.0},
    "scaling": {"m_grid": [10, 40, 160], "replications": 500}
  })");
  spec["output"] = {{"directory", dir.string()}};
  ASSERT_EQ(cmd_scaling_study(spec), 0);
  const Json report = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["thetas"].size(), 3u);
  EXPECT_LT(report["slope"].get<double>(), 0.0);
  std::istringstream csv(slurp(dir / "scaling.csv"));
  std::string line;
  int lines = 0;
  while(std::getline(csv, line))
    ++lines;
  EXPECT_EQ(lines, 1 + 9);
}

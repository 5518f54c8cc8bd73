#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sgopt_cli/commands.hpp"
#include "sgopt_cli/config.hpp"

namespace fs = std::filesystem;

namespace sgopt::cli {
namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("sgopt-test-" + tag + "-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ExperimentSpec parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string resolved_text(const ExperimentSpec& spec) {
  std::ostringstream out;
  write_resolved_config(out, spec, build_instance(spec));
  return out.str();
}

constexpr const char* kMinimal = R"([topology]
graph = complete:10
[problem]
kind = quadratic
[run]
method = zeroth
seed = 3
)";

constexpr const char* kSmallRun = R"([topology]
graph = complete:4
[noise]
szo_sigma = 0.1
[problem]
kind = quadratic
dim = 2
mu = 1
L = 2
[run]
method = zeroth
horizon = 1500
)";

TEST(ParseConfig, MinimalConfigGetsDocumentedDefaults) {
  const ExperimentSpec spec = parse(kMinimal);
  EXPECT_EQ(spec.tau, 0.5);
  EXPECT_DOUBLE_EQ(spec.delta, 1.0 / 6.0);
  EXPECT_EQ(spec.direction, DirectionKind::gaussian);
  EXPECT_EQ(spec.seed, 3u);
  EXPECT_EQ(resolve_seeds(spec), std::vector<std::uint64_t>{3});

  const Instance inst = build_instance(spec);
  const RunConfig zo = make_run_config(spec, inst, Method::zeroth);
  EXPECT_EQ(zo.protocol.epsilon, 0.25);
  EXPECT_DOUBLE_EQ(zo.steps.alpha0, 1.05);
  EXPECT_DOUBLE_EQ(zo.smoothing.c0, 1.0 / 35.0);
  EXPECT_DOUBLE_EQ(zo.protocol.rho0, 1.0 / std::sqrt(10.0));
  EXPECT_EQ(zo.steps.offset, 0);
  const RunConfig fo = make_run_config(spec, inst, Method::first);
  EXPECT_DOUBLE_EQ(fo.steps.alpha0, 2.1);
}

TEST(ParseConfig, AutoOffsetResolvesPerMethod) {
  const ExperimentSpec spec = parse(std::string(kMinimal) + "[steps]\noffset = auto\n");
  const Instance inst = build_instance(spec);
  EXPECT_EQ(make_run_config(spec, inst, Method::zeroth).steps.offset, 367);
  EXPECT_EQ(make_run_config(spec, inst, Method::first).steps.offset, 10);
}

TEST(ParseConfig, TauOutsideRangeIsRejected) {
  try {
    parse(std::string(kMinimal) + "[protocol]\ntau = 0.7\n");
    FAIL();
  } catch (const SpecError& e) {
    EXPECT_NE(std::string(e.what()).find("0<tau<=1/2 and 0<epsilon<tau"), std::string::npos) << e.what();
  }
}

TEST(ParseConfig, UnknownKeysAndSectionsAreErrors) {
  EXPECT_THROW(parse(std::string(kMinimal) + "[protocol]\nzeta = 0.5\n"), SpecError);
  EXPECT_THROW(parse(std::string(kMinimal) + "[extras]\nx = 1\n"), SpecError);
  EXPECT_THROW(parse("graph = complete:4\n"), SpecError);
  EXPECT_THROW(parse(std::string(kMinimal) + "[noise]\nszo_sigma = -1\n"), SpecError);
  EXPECT_THROW(parse(std::string(kMinimal) + "[run]\nhorizon = ten\n"), SpecError);
}

TEST(ParseConfig, ValueSyntax) {
  const ExperimentSpec spec = parse(R"([protocol]
zeta0 = 1/2
[run]
method = first, zeroth-baseline
seeds = 2, 5-7
cadence = every:10
[checks]
mse_slope = none
window = 10,1000
)");
  EXPECT_EQ(spec.zeta0, 0.5);
  EXPECT_EQ(spec.methods, (std::vector<Method>{Method::first, Method::zeroth_baseline}));
  EXPECT_EQ(resolve_seeds(spec), (std::vector<std::uint64_t>{2, 5, 6, 7}));
  EXPECT_EQ(spec.cadence.every, 10);
  EXPECT_FALSE(spec.checks.mse_slope.has_value());
  ASSERT_TRUE(spec.checks.window.has_value());
  EXPECT_EQ(spec.checks.window->k_hi, 1000.0);
}

TEST(ParseConfig, ResolvedConfigIsAFixedPoint) {
  for (const char* extra : {"", "[steps]\noffset = auto\n", "[protocol]\nzeta0 = 0.4\nrho0 = 0.2\n[noise]\nszo_sigma = 0.3\n"}) {
    const ExperimentSpec spec = parse(std::string(kMinimal) + extra);
    const std::string first = resolved_text(spec);
    const std::string second = resolved_text(parse(first));
    EXPECT_EQ(first, second);
  }
}

TEST(ParseConfig, ErmInstanceFromSyntheticData) {
  const ExperimentSpec spec = parse(R"([problem]
kind = erm
data = synthetic-abalone
onehot = 0
split = 577
)");
  const Instance inst = build_instance(spec);
  EXPECT_EQ(inst.problem->dim(), 10);
  EXPECT_TRUE(inst.problem->has_test_set());
  for (Eigen::Index rows : inst.problem->node_rows()) EXPECT_EQ(rows, 360);
}

TEST(CmdRun, WritesArtifacts) {
  TempDir dir("artifacts");
  std::ostringstream log;
  const ExperimentSpec spec = parse(std::string(kSmallRun) + "ensemble = 3\n");
  ASSERT_EQ(cmd_run(spec, dir.path(), log), kExitOk) << log.str();
  for (const char* f : {"trace_seed1.csv", "trace_seed2.csv", "trace_seed3.csv", "ensemble.csv", "ratefit.txt",
                        "plot.gp", "failures.jsonl", "resolved.cfg"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  EXPECT_NE(slurp(dir.path() / "plot.gp").find("ensemble.csv"), std::string::npos);
  EXPECT_TRUE(slurp(dir.path() / "failures.jsonl").empty());
}

TEST(CmdRun, RepeatedSeedGivesIdenticalTraces) {
  TempDir dir("repeat");
  std::ostringstream log;
  ExperimentSpec spec = parse(kSmallRun);
  spec.seeds = {7, 7};
  ASSERT_EQ(cmd_run(spec, dir.path(), log), kExitOk) << log.str();
  const std::string a = slurp(dir.path() / "trace_seed7.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir.path() / "trace_seed7-r2.csv"));
}

TEST(CmdRun, MultipleMethodsGetSubdirectories) {
  TempDir dir("methods");
  std::ostringstream log;
  ExperimentSpec spec = parse(kSmallRun);
  spec.methods = {Method::zeroth, Method::zeroth_baseline};
  ASSERT_EQ(cmd_run(spec, dir.path(), log), kExitOk) << log.str();
  EXPECT_TRUE(fs::exists(dir.path() / "zeroth" / "trace_seed1.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "zeroth-baseline" / "ensemble.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "ratefit.txt"));
}

TEST(CmdRun, FailedCheckIsReported) {
  TempDir dir("check");
  std::ostringstream log;
  const ExperimentSpec spec = parse(std::string(kSmallRun) + "[checks]\nmse_slope = 3\nmse_tolerance = 0.1\n");
  EXPECT_EQ(cmd_run(spec, dir.path(), log), kExitCheckFailed);
  const std::string failures = slurp(dir.path() / "failures.jsonl");
  EXPECT_NE(failures.find("\"check\""), std::string::npos);
  EXPECT_NE(failures.find("\"expected\":3"), std::string::npos) << failures;
  EXPECT_NE(log.str().find("FAIL"), std::string::npos);
}

TEST(CmdRun, InadmissibleProtocolIsAConfigError) {
  TempDir dir("bad");
  std::ostringstream log;
  const ExperimentSpec spec = parse(std::string(kSmallRun) + "[protocol]\nrho0 = 1\nzeta0 = 1\n");
  EXPECT_EQ(cmd_run(spec, dir.path(), log), kExitConfigError);
  EXPECT_NE(log.str().find("beta0*lambda_N"), std::string::npos) << log.str();
}

TEST(CmdRun, DivergenceIsExitThree) {
  TempDir dir("diverge");
  std::ostringstream log;
  const ExperimentSpec spec = parse(R"([topology]
graph = complete:4
[steps]
alpha0 = 5
constant = true
[problem]
dim = 2
mu = 1
L = 2
[run]
method = first
horizon = 1000
)");
  EXPECT_EQ(cmd_run(spec, dir.path(), log), kExitDivergence);
  EXPECT_NE(slurp(dir.path() / "failures.jsonl").find("divergence"), std::string::npos);
}

TEST(CmdValidate, ReportsWarningsAndViolations) {
  std::ostringstream ok_log, bad_log;
  EXPECT_EQ(cmd_validate(parse(kMinimal), ok_log), kExitOk);
  EXPECT_NE(ok_log.str().find("4N^2 rho0^2"), std::string::npos);
  EXPECT_EQ(cmd_validate(parse(std::string(kMinimal) + "[steps]\nalpha0 = 0.5\n"), bad_log), kExitConfigError);
}

TEST(CmdIngest, AbaloneShapedPartition) {
  TempDir dir("ingest");
  std::ostringstream log;
  IngestOptions opt;
  opt.data = "synthetic-abalone";
  opt.split = 577;
  opt.onehot = 0;
  opt.out = dir.path();
  ASSERT_EQ(cmd_ingest(opt, log), kExitOk) << log.str();
  const std::string summary = slurp(dir.path() / "summary.txt");
  EXPECT_NE(summary.find("rows 4177\n"), std::string::npos);
  EXPECT_NE(summary.find("train 3600\n"), std::string::npos);
  EXPECT_NE(summary.find("test 577\n"), std::string::npos);
  EXPECT_NE(summary.find("per_node 360 360 360 360 360 360 360 360 360 360\n"), std::string::npos) << summary;
  EXPECT_TRUE(fs::exists(dir.path() / "test.csv"));
}

TEST(CmdIngest, NonNumericCellIsLocated) {
  TempDir dir("ingest-bad");
  {
    std::ofstream f(dir.path() / "bad.csv");
    f << "1,2,3\n4,5,6\n7,eight,9\n";
  }
  std::ostringstream log;
  IngestOptions opt;
  opt.data = (dir.path() / "bad.csv").string();
  opt.nodes = 1;
  opt.out = dir.path() / "out";
  EXPECT_EQ(cmd_ingest(opt, log), kExitConfigError);
  EXPECT_NE(log.str().find("line 3"), std::string::npos) << log.str();
  EXPECT_NE(log.str().find("column 3"), std::string::npos) << log.str();
}

TEST(CmdIngest, ZeroSplitKeepsEverythingForTraining) {
  TempDir dir("ingest-nosplit");
  std::ostringstream log;
  IngestOptions opt;
  opt.data = "synthetic-abalone";
  opt.out = dir.path();
  ASSERT_EQ(cmd_ingest(opt, log), kExitOk);
  EXPECT_NE(slurp(dir.path() / "summary.txt").find("train 4177\n"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.path() / "test.csv"));

  TempDir run_dir("ingest-nosplit-run");
  const ExperimentSpec spec = parse(R"([problem]
kind = erm
data = synthetic-abalone
[run]
method = first
horizon = 200
)");
  ASSERT_EQ(cmd_run(spec, run_dir.path(), log), kExitOk) << log.str();
  const std::string trace = slurp(run_dir.path() / "trace_seed1.csv");
  EXPECT_EQ(trace.find("test_error"), std::string::npos);
}

TEST(CmdBias, ProbeAndControlPass) {
  TempDir dir("bias");
  std::ostringstream log;
  ExperimentSpec spec = parse("[bias]\nsamples = 100000\n");
  ASSERT_EQ(cmd_bias(spec, dir.path(), log), kExitOk) << log.str();
  EXPECT_TRUE(fs::exists(dir.path() / "bias.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "bias.txt"));
}

TEST(OutputDir, EnvironmentOverride) {
  ::setenv(kOutputRootEnv, "/tmp/sgopt-root", 1);
  EXPECT_EQ(default_output_dir("configs/zo_quadratic.cfg"), fs::path("/tmp/sgopt-root/zo_quadratic"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(default_output_dir("x/erm.cfg"), fs::path("sgopt-out/erm"));
}

}  // namespace
}  // namespace sgopt::cli

// Runs the datashifts executable end to end.

#include "datashifts/report.hpp"
#include "datashifts/seeding.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace datashifts;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("datashifts_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    Rng rng(3);
    std::normal_distribution<double> z(0.0, 1.0);
    for (auto [name, shift] : {std::pair{"s.csv", 0.0}, {"t.csv", 1.0}}) {
      std::ofstream f(dir_ / name);
      f << "x1,x2,y\n";
      for (int i = 0; i < 40; ++i) {
        const double a = z(rng) + shift, b = z(rng);
        f << a << ',' << b << ',' << std::sin(a) + 0.5 * shift << '\n';
      }
    }
    {
      std::ofstream sp(dir_ / "sp.csv"), tp(dir_ / "tp.csv");
      sp << "yhat\n";
      tp << "yhat\n";
      for (int i = 0; i < 40; ++i) {
        sp << 0.1 * i << '\n';
        tp << 0.2 << '\n';
      }
    }
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const char* name) { return (dir_ / name).string(); }

  static Outcome run(const std::string& args) {
    const std::string err_file = path("stderr.txt");
    const std::string cmd = std::string(DATASHIFTS_CLI) + " " + args + " 2>" + err_file;
    Outcome r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream e(err_file);
    r.err.assign(std::istreambuf_iterator<char>(e), {});
    return r;
  }

  static std::string pair_args() { return "--source " + path("s.csv") + " --target " + path("t.csv"); }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(CliTest, XShiftPrintsShiftJson) {
  const auto r = run("xshift " + pair_args() + " --label-cols y --beta 0.001");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("s_cov"));
  EXPECT_FALSE(j.contains("s_cpt"));
  EXPECT_EQ(j.at("estimator_kind"), "Debiased");
  // The report parses back into the same value and text.
  EXPECT_EQ(dump_report(j.get<ShiftEstimates>()), r.out);
}

TEST_F(CliTest, YShiftAddsConceptShift) {
  const auto r = run("yshift " + pair_args() + " --label-cols y --estimator plugin");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = nlohmann::json::parse(r.out).get<ShiftEstimates>();
  EXPECT_TRUE(s.s_cpt);
  EXPECT_EQ(s.estimator_kind, EstimatorKind::PlugIn);
}

TEST_F(CliTest, BoundWithoutConstantsHasNoBoundField) {
  const auto r = run("bound " + pair_args() + " --label-cols y");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("shifts"));
  EXPECT_FALSE(j.contains("bound"));
}

TEST_F(CliTest, BoundFromPredictions) {
  const auto r = run("bound " + pair_args() +
                     " --label-cols y --lipschitz '{\"layer_norms\": [2, 1.5]}' --source-pred " +
                     path("sp.csv") + " --target-pred " + path("tp.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto b = nlohmann::json::parse(r.out).at("bound").get<BoundReport>();
  EXPECT_EQ(b.lipschitz, (LipschitzSpec{3.0, 1.0, 1.0}));
  EXPECT_TRUE(b.target_error);
  EXPECT_EQ(b.bound, b.source_error + b.x_term + b.y_term);
}

TEST_F(CliTest, BoundWithSourceErrorAndLoss) {
  const auto r = run("bound " + pair_args() +
                     " --label-cols y --lipschitz '{\"l_h\": 2}' --loss squared:3 --source-error 0.4");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto b = nlohmann::json::parse(r.out).at("bound").get<BoundReport>();
  EXPECT_EQ(b.lipschitz, (LipschitzSpec{2.0, 6.0, 6.0}));
  EXPECT_EQ(b.source_error, 0.4);
}

TEST_F(CliTest, OutputFileMatchesStdout) {
  const auto to_stdout = run("xshift " + pair_args() + " --label-cols y --seed 5");
  const auto to_file = run("xshift " + pair_args() + " --label-cols y --seed 5 --out " + path("o.json"));
  ASSERT_EQ(to_file.code, 0) << to_file.err;
  EXPECT_TRUE(to_file.out.empty());
  std::ifstream f(path("o.json"));
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(f), {}), to_stdout.out);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  for (const std::string& args :
       {"yshift " + pair_args() + " --label-cols y --seed 7 --num-splits 3",
        std::string("fig1 --dims 2,3 --sizes 30,40 --offsets 0,1 --anchor-dim 3 --anchor-n 30 --seeds 2 "
                    "--beta 0.01"),
        std::string("validate-bound --trials 3 --sample-size 40 --seed 4"),
        std::string("concentration --kind yshift --sizes 30,60 --seeds 2")}) {
    const auto a = run(args), b = run(args);
    ASSERT_EQ(a.code, 0) << args << '\n' << a.err;
    EXPECT_EQ(a.out, b.out) << args;
    EXPECT_FALSE(a.out.empty());
  }
}

TEST_F(CliTest, Fig1WritesTheDeclaredHeader) {
  const auto r = run("fig1 --dims 2 --sizes 20 --offsets 0 --anchor-dim 2 --anchor-n 20 --seeds 1 --out " +
                     path("f.csv") + " --svg " + path("f.svg"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(path("f.csv"));
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "d,n,offset,seed,estimator,estimate,truth,abs_error");
  EXPECT_TRUE(fs::exists(path("f.svg")));
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("xshift --source " + path("s.csv")).code, 2);
  EXPECT_EQ(run("xshift " + pair_args() + " --beta -1").code, 2);
  EXPECT_EQ(run("xshift " + pair_args() + " --estimator median").code, 2);
  EXPECT_EQ(run("yshift " + pair_args()).code, 2);  // labels required
  const auto missing = run("xshift --source " + path("nope.csv") + " --target " + path("t.csv"));
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("cannot open"), std::string::npos);
  EXPECT_EQ(run("bound " + pair_args() + " --label-cols y --lipschitz '{\"l_h\": 1}'").code, 2);
  EXPECT_EQ(run("fig1 --beta 0").code, 2);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("xshift --help").code, 0);
}

TEST_F(CliTest, SolverFailureExitsWithOneAndDiagnostic) {
  const auto r = run("xshift " + pair_args() + " --label-cols y --beta 0.0001 --max-iterations 2");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("marginal violation"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, ExactSolverAtZeroBeta) {
  const auto r = run("xshift " + pair_args() + " --label-cols y --beta 0 --estimator plugin");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out).at("beta"), 0.0);
}

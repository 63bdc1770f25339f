#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace dpcp::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "dpcp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome r;
  r.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::vector<std::string>> out;
  for (std::string line; std::getline(f, line);) out.push_back(split_csv_line(line));
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dpcp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, GenWritesDatasetAndBasis) {
  const Outcome r = run({"gen", "--D", "10", "--d", "5", "--N", "200", "--M", "200", "--sigma", "0",
                     "--seed", "7", "--out", path("data.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const LabeledData ds = read_dataset(path("data.csv"));
  EXPECT_EQ(ds.data.rows(), 10);
  EXPECT_EQ(ds.data.cols(), 400);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), true), 200);
  const Matrix basis = read_basis(path("data.basis.csv"));
  EXPECT_EQ(basis.rows(), 10);
  EXPECT_EQ(basis.cols(), 5);
  EXPECT_EQ(slurp(path("data.csv")).substr(0, 12), "label,x1,x2,");
  EXPECT_FALSE(fs::exists(path("data.csv.tmp")));
}

TEST_F(CliTest, GenIsReproducible) {
  ASSERT_EQ(run({"gen", "--D", "4", "--d", "2", "--N", "20", "--M", "10", "--sigma", "0.1", "--seed", "3",
                 "--out", path("a.csv")}).code, 0);
  ASSERT_EQ(run({"gen", "--D", "4", "--d", "2", "--N", "20", "--M", "10", "--sigma", "0.1", "--seed", "3",
                 "--out", path("b.csv")}).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  const Dataset ds = synthesize(4, 2, 20, 10, 0.1, 3);
  const LabeledData back = read_dataset(path("a.csv"));
  EXPECT_EQ(back.data, ds.data);
}

TEST_F(CliTest, FitWritesUnitComplementVectors) {
  ASSERT_EQ(run({"gen", "--D", "5", "--d", "4", "--N", "60", "--M", "30", "--seed", "1", "--out",
                 path("data.csv")}).code, 0);
  for (const std::string method : {"dpcp-lp", "dpcp-irls", "dpcp-d", "ransac"}) {
    const Outcome r = run({"fit", "--method", method, "--codim", "1", "--input", path("data.csv"), "--output",
                       path("b.csv"), "--signal", path("s.csv")});
    ASSERT_EQ(r.code, 0) << method << ": " << r.err;
    const Matrix b = read_basis(path("b.csv"));
    ASSERT_EQ(b.cols(), 1);
    EXPECT_NEAR(b.col(0).norm(), 1.0, 1e-12);
    const Signal s = read_signal(path("s.csv"));
    EXPECT_EQ(s.values.size(), 90u);
  }
  const Outcome roc_run = run({"roc", "--input", path("s.csv"), "--output", path("roc.csv")});
  ASSERT_EQ(roc_run.code, 0) << roc_run.err;
  EXPECT_NE(roc_run.out.find("area_above"), std::string::npos);
  EXPECT_EQ(slurp(path("roc.csv")).substr(0, 8), "fpr,tpr\n");
}

TEST_F(CliTest, UsageErrors) {
  const Outcome missing = run({"grid", "--config", path("missing.json")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("config not found"), std::string::npos);
  EXPECT_EQ(run({"gen", "--out", path("x.csv"), "--bogus", "1"}).code, 1);
  EXPECT_EQ(run({"fit", "--method", "pca", "--input", "a", "--output", "b"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"gen", "--D", "3", "--d", "5", "--out", path("x.csv")}).code, 1);
}

TEST_F(CliTest, RuntimeFailure) {
  const Outcome r = run({"fit", "--method", "dpcp-lp", "--input", path("absent.csv"), "--output", path("b.csv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("b.csv")));
}

TEST_F(CliTest, HelpDocumentsFlagsAndDefaults) {
  const Outcome fit = run({"fit", "--help"});
  EXPECT_EQ(fit.code, 0);
  for (const char* flag : {"--method", "--codim", "--eps", "--tmax", "--delta", "--tau", "--input", "--output",
                           "--seed", "--thresh", "--trials", "--success-prob", "--ratio-hint"}) {
    EXPECT_NE(fit.out.find(flag), std::string::npos) << flag;
  }
  EXPECT_NE(fit.out.find("0.001"), std::string::npos);
  for (const char* sub : {"gen", "grid", "theory-check", "roc"}) {
    const Outcome r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--seed"), std::string::npos) << sub;
  }
}

TEST_F(CliTest, GridFromConfig) {
  {
    std::ofstream f(path("grid.json"));
    f << R"({"D": 4, "d_list": [2, 3], "N": 20, "ratio_list": [0.2, 0.4], "sigma_list": [0.0],
             "trials": 2, "methods": ["dpcp-lp", "dpcp-irls"], "seed": 5, "out_csv": ")"
      << path("grid.csv") << "\"}";
  }
  const Outcome r = run({"grid", "--config", path("grid.json"), "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto first = csv_lines(path("grid.csv"));
  ASSERT_EQ(first.size(), 17u);
  EXPECT_EQ(first[0].size(), 15u);
  ASSERT_EQ(run({"grid", "--config", path("grid.json"), "--jobs", "1", "--out", path("again.csv")}).code, 0);
  const auto second = csv_lines(path("again.csv"));
  ASSERT_EQ(second.size(), first.size());
  const auto wall = std::find(first[0].begin(), first[0].end(), "wall_ms") - first[0].begin();
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t k = 0; k < first[i].size(); ++k) {
      if (static_cast<long>(k) != wall) EXPECT_EQ(first[i][k], second[i][k]);
    }
  }
}

TEST_F(CliTest, GridRejectsUnknownConfigKey) {
  {
    std::ofstream f(path("grid.json"));
    f << R"({"D": 4, "d_list": [2], "N": 20, "ratio_list": [0.2], "trials": 1, "methods": ["dpcp-lp"],
             "colour": "red"})";
  }
  const Outcome r = run({"grid", "--config", path("grid.json"), "--out", path("g.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST_F(CliTest, TheoryCheckWritesSchema) {
  const Outcome r = run({"theory-check", "--D", "4", "--d", "2,3", "--N", "40", "--ratios", "0.3", "--trials",
                     "2", "--probes", "200", "--seed", "1", "--out", path("theory.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string text = slurp(path("theory.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "D,d,N,M,trial,eps_O,eps_X,gamma,condition_holds,phi0_star");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

}  // namespace
}  // namespace dpcp::cli

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "cmdp/cli.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/io.hpp"

namespace cmdp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() /
            (std::string("cmdp_cli_") + info->name() + "_" +
             std::to_string(std::hash<std::string>{}(fs::current_path().string())));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  // Reruns the manifest in `name` into `name`_again with --check.
  int rerun_check(const std::string& name) {
    return run({"rerun", "--manifest", dir(name) + "/manifest.json", "--out",
                dir(name + "_again"), "--check"});
  }

  fs::path root_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_NE(out_.str().find("cliffwalk-scaling"), std::string::npos);
  EXPECT_EQ(run({"--version"}), kExitOk);
  EXPECT_EQ(out_.str(), std::string(kToolVersion) + "\n");
  EXPECT_EQ(run({"simpledir-error", "--help"}), kExitOk);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"no-such-command"}), kExitUsage);
  EXPECT_EQ(run({"train", "--mode", "bogus", "--out", dir("t")}), kExitUsage);
  EXPECT_EQ(run({"pendulum-gradcheck", "--h", "0", "--out", dir("p")}), kExitUsage);
  EXPECT_EQ(run({"simpledir-error", "--dc-grid", "log:1:0.1", "--out", dir("s")}),
            kExitUsage);
  EXPECT_EQ(run({"cliffwalk-scaling", "--out", dir("c"), "--variant", "z"}), kExitUsage);
  EXPECT_EQ(run({"cliffwalk-scaling"}), kExitUsage);  // --out is required
}

TEST_F(CliTest, NumericalErrorExitCode) {
  // c0 outside (0, 1) is a domain error.
  EXPECT_EQ(run({"cliffwalk-scaling", "--c0", "1.5", "--out", dir("c")}), kExitNumerical);
}

TEST_F(CliTest, CliffwalkScalingSinglePointHasZeroRow) {
  ASSERT_EQ(run({"cliffwalk-scaling", "--n-points", "1", "--fit-points", "1", "--out",
                 dir("c")}),
            kExitOk)
      << err_.str();
  const std::string csv = read_file(dir("c") + "/scaling.csv");
  std::istringstream lines(csv);
  std::string header, zero_row;
  std::getline(lines, header);
  std::getline(lines, zero_row);
  EXPECT_EQ(header, "dc_norm,q_error");
  EXPECT_EQ(zero_row, "0,0");
}

TEST_F(CliTest, CliffwalkScalingSlope) {
  ASSERT_EQ(run({"cliffwalk-scaling", "--n-points", "40", "--out", dir("c")}), kExitOk);
  const json s = json::parse(read_file(dir("c") + "/summary.json"));
  EXPECT_NEAR(s.at("slope").get<double>(), 2.0, 0.15);
  EXPECT_EQ(s.at("zero_perturbation_error").get<double>(), 0.0);
  EXPECT_EQ(rerun_check("c"), kExitOk) << out_.str();
}

TEST_F(CliTest, ManifestContents) {
  ASSERT_EQ(run({"simpledir-error", "--dc-grid", "0.001,0.01", "--out", dir("s")}),
            kExitOk);
  const json m = json::parse(read_file(dir("s") + "/manifest.json"));
  EXPECT_EQ(m.at("subcommand"), "simpledir-error");
  EXPECT_EQ(m.at("tool_version"), kToolVersion);
  EXPECT_EQ(m.at("exit_code"), 0);
  EXPECT_FALSE(m.at("params").contains("out"));
  EXPECT_EQ(m.at("params").at("dc-grid"), "0.001,0.01");
  EXPECT_EQ(rerun_check("s"), kExitOk) << out_.str();
}

TEST_F(CliTest, RerunDetectsTamperedOutput) {
  ASSERT_EQ(run({"simpledir-error", "--dc-grid", "0.001,0.01", "--out", dir("s")}),
            kExitOk);
  write_file_atomic(dir("s") + "/errors.csv", "tampered\n");
  EXPECT_EQ(rerun_check("s"), kExitCheckFailed);
  EXPECT_NE(out_.str().find("DIFFERS errors.csv"), std::string::npos);
}

TEST_F(CliTest, PendulumGradcheckAndRerun) {
  ASSERT_EQ(run({"pendulum-gradcheck", "--trials", "10", "--seed", "4", "--out",
                 dir("p")}),
            kExitOk)
      << err_.str();
  const json r = json::parse(read_file(dir("p") + "/report.json"));
  EXPECT_LT(r.at("max_rel_error").get<double>(), 1e-3);
  EXPECT_EQ(rerun_check("p"), kExitOk);
}

TEST_F(CliTest, PendulumGradcheckFailsWithTinyTolerance) {
  EXPECT_EQ(run({"pendulum-gradcheck", "--trials", "5", "--tolerance", "1e-14", "--out",
                 dir("p")}),
            kExitCheckFailed);
}

TEST_F(CliTest, BoundsCheckBothTheoremsAndRerun) {
  for (const char* th : {"1", "3"}) {
    const std::string name = std::string("b") + th;
    ASSERT_EQ(run({"bounds-check", "--theorem", th, "--trials", "30", "--seed", "2",
                   "--out", dir(name)}),
              kExitOk)
        << err_.str();
    const json r = json::parse(read_file(dir(name) + "/report.json"));
    EXPECT_EQ(r.at("passed"), 30);
    EXPECT_EQ(rerun_check(name), kExitOk);
  }
  EXPECT_EQ(run({"bounds-check", "--theorem", "2", "--out", dir("b2")}), kExitUsage);
}

TEST_F(CliTest, TrainEvalCompareAndRerun) {
  const std::vector<std::string> small{"--episodes", "100", "--updates-per-episode", "2"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), small.begin(), small.end());
    return a;
  };
  ASSERT_EQ(run(with({"train", "--mode", "cse", "--seeds", "0,1", "--out", dir("t")})),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir("t") + "/q_cse_seed0.json"));
  EXPECT_TRUE(fs::exists(dir("t") + "/q_cse_seed1.json"));
  EXPECT_EQ(rerun_check("t"), kExitOk);

  ASSERT_EQ(run({"eval", "--q-dir", dir("t"), "--mode", "cse", "--seeds", "0,1",
                 "--eval-episodes", "8", "--out", dir("e")}),
            kExitOk)
      << err_.str();
  const std::string csv = read_file(dir("e") + "/eval.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "mode,seed,context_x,context_y,mean_return,stderr");
  EXPECT_EQ(rerun_check("e"), kExitOk);
  EXPECT_EQ(run({"eval", "--q-dir", dir("missing"), "--mode", "cse", "--seeds", "0",
                 "--out", dir("e2")}),
            kExitUsage);

  ASSERT_EQ(run(with({"compare", "--seeds", "0..2", "--eval-episodes", "8", "--out",
                      dir("cmp")})),
            kExitOk)
      << err_.str();
  const json s = json::parse(read_file(dir("cmp") + "/summary.json"));
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(rerun_check("cmp"), kExitOk);
}

TEST_F(CliTest, ZeroRadiusCseCurveMatchesBaseline) {
  const std::vector<std::string> common{"--seeds", "3", "--episodes", "100",
                                        "--updates-per-episode", "2",
                                        "--epsilon-perturb", "0"};
  std::vector<std::string> a{"train", "--mode", "cse", "--out", dir("a")};
  std::vector<std::string> b{"train", "--mode", "baseline", "--out", dir("b")};
  a.insert(a.end(), common.begin(), common.end());
  b.insert(b.end(), common.begin(), common.end());
  ASSERT_EQ(run(a), kExitOk);
  ASSERT_EQ(run(b), kExitOk);
  auto returns = [](const std::string& csv) {
    // Drop the mode column.
    std::istringstream in(csv);
    std::string line, kept;
    while (std::getline(in, line)) kept += line.substr(line.find(',')) + "\n";
    return kept;
  };
  EXPECT_EQ(returns(read_file(dir("a") + "/learning_curve.csv")),
            returns(read_file(dir("b") + "/learning_curve.csv")));
}

// ---------------------------------------------------------------------------

TEST(ParseSeedList, Forms) {
  EXPECT_EQ(parse_seed_list("0..3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(parse_seed_list("1,4,7"), (std::vector<std::uint64_t>{1, 4, 7}));
  EXPECT_EQ(parse_seed_list("12"), (std::vector<std::uint64_t>{12}));
  EXPECT_THROW(parse_seed_list("3..1"), UsageError);
  EXPECT_THROW(parse_seed_list("x"), UsageError);
  EXPECT_THROW(parse_seed_list(""), UsageError);
}

TEST(ParseGrid, Forms) {
  const auto lg = parse_grid("log:1e-4:1e-1:4");
  ASSERT_EQ(lg.size(), 4u);
  EXPECT_NEAR(lg[0], 1e-4, 1e-18);
  EXPECT_NEAR(lg[1], 1e-3, 1e-15);
  EXPECT_NEAR(lg[3], 1e-1, 1e-15);
  EXPECT_EQ(parse_grid("lin:0:1:3"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(parse_grid("0.1,0.2"), (std::vector<double>{0.1, 0.2}));
  EXPECT_THROW(parse_grid("log:0:1:3"), UsageError);
  EXPECT_THROW(parse_grid("cubic:0:1:3"), UsageError);
  EXPECT_THROW(parse_grid("0.1,abc"), UsageError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(-2.5), "-2.5");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  for (double v : {1.0 / 3.0, 6.02214076e23, -1e-17, 0.1 + 0.2}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(CsvTable, RowsAndWidthCheck) {
  CsvTable t({"a", "b"});
  t.cell("x").cell(0.5);
  t.end_row();
  t.cell(std::int64_t{-3}).cell(std::uint64_t{7});
  t.end_row();
  EXPECT_EQ(t.str(), "a,b\nx,0.5\n-3,7\n");
  t.cell("only");
  EXPECT_THROW(t.end_row(), UsageError);
}

TEST(WriteFileAtomic, CreatesDirectoriesAndReplaces) {
  const fs::path p = fs::temp_directory_path() / "cmdp_io_test" / "sub" / "f.txt";
  fs::remove_all(p.parent_path().parent_path());
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  EXPECT_EQ(read_file(p), "two");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
  fs::remove_all(p.parent_path().parent_path());
  EXPECT_THROW(read_file(p), std::exception);
}

}  // namespace
}  // namespace cmdp

// Copyright 2026 The PerturbOpt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "perturbopt/btl_io.h"
#include "perturbopt/experiments.h"

namespace perturbopt::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ =
        fs::temp_directory_path() /
        ("perturbopt_cli_" +
         std::string(
             ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    unsetenv("PERTURBOPT_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("PERTURBOPT_SEED");
  }

  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }

  std::string WriteFile(const std::string& name, const std::string& body) {
    std::ofstream(Path(name)) << body;
    return Path(name);
  }

  int Run(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return Dispatch(args, out_, err_);
  }

  static std::string Slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(Run({"--help"}), kExitOk);
  EXPECT_NE(out_.str().find("study-rho"), std::string::npos);
  EXPECT_EQ(Run({"fit", "--help"}), kExitOk);
  EXPECT_EQ(Run({}), kExitUsage);
  EXPECT_EQ(Run({"bogus"}), kExitUsage);
  EXPECT_EQ(Run({"fit"}), kExitUsage);  // --input is required
  EXPECT_EQ(Run({"study-rho", "--no-such-flag"}), kExitUsage);
  EXPECT_EQ(Run({"study-rho", "--format", "xml"}), kExitUsage);
  EXPECT_EQ(Run({"study-rho", "--n-list", "10,x"}), kExitUsage);
}

TEST_F(CliTest, FitSymmetricPairGivesZero) {
  const std::string in = WriteFile("obs.csv", "j,m,N,S\n1,2,4,2\n");
  const std::string scores = Path("scores.csv");
  ASSERT_EQ(Run({"fit", "--input", in, "--out", scores}), kExitOk)
      << err_.str();
  const ScoreVector s = ReadScoresCsv(scores);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 0.0, 1e-9);
  EXPECT_NEAR(s[1], 0.0, 1e-9);
  ASSERT_EQ(Run({"fit", "--input", in, "--solver", "coordinate"}), kExitOk);
  EXPECT_EQ(out_.str().rfind("item,score", 0), 0u);
}

TEST_F(CliTest, FitWithoutMinimizerFails) {
  const std::string in = WriteFile("obs.csv", "j,m,N,S\n1,2,4,4\n");
  EXPECT_EQ(Run({"fit", "--input", in}), kExitFailure);
  EXPECT_NE(err_.str().find("does not exist"), std::string::npos);
}

TEST_F(CliTest, FitInputErrors) {
  // A missing path is rejected while parsing arguments.
  EXPECT_EQ(Run({"fit", "--input", Path("missing.csv")}), kExitUsage);
  const std::string bad = WriteFile("bad.csv", "j,m,N,S\n1,1,4,2\n");
  EXPECT_EQ(Run({"fit", "--input", bad}), kExitFailure);
  EXPECT_NE(err_.str().find("error"), std::string::npos);
}

TEST_F(CliTest, DiagnoseWritesTwoSections) {
  const std::string in =
      WriteFile("obs.csv", "j,m,N,S\n1,2,5,3\n2,3,5,2\n1,3,5,4\n");
  const std::string truth =
      WriteFile("truth.csv", "item,score\n1,0.3\n2,0\n3,-0.3\n");
  ASSERT_EQ(Run({"diagnose", "--input", in, "--truth", truth}), kExitOk)
      << err_.str();
  const std::string text = out_.str();
  EXPECT_EQ(text.rfind("quantity,value", 0), 0u);
  EXPECT_NE(text.find("\n\n"), std::string::npos);
  EXPECT_NE(text.find("variant,"), std::string::npos);
}

TEST_F(CliTest, StudyRhoIsReproducible) {
  const std::vector<std::string> base = {
      "study-rho", "--n-list", "30,40", "--reps", "3", "--seed", "5"};
  auto a = base;
  a.insert(a.end(), {"--out", Path("a.csv")});
  auto b = base;
  b.insert(b.end(), {"--out", Path("b.csv"), "--threads", "2"});
  ASSERT_EQ(Run(a), kExitOk) << err_.str();
  ASSERT_EQ(Run(b), kExitOk) << err_.str();
  EXPECT_EQ(Slurp(Path("a.csv")), Slurp(Path("b.csv")));
  EXPECT_TRUE(fs::exists(Path("a.csv") + ".meta.json"));
}

TEST_F(CliTest, SeedPrecedence) {
  const std::string cfg = WriteFile("cfg.json", R"({"seed": 3, "reps": 1,
      "n_list": "30"})");
  auto seed_of = [&](const std::string& file) {
    std::ifstream in(file);
    return ParseRhoRecords(in, OutputFormat::kCsv).at(0).seed;
  };
  ASSERT_EQ(Run({"study-rho", "--config", cfg, "--out", Path("c.csv")}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(seed_of(Path("c.csv")), SubstreamSeed(3, 30, 0));

  setenv("PERTURBOPT_SEED", "4", 1);
  ASSERT_EQ(Run({"study-rho", "--config", cfg, "--out", Path("e.csv")}),
            kExitOk);
  EXPECT_EQ(seed_of(Path("e.csv")), SubstreamSeed(4, 30, 0));

  ASSERT_EQ(Run({"study-rho", "--config", cfg, "--seed", "9", "--out",
                 Path("f.csv")}),
            kExitOk);
  EXPECT_EQ(seed_of(Path("f.csv")), SubstreamSeed(9, 30, 0));
}

TEST_F(CliTest, ConfigRejectsUnknownKeys) {
  const std::string cfg = WriteFile("cfg.json", R"({"bogus": 1})");
  EXPECT_EQ(Run({"study-rho", "--config", cfg}), kExitUsage);
  const std::string bad = WriteFile("bad.json", "[1, 2]");
  EXPECT_EQ(Run({"study-rho", "--config", bad}), kExitUsage);
}

TEST_F(CliTest, StudyJsonFormat) {
  ASSERT_EQ(Run({"study-rho", "--n-list", "30", "--reps", "2", "--format",
                 "json", "--out", Path("r.json")}),
            kExitOk);
  std::ifstream in(Path("r.json"));
  EXPECT_EQ(ParseRhoRecords(in, OutputFormat::kJson).size(), 2u);
}

TEST_F(CliTest, AoSubcommandWritesTrace) {
  ASSERT_EQ(Run({"ao", "--n", "12", "--gap-mode", "certified", "--gap", "0.5",
                 "--out", Path("trace.csv")}),
            kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("steps=20"), std::string::npos);
  EXPECT_EQ(Slurp(Path("trace.csv")).rfind("step,theta_err", 0), 0u);
}

TEST_F(CliTest, StrictTurnsWarningsIntoFailures) {
  // No solver reaches a tolerance below rounding.
  const std::string in = WriteFile(
      "obs.csv", "j,m,N,S\n1,2,7,3\n2,3,9,2\n1,3,5,4\n3,4,6,1\n1,4,11,7\n");
  EXPECT_EQ(Run({"fit", "--input", in, "--tol", "1e-300"}), kExitOk);
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
  EXPECT_EQ(Run({"fit", "--input", in, "--tol", "1e-300", "--strict"}),
            kExitFailure);
}

TEST_F(CliTest, SelftestPasses) {
  EXPECT_EQ(Run({"selftest"}), kExitOk) << out_.str();
  EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
  for (const SelftestCheck& c : RunSelftest(1)) EXPECT_TRUE(c.ok) << c.name;
}

}  // namespace
}  // namespace perturbopt::cli

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

#include "perturbopt/experiments.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "perturbopt/error.h"

namespace perturbopt {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExperimentConfig SmallRhoConfig() {
  ExperimentConfig cfg;
  cfg.n_list = {30, 60};
  cfg.reps = 4;
  cfg.seed = 17;
  cfg.threads = 1;
  return cfg;
}

TEST(EdgeRuleTest, Probability) {
  EXPECT_DOUBLE_EQ(EdgeRule::Paper().Probability(100),
                   std::pow(std::log(100.0), 3) / 100.0);
  EXPECT_DOUBLE_EQ(EdgeRule::Paper().Probability(20), 1.0);
  EXPECT_DOUBLE_EQ(EdgeRule::Fixed(0.3).Probability(20), 0.3);
}

TEST(ConfigTest, ValidateRejectsBadValues) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.reps = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.n_list = {1};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.score_min = 3.0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.p_rule = EdgeRule::Fixed(1.5);
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.ao_start = AoStart::kCertifiedFraction;
  cfg.ao_gap = 2.0;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(RhoStudyTest, DeterministicAcrossRunsAndThreads) {
  ExperimentConfig cfg = SmallRhoConfig();
  const auto a = RunRhoStudy(cfg);
  const auto b = RunRhoStudy(cfg);
  cfg.threads = 3;
  const auto c = RunRhoStudy(cfg);
  ASSERT_EQ(a.records.size(), 8u);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.records, c.records);
  for (std::size_t i = 1; i < a.records.size(); ++i) {
    const auto& p = a.records[i - 1];
    const auto& q = a.records[i];
    EXPECT_TRUE(p.n < q.n || (p.n == q.n && p.rep < q.rep));
  }
}

TEST(RhoStudyTest, ReplicationDependsOnlyOnItsSubstream) {
  ExperimentConfig cfg = SmallRhoConfig();
  const auto study = RunRhoStudy(cfg);
  const RhoRecord single = RunRhoReplication(cfg, 60, 2);
  EXPECT_EQ(single, study.records[6]);
  cfg.seed = 18;
  EXPECT_NE(RunRhoReplication(cfg, 60, 2).seed, single.seed);
}

TEST(RhoStudyTest, ValuesAreConsistent) {
  const auto study = RunRhoStudy(SmallRhoConfig());
  for (const RhoRecord& r : study.records) {
    if (!r.connected) continue;
    EXPECT_GT(r.rho_dual, 0.0);
    EXPECT_LE(r.rho_dual_l2, r.rho_dual + 1e-15);
  }
}

TEST(ExpansionStudyTest, SmallReplication) {
  ExperimentConfig cfg;
  cfg.n_list = {20};
  cfg.p_rule = EdgeRule::Fixed(0.6);
  cfg.comparisons = 3;
  cfg.reps = 2;
  cfg.threads = 1;
  ReplicationDetail detail;
  const ExpansionRecord r = RunExpansionReplication(cfg, 20, 0, &detail);
  ASSERT_TRUE(r.converged) << detail.failure;
  EXPECT_GT(r.lead_fish, 0.0);
  EXPECT_LT(r.rem_fish, r.lead_fish);
  EXPECT_TRUE(!detail.iii_asserted || detail.iii_holds);
  EXPECT_EQ(RunExpansionReplication(cfg, 20, 0), r);
}

TEST(AoStudyTest, CertifiedStartContracts) {
  ExperimentConfig cfg;
  cfg.n_list = {12};
  cfg.reps = 3;
  cfg.threads = 1;
  cfg.ao_start = AoStart::kCertifiedFraction;
  cfg.ao_gap = 0.5;
  const auto study = RunAoStudy(cfg);
  ASSERT_EQ(study.records.size(), 3u);
  int ran = 0;
  for (std::size_t i = 0; i < study.records.size(); ++i) {
    const AoRecord& r = study.records[i];
    const ReplicationDetail& d = study.details[i];
    if (!d.failure.empty()) continue;
    ++ran;
    EXPECT_TRUE(r.cert_ok);
    EXPECT_TRUE(d.contraction_holds);
    EXPECT_TRUE(d.eps_holds);
    EXPECT_NEAR(d.start_gap, 0.5 * d.max_certified_gap,
                1e-9 * d.max_certified_gap);
    EXPECT_LT(r.rate, 1.0);
  }
  EXPECT_GT(ran, 0);
}

TEST(AoStudyTest, SurrogateRateEqualsPpt) {
  ExperimentConfig cfg;
  cfg.n_list = {12};
  cfg.reps = 1;
  cfg.ao_quadratic_surrogate = true;
  cfg.ao_gap = 1e-2;
  ReplicationDetail d;
  AoTrace trace;
  const AoRecord r = RunAoReplication(cfg, 12, 0, &d, &trace);
  ASSERT_TRUE(d.failure.empty()) << d.failure;
  EXPECT_NEAR(r.rate, r.ppt, 1e-6);
  EXPECT_EQ(trace.steps(), 20u);
}

TEST(SummaryTest, IgnoresNonFiniteValues) {
  const SummaryStat s = Summarize({1.0, 3.0, kNaN, 5.0});
  EXPECT_EQ(s.count, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.sd, 2.0);
  EXPECT_TRUE(std::isnan(Summarize({}).mean));
}

TEST(SummaryTest, ExcludesDisconnected) {
  std::vector<RhoRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[i].n = 10;
    recs[i].rep = i;
    recs[i].rho_dual = i + 1.0;
    recs[i].connected = i != 1;
  }
  const auto s = SummarizeStudy(recs);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].included, 2u);
  EXPECT_EQ(s[0].excluded, 1u);
  EXPECT_EQ(s[0].stats[0].first, "rho_dual");
  EXPECT_DOUBLE_EQ(s[0].stats[0].second.mean, 2.0);
}

template <typename Record, typename Parser>
void ExpectRoundTrip(const std::vector<Record>& recs, Parser parse) {
  for (OutputFormat fmt : {OutputFormat::kCsv, OutputFormat::kJson}) {
    std::stringstream ss;
    WriteRecords(ss, recs, fmt);
    EXPECT_EQ(parse(ss, fmt), recs);
  }
}

TEST(RecordIoTest, RoundTripWithSpecialValues) {
  std::vector<RhoRecord> rho(2);
  rho[0] = {100, 0, 123456789012345ULL, 0.1 + 0.2, 1.0 / 3.0, true, -0.25};
  rho[1] = {100, 1, 7, kNaN, kNaN, false, kNaN};
  ExpectRoundTrip(rho, ParseRhoRecords);

  std::vector<ExpansionRecord> ex(1);
  ex[0] = {50,   3,    9, 1e-300, 2.5, std::numeric_limits<double>::infinity(),
           kNaN, false};
  ExpectRoundTrip(ex, ParseExpansionRecords);

  std::vector<AoRecord> ao(1);
  ao[0] = {20, 0, 1, 0.75, 0.7499999999999999, true, 20};
  ExpectRoundTrip(ao, ParseAoRecords);
}

TEST(RecordIoTest, CsvHeaderAndJsonNull) {
  std::vector<AoRecord> ao(1);
  ao[0].rate = kNaN;
  std::ostringstream csv;
  WriteRecords(csv, ao, OutputFormat::kCsv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "study,n,rep,seed,ppT,rate,cert_ok,steps");
  std::ostringstream json;
  WriteRecords(json, ao, OutputFormat::kJson);
  EXPECT_NE(json.str().find("null"), std::string::npos);
}

TEST(RecordIoTest, EmitWritesSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "perturbopt_emit";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "rho.csv").string();
  ExperimentConfig cfg = SmallRhoConfig();
  cfg.reps = 1;
  const auto study = RunRhoStudy(cfg);
  EmitRecords(study.records, OutputFormat::kCsv, path, cfg);
  std::ifstream in(path);
  EXPECT_EQ(ParseRhoRecords(in, OutputFormat::kCsv), study.records);
  std::ifstream meta(path + ".meta.json");
  ASSERT_TRUE(meta.good());
  std::stringstream buf;
  buf << meta.rdbuf();
  for (const char* key : {"artifact_version", "study", "format", "records",
                          "seed", "config", "created_utc"}) {
    EXPECT_NE(buf.str().find(std::string("\"") + key + "\""), std::string::npos)
        << key;
  }
  std::filesystem::remove_all(dir);
}

TEST(RecordIoTest, RejectsMalformedInput) {
  std::istringstream bad("n,rep\n1,2\n");
  EXPECT_THROW(ParseRhoRecords(bad, OutputFormat::kCsv), Error);
  std::istringstream bad_json("{\"not\": \"an array\"}");
  EXPECT_THROW(ParseRhoRecords(bad_json, OutputFormat::kJson), Error);
}

}  // namespace
}  // namespace perturbopt

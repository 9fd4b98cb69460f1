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

// Seeded Monte Carlo studies on Erdos-Renyi BTL instances.
//
// Every replication draws from its own substream, seeded from
// (master seed, n, replication), so records do not depend on scheduling and
// any single record can be regenerated from its seed column.

#ifndef PERTURBOPT_EXPERIMENTS_H_
#define PERTURBOPT_EXPERIMENTS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "perturbopt/ao.h"
#include "perturbopt/btl.h"

namespace perturbopt {

struct EdgeRule {
  enum class Kind { kPaper, kFixed };
  Kind kind = Kind::kPaper;
  double p = 1.0;  // kFixed only

  // min(1, log(n)^3 / n)
  static EdgeRule Paper() { return {}; }
  static EdgeRule Fixed(double p) { return {Kind::kFixed, p}; }

  double Probability(std::size_t n) const;
};

enum class WhichRho { kExact, kL2, kBoth };

// Where the AO study starts: an absolute sup-norm distance from theta*, or a
// fraction of the largest gap the certificate covers.
enum class AoStart { kAbsolute, kCertifiedFraction };

struct ExperimentConfig {
  std::vector<std::size_t> n_list = {100};
  EdgeRule p_rule;
  int comparisons = 1;  // L = N_jm on every edge
  double score_min = 0.0;
  double score_max = 2.0;
  PenaltySpec::Kind penalty_kind = PenaltySpec::Kind::kMeanShift;
  double gsq = 1.0;
  int reps = 20;
  std::uint64_t seed = 0;
  WhichRho which_rho = WhichRho::kBoth;
  // 0 uses the hardware concurrency.
  unsigned threads = 0;

  // Expansion study: kExpected replaces the wins by their expectations.
  BtlMode mode = BtlMode::kEmpirical;

  // AO study.
  int ao_steps = 20;
  AoStart ao_start = AoStart::kAbsolute;
  double ao_gap = 1e-3;    // sup-norm size, or fraction of the certified gap
  double ao_radius = 0.1;  // radii of the local set for the constants
  // Freeze the Hessian at the joint minimizer and start along the slowest
  // mode, so the estimated rate equals |PP^T|.
  bool ao_quadratic_surrogate = false;

  PenaltySpec Penalty() const;
  // Throws kInvalidArgument.
  void Validate() const;
};

struct RhoRecord {
  std::size_t n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double rho_dual = 0;
  double rho_dual_l2 = 0;
  bool connected = false;
  double diag_dom_margin = 0;

  static constexpr std::string_view kStudy = "rho";
};

struct ExpansionRecord {
  std::size_t n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double lead_fish = 0;  // |F^{-1} grad zeta|_inf
  double lead_diag = 0;  // |D^{-2} grad zeta|_inf
  double rem_fish = 0;   // |u_hat - u* + F^{-1} grad zeta|_inf
  double rem_diag = 0;   // |u_hat - u* + D^{-2} grad zeta|_inf
  bool converged = false;

  static constexpr std::string_view kStudy = "expansion";
};

struct AoRecord {
  std::size_t n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double ppt = 0;   // |P P^T|
  double rate = 0;  // estimated after one burn-in step
  bool cert_ok = false;
  int steps = 0;

  static constexpr std::string_view kStudy = "ao";
};

// Field-wise equality in which NaN equals NaN, so that records of failed
// replications survive a round trip through the writers.
bool operator==(const RhoRecord& a, const RhoRecord& b);
bool operator==(const ExpansionRecord& a, const ExpansionRecord& b);
bool operator==(const AoRecord& a, const AoRecord& b);

// Per-replication information that is not part of the CSV schema. Wall time
// stays out of the records so that reruns are byte-identical.
struct ReplicationDetail {
  double wall_seconds = 0;
  std::string failure;  // error message of a failed replication
  // Expansion study: the (iii) sup-norm display with its prerequisites.
  bool iii_asserted = false;
  bool iii_holds = false;
  double iii_bound = 0;
  // AO study.
  bool contraction_holds = false;
  bool eps_holds = false;
  double start_gap = 0;
  double max_certified_gap = 0;
};

template <typename Record>
struct StudyResult {
  std::vector<Record> records;
  std::vector<ReplicationDetail> details;  // parallel to records
};

RhoRecord RunRhoReplication(const ExperimentConfig& cfg, std::size_t n, int rep,
                            ReplicationDetail* detail = nullptr);
ExpansionRecord RunExpansionReplication(const ExperimentConfig& cfg,
                                        std::size_t n, int rep,
                                        ReplicationDetail* detail = nullptr);
// `trace`, when given, receives the AO iterates.
AoRecord RunAoReplication(const ExperimentConfig& cfg, std::size_t n, int rep,
                          ReplicationDetail* detail = nullptr,
                          AoTrace* trace = nullptr);

// Records sorted by (n, rep). Per-replication failures are recorded, never
// thrown; an invalid config throws kInvalidArgument.
StudyResult<RhoRecord> RunRhoStudy(const ExperimentConfig& cfg);
StudyResult<ExpansionRecord> RunExpansionStudy(const ExperimentConfig& cfg);
StudyResult<AoRecord> RunAoStudy(const ExperimentConfig& cfg);

// Count, mean and sample standard deviation of the finite values.
struct SummaryStat {
  std::size_t count = 0;
  double mean = 0;
  double sd = 0;
};

SummaryStat Summarize(const std::vector<double>& values);

struct StudySummary {
  std::size_t n = 0;
  std::size_t included = 0;
  std::size_t excluded = 0;  // disconnected, non-converged or failed
  std::vector<std::pair<std::string, SummaryStat>> stats;
};

std::vector<StudySummary> SummarizeStudy(const std::vector<RhoRecord>& r);
std::vector<StudySummary> SummarizeStudy(const std::vector<ExpansionRecord>& r);
std::vector<StudySummary> SummarizeStudy(const std::vector<AoRecord>& r);

enum class OutputFormat { kCsv, kJson };

// CSV with a header row, or a JSON array with one object per record. Floats
// carry 17 significant digits; NaN prints as "nan" in CSV and null in JSON.
void WriteRecords(std::ostream& out, const std::vector<RhoRecord>& r,
                  OutputFormat format);
void WriteRecords(std::ostream& out, const std::vector<ExpansionRecord>& r,
                  OutputFormat format);
void WriteRecords(std::ostream& out, const std::vector<AoRecord>& r,
                  OutputFormat format);

// Inverse of WriteRecords; throws kIoError on malformed input.
std::vector<RhoRecord> ParseRhoRecords(std::istream& in, OutputFormat format);
std::vector<ExpansionRecord> ParseExpansionRecords(std::istream& in,
                                                   OutputFormat format);
std::vector<AoRecord> ParseAoRecords(std::istream& in, OutputFormat format);

// Writes `path` and the sidecar `path.meta.json` with the config, the master
// seed, the library version and a UTC timestamp. Throws kIoError.
void EmitRecords(const std::vector<RhoRecord>& r, OutputFormat format,
                 const std::string& path, const ExperimentConfig& cfg);
void EmitRecords(const std::vector<ExpansionRecord>& r, OutputFormat format,
                 const std::string& path, const ExperimentConfig& cfg);
void EmitRecords(const std::vector<AoRecord>& r, OutputFormat format,
                 const std::string& path, const ExperimentConfig& cfg);

// The config as the JSON object stored in the sidecar.
std::string ConfigJson(const ExperimentConfig& cfg);

inline constexpr std::string_view kArtifactVersion = "0.1.0";

}  // namespace perturbopt

#endif  // PERTURBOPT_EXPERIMENTS_H_

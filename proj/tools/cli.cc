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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "perturbopt/ao.h"
#include "perturbopt/btl.h"
#include "perturbopt/btl_io.h"
#include "perturbopt/csv.h"
#include "perturbopt/error.h"
#include "perturbopt/expansions.h"
#include "perturbopt/experiments.h"
#include "perturbopt/finite_diff.h"
#include "perturbopt/linalg.h"
#include "perturbopt/objective.h"
#include "perturbopt/rng.h"

namespace perturbopt::cli {
namespace {

using Json = nlohmann::json;

const std::map<std::string, PenaltySpec::Kind> kPenalties = {
    {"none", PenaltySpec::Kind::kNone},
    {"mean_shift", PenaltySpec::Kind::kMeanShift},
    {"ridge", PenaltySpec::Kind::kRidge},
};

PenaltySpec MakePenalty(const std::string& name, double gsq) {
  switch (kPenalties.at(name)) {
    case PenaltySpec::Kind::kNone:
      return PenaltySpec::None();
    case PenaltySpec::Kind::kMeanShift:
      return PenaltySpec::MeanShift(gsq);
    case PenaltySpec::Kind::kRidge:
      return PenaltySpec::Ridge(gsq);
  }
  return PenaltySpec::MeanShift(gsq);
}

// Flags shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool strict = false;
  std::string config;
};

void AddCommon(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed,
                  "Master seed; falls back to $PERTURBOPT_SEED")
      ->envname("PERTURBOPT_SEED");
  sub->add_option("--threads", c.threads,
                  "Worker threads, 0 for the machine parallelism");
  sub->add_flag("--strict", c.strict,
                "Exit 1 on non-convergence, failed replications or violated "
                "bounds");
  sub->add_option("--config", c.config,
                  "JSON object of flag values; explicit flags take precedence")
      ->check(CLI::ExistingFile);
}

// Fills options that were not given on the command line from the JSON
// object in `path`. Keys are long flag names; '_' and '-' are equivalent.
void ApplyConfig(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception&) {
    throw CLI::ValidationError("--config", path + " is not valid JSON");
  }
  if (!doc.is_object()) {
    throw CLI::ValidationError("--config", path + " must hold a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") {
      throw CLI::ValidationError("--config", "unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_array()) {
      for (const Json& v : value) {
        if (!text.empty()) text += ',';
        text += v.is_string() ? v.get<std::string>() : v.dump();
      }
    } else {
      text = value.dump();
    }
    opt->add_result(text);
    opt->run_callback();
  }
}

std::vector<std::size_t> ParseNList(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size()) {
      throw CLI::ValidationError("--n-list", "bad item count '" + item + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("--n-list", "empty list");
  return out;
}

EdgeRule ParseEdgeRule(const std::string& text) {
  if (text == "paper") return EdgeRule::Paper();
  std::size_t pos = 0;
  double p = 0.0;
  try {
    p = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    throw CLI::ValidationError("--p", "expected 'paper' or a probability");
  }
  return EdgeRule::Fixed(p);
}

// Opens `path` for writing, or returns `fallback` for "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary);
    Require(file_.is_open(), ErrorCode::kIoError, "cannot open " + path);
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }
  void Finish(const std::string& path) {
    stream_->flush();
    Require(stream_->good(), ErrorCode::kIoError, "write failed: " + path);
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

// Instance flags shared by `ao` and the studies.
struct InstanceFlags {
  std::string p = "paper";
  int comparisons = 1;
  double score_min = 0.0;
  double score_max = 2.0;
  std::string penalty = "mean_shift";
  double gsq = 1.0;
};

void AddInstanceFlags(CLI::App* sub, InstanceFlags& f) {
  sub->add_option("--p", f.p,
                  "Edge probability, or 'paper' for min(1, log(n)^3 / n)");
  sub->add_option("--comparisons", f.comparisons, "Comparisons per edge (L)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--score-min", f.score_min, "Lower end of the true scores");
  sub->add_option("--score-max", f.score_max, "Upper end of the true scores");
  sub->add_option("--penalty", f.penalty, "Penalty kind")
      ->check(CLI::IsMember({"none", "mean_shift", "ridge"}));
  sub->add_option("--gsq", f.gsq, "Penalty strength g^2");
}

ExperimentConfig BaseConfig(const Common& c, const InstanceFlags& f) {
  ExperimentConfig cfg;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.p_rule = ParseEdgeRule(f.p);
  cfg.comparisons = f.comparisons;
  cfg.score_min = f.score_min;
  cfg.score_max = f.score_max;
  cfg.penalty_kind = kPenalties.at(f.penalty);
  cfg.gsq = f.gsq;
  return cfg;
}

struct AoFlags {
  double gap = 1e-3;
  std::string gap_mode = "absolute";
  int steps = 20;
  double radius = 0.1;
  bool surrogate = false;
};

void AddAoFlags(CLI::App* sub, AoFlags& f) {
  sub->add_option("--gap", f.gap,
                  "Start distance: sup-norm size, or fraction of the "
                  "certified gap");
  sub->add_option("--gap-mode", f.gap_mode, "How --gap is read")
      ->check(CLI::IsMember({"absolute", "certified"}));
  sub->add_option("--steps", f.steps, "AO steps")->check(CLI::PositiveNumber);
  sub->add_option("--radius", f.radius,
                  "Local-set radius for the smoothness constants");
  sub->add_flag("--surrogate", f.surrogate,
                "Run on the quadratic surrogate with the Hessian frozen at "
                "the minimizer");
}

void ApplyAoFlags(const AoFlags& f, ExperimentConfig& cfg) {
  cfg.ao_gap = f.gap;
  cfg.ao_start = f.gap_mode == "absolute" ? AoStart::kAbsolute
                                          : AoStart::kCertifiedFraction;
  cfg.ao_steps = f.steps;
  cfg.ao_radius = f.radius;
  cfg.ao_quadratic_surrogate = f.surrogate;
}

struct StudyFlags {
  std::string n_list;
  int reps = 20;
  std::string out;
  std::string format = "csv";
};

void AddStudyFlags(CLI::App* sub, StudyFlags& f) {
  sub->add_option("--n-list", f.n_list, "Comma-separated item counts");
  sub->add_option("--reps", f.reps, "Replications per item count")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", f.out,
                  "Output path; a .meta.json sidecar is "
                  "written next to it");
  sub->add_option("--format", f.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

void PrintSummary(std::ostream& out, const std::vector<StudySummary>& s) {
  for (const StudySummary& row : s) {
    out << "n=" << row.n << " included=" << row.included
        << " excluded=" << row.excluded;
    for (const auto& [name, stat] : row.stats) {
      out << ' ' << name << "=" << FormatDouble(stat.mean) << "+-"
          << FormatDouble(stat.sd);
    }
    out << '\n';
  }
}

template <typename Record>
int FinishStudy(const StudyResult<Record>& res, const StudyFlags& f,
                const ExperimentConfig& cfg, const Common& c, std::ostream& out,
                std::ostream& err) {
  const OutputFormat format =
      f.format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  EmitRecords(res.records, format, f.out, cfg);
  PrintSummary(out, SummarizeStudy(res.records));
  std::size_t failed = 0;
  for (std::size_t i = 0; i < res.details.size(); ++i) {
    if (res.details[i].failure.empty()) continue;
    ++failed;
    err << "n=" << res.records[i].n << " rep=" << res.records[i].rep << ": "
        << res.details[i].failure << '\n';
  }
  out << "wrote " << res.records.size() << " records to " << f.out << '\n';
  return c.strict && failed > 0 ? kExitFailure : kExitOk;
}

int RunFit(const Common& c, const std::string& input,
           const std::string& penalty, double gsq, const std::string& solver,
           double tol, const std::string& path, std::ostream& out,
           std::ostream& err) {
  const BtlObservation obs = ReadObservationCsv(input).ToObservation();
  const SolveReport r = FitPenalizedMle(
      obs, MakePenalty(penalty, gsq),
      solver == "newton" ? MleSolver::kNewton : MleSolver::kCoordinate, tol);
  if (r.status == SolveStatus::kNoMinimizer) {
    err << "error: the penalized MLE does not exist for these outcomes\n";
    return kExitFailure;
  }
  if (!SolveSucceeded(r, tol)) {
    err << "warning: not converged after " << r.iterations
        << " iterations (gradient " << FormatDouble(r.final_grad_supnorm)
        << ")\n";
    if (c.strict) return kExitFailure;
  }
  Output o(path, out);
  WriteScoresCsv(o.get(), r.argmin);
  o.Finish(path);
  return kExitOk;
}

int RunDiagnose(const Common& c, const std::string& input,
                const std::string& truth_path, const std::string& penalty_name,
                double gsq, const std::string& path, std::ostream& out,
                std::ostream& err) {
  const BtlObservation obs = ReadObservationCsv(input).ToObservation();
  const ScoreVector truth = ReadScoresCsv(truth_path);
  Require(truth.size() == obs.graph().n(), ErrorCode::kDimensionMismatch,
          "truth has " + std::to_string(truth.size()) + " items, expected " +
              std::to_string(obs.graph().n()));
  const PenaltySpec penalty = MakePenalty(penalty_name, gsq);
  const auto expected =
      MakeBtlObjective(obs, penalty, BtlMode::kExpected, truth);
  const Vector joint = SolveJointMinimizer(*expected, truth.values());
  const Vector a = NoiseGradient(obs, truth);
  const SymMatrix f = expected->Hessian(joint);
  const MetricTensor d = MetricTensor::SqrtDiagonalOf(f);
  const double rho = RhoDual(f, d).exact;
  const double r_inf =
      rho < 1.0 ? std::sqrt(2.0) * NormInf(d.ApplyInverse(a)) / (1.0 - rho)
                : 0.0;
  const ConditionConstants constants =
      BtlConditionConstants(obs.graph(), penalty, ScoreVector(joint),
                            Radii::Uniform(r_inf), d, NormTag::kLInf)
          .upper;
  const SupExpansionResult res =
      CheckLinearSupExpansion(*expected, a, constants, d, joint);
  Output o(path, out);
  WriteDiagnosticsCsv(o.get(), res.diagnostics);
  o.get() << '\n';
  WriteResidualCsv(o.get(), res.reports);
  o.Finish(path);
  bool violated = false;
  for (const ResidualReport& r : res.reports) {
    if (r.asserted && !r.holds) {
      violated = true;
      err << "warning: bound " << r.variant << " violated\n";
    }
  }
  return c.strict && violated ? kExitFailure : kExitOk;
}

int RunAo(const Common& c, const InstanceFlags& inst, const AoFlags& flags,
          std::size_t n, int rep, const std::string& path, std::ostream& out,
          std::ostream& err) {
  ExperimentConfig cfg = BaseConfig(c, inst);
  ApplyAoFlags(flags, cfg);
  cfg.n_list = {n};
  cfg.Validate();
  ReplicationDetail detail;
  AoTrace trace;
  const AoRecord r = RunAoReplication(cfg, n, rep, &detail, &trace);
  if (!detail.failure.empty()) {
    err << "error: " << detail.failure << '\n';
    return kExitFailure;
  }
  out << "seed=" << r.seed << " steps=" << r.steps
      << " ppT=" << FormatDouble(r.ppt) << " rate=" << FormatDouble(r.rate)
      << " cert_ok=" << (r.cert_ok ? 1 : 0)
      << " start_gap=" << FormatDouble(detail.start_gap)
      << " max_certified_gap=" << FormatDouble(detail.max_certified_gap)
      << " contraction_holds=" << (detail.contraction_holds ? 1 : 0)
      << " eps_holds=" << (detail.eps_holds ? 1 : 0) << '\n';
  if (!path.empty()) {
    Output o(path, out);
    WriteTraceCsv(o.get(), trace);
    o.Finish(path);
  }
  const bool ok = r.cert_ok && detail.contraction_holds && detail.eps_holds;
  if (!ok) err << "warning: certificate or step contraction check failed\n";
  return c.strict && !ok ? kExitFailure : kExitOk;
}

int RunSelftestCommand(const Common& c, std::ostream& out) {
  bool all = true;
  for (const SelftestCheck& check : RunSelftest(c.seed)) {
    out << (check.ok ? "PASS " : "FAIL ") << check.name << ": " << check.detail
        << '\n';
    all = all && check.ok;
  }
  return all ? kExitOk : kExitFailure;
}

// Random symmetric positive definite matrix with condition number <= 10.
SymMatrix RandomSpd(std::size_t n, Rng& rng) {
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g(i, j) = rng.Normal();
  }
  Matrix a = MatTMul(g, g);
  const double shift = 0.1 * a.NormInf() + 1.0;
  for (std::size_t i = 0; i < n; ++i) a(i, i) += shift;
  return SymMatrix(a);
}

SelftestCheck Check(std::string name, bool ok, double value) {
  return {std::move(name), ok, FormatDouble(value)};
}

}  // namespace

std::vector<SelftestCheck> RunSelftest(std::uint64_t seed) {
  std::vector<SelftestCheck> out;
  Rng rng(SplitMix64(seed));

  // Derivatives of a small penalized BTL objective.
  {
    const ComparisonGraph g(3, {{0, 1, 2}, {0, 2, 1}, {1, 2, 3}});
    const BtlObservation obs(g, {1.0, 0.0, 2.0});
    const auto f =
        MakeBtlObjective(obs, PenaltySpec::MeanShift(1.0), BtlMode::kEmpirical);
    const Vector x = {0.3, -0.2, 0.5};
    const FiniteDiffReport r = FiniteDiffCheck(*f, x, seed);
    const double worst = std::max({r.grad_err, r.hess_err, r.third_err});
    out.push_back(Check("btl_finite_differences", worst <= 1e-4, worst));
  }

  // Alternating optimization on a quadratic follows a_t = P P^T a_{t-1}.
  {
    const SymMatrix h = RandomSpd(6, rng);
    Vector m(6);
    for (double& v : m) v = rng.Normal();
    const QuadraticObjective q(m, h);
    const BlockSplit split = BlockSplit::Halves(6);
    const double dev = QuadAoIdentityCheck(q, split, Vector{1.0, -1.0, 0.5}, 5);
    out.push_back(Check("quadratic_ao_identity", dev <= 1e-8, dev));
  }

  // Sup-norm Neumann bounds for a diagonally dominant B.
  {
    int violations = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 5;
      Matrix b = Matrix::Identity(n);
      const double rho = rng.Uniform(0.05, 0.9);
      for (std::size_t i = 0; i < n; ++i) {
        Vector row(n, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          row[j] = rng.Uniform(-1.0, 1.0);
          sum += std::abs(row[j]);
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) b(i, j) = -rho * row[j] / sum;
        }
      }
      Vector u(n);
      for (double& v : u) v = rng.Normal();
      if (!NeumannSupBounds(b, u).AllHold()) ++violations;
    }
    out.push_back(Check("neumann_sup_bounds", violations == 0, violations));
  }

  // The sup-norm operator norm against plain enumeration.
  {
    Matrix ftn(3, 6);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 6; ++j) ftn(i, j) = rng.Normal();
    }
    const MetricTensor d = MetricTensor::Diagonal({1.0, 2.0, 0.5});
    const MetricTensor h =
        MetricTensor::Diagonal({1.0, 1.5, 0.7, 2.0, 1.2, 0.9});
    const double fast = RhoStar(ftn, d, h, NormTag::kLInf).value;
    double brute = 0.0;
    for (unsigned mask = 0; mask < 64; ++mask) {
      Vector z(6);
      for (std::size_t k = 0; k < 6; ++k) {
        z[k] = ((mask >> k) & 1u) ? 1.0 : -1.0;
      }
      brute = std::max(brute,
                       Norm2(d.ApplyInverse(MatVec(ftn, h.ApplyInverse(z)))));
    }
    const double diff = std::abs(fast - brute);
    out.push_back(Check("rho_star_sign_search", diff <= 1e-12, diff));
  }

  // The unpenalized Fisher matrix annihilates the constant vector.
  {
    const ComparisonGraph g(4, {{0, 1, 1}, {1, 2, 2}, {2, 3, 1}, {0, 3, 3}});
    const SymMatrix f =
        BtlFisher(g, PenaltySpec::None(), Vector{0.1, -0.4, 0.9, 0.0});
    const double resid = NormInf(MatVec(f, Vector(4, 1.0)));
    out.push_back(Check("fisher_null_vector", resid <= 1e-10, resid));
  }

  // Derived constants at unit smoothness and r_inf = 1/4.
  {
    ConditionConstants c;
    c.tau3 = c.d12 = c.d21 = 1.0;
    c.norm = NormTag::kLInf;
    c.radii = Radii::Uniform(0.25);
    const ExpansionDiagnostics d =
        DerivedConstants(1.0 - 1.0 / std::sqrt(2.0), c, Flavor::kSupNorm);
    const bool ok = std::abs(d.delta_nano - 1.37) <= 0.01 &&
                    std::abs(d.delta_infty - 12.0) <= 0.1;
    out.push_back(
        {"derived_constants", ok,
         FormatDouble(d.delta_nano) + " " + FormatDouble(d.delta_infty)});
  }

  // Two items with one win each are tied at zero.
  {
    const BtlObservation obs(ComparisonGraph(2, {{0, 1, 2}}), {1.0});
    const SolveReport r = FitPenalizedMle(obs, PenaltySpec::MeanShift(1.0));
    const double err = NormInf(r.argmin);
    out.push_back(Check("symmetric_fit", r.converged && err <= 1e-8, err));
  }

  // A linear shift of a quadratic moves the minimizer by exactly -F^{-1}A.
  {
    const SymMatrix h = RandomSpd(4, rng);
    const QuadraticObjective q(Vector(4, 0.0), h);
    ConditionConstants zero;
    zero.norm = NormTag::kLInf;
    zero.radii = Radii::Uniform(1e6);
    const SupExpansionResult res = CheckLinearSupExpansion(
        q, Vector{0.1, -0.2, 0.05, 0.3}, zero, MetricTensor::SqrtDiagonalOf(h));
    const double rem = res.Report("iii").remainder;
    out.push_back(Check("quadratic_expansion_exact", rem <= 1e-10, rem));
  }
  return out;
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{
      "Perturbation expansions, alternating optimization and BTL "
      "ranking experiments"};
  app.name("perturbopt");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::map<CLI::App*, Common> common;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, common[sub]);
    return sub;
  };

  // fit
  std::string fit_input, fit_penalty = "mean_shift", fit_solver = "newton",
                         fit_out = "-";
  double fit_gsq = 1.0;
  double fit_tol = 1e-10;
  CLI::App* fit = add("fit", "Fit the penalized maximum likelihood scores");
  fit->add_option("--input", fit_input, "Observation CSV j,m,N,S")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--penalty", fit_penalty, "Penalty kind")
      ->check(CLI::IsMember({"none", "mean_shift", "ridge"}));
  fit->add_option("--gsq", fit_gsq, "Penalty strength g^2");
  fit->add_option("--solver", fit_solver, "Minimizer")
      ->check(CLI::IsMember({"newton", "coordinate"}));
  fit->add_option("--tol", fit_tol, "Gradient sup-norm tolerance")
      ->check(CLI::PositiveNumber);
  fit->add_option("--out", fit_out, "Scores CSV item,score; '-' for stdout");

  // diagnose
  std::string dg_input, dg_truth, dg_penalty = "mean_shift", dg_out = "-";
  double dg_gsq = 1.0;
  CLI::App* diagnose =
      add("diagnose", "Check the sup-norm expansion of the MLE around truth");
  diagnose->add_option("--input", dg_input, "Observation CSV j,m,N,S")
      ->required()
      ->check(CLI::ExistingFile);
  diagnose->add_option("--truth", dg_truth, "True scores CSV item,score")
      ->required()
      ->check(CLI::ExistingFile);
  diagnose->add_option("--penalty", dg_penalty, "Penalty kind")
      ->check(CLI::IsMember({"none", "mean_shift", "ridge"}));
  diagnose->add_option("--gsq", dg_gsq, "Penalty strength g^2");
  diagnose->add_option("--out", dg_out,
                       "Diagnostics and residual CSV; '-' for stdout");

  // ao
  InstanceFlags ao_inst;
  AoFlags ao_flags;
  std::size_t ao_n = 20;
  int ao_rep = 0;
  std::string ao_out;
  CLI::App* ao = add("ao", "Run one traced alternating optimization instance");
  ao->add_option("--n", ao_n, "Number of items")->check(CLI::Range(2, 100000));
  ao->add_option("--rep", ao_rep, "Replication index within the seed")
      ->check(CLI::NonNegativeNumber);
  ao->add_option("--out", ao_out, "Trace CSV; omitted when empty");
  AddInstanceFlags(ao, ao_inst);
  AddAoFlags(ao, ao_flags);

  // studies
  struct Study {
    InstanceFlags inst;
    StudyFlags flags;
  };
  Study rho_study{{}, {"100,200,400", 20, "rho.csv", "csv"}};
  Study exp_study{{}, {"100", 20, "expansion.csv", "csv"}};
  Study ao_study{{}, {"20", 20, "ao.csv", "csv"}};
  std::string which_rho = "both";
  std::string exp_mode = "empirical";
  AoFlags study_ao_flags;

  CLI::App* srho = add("study-rho", "Dual-norm study on random graphs");
  AddStudyFlags(srho, rho_study.flags);
  AddInstanceFlags(srho, rho_study.inst);
  srho->add_option("--which-rho", which_rho, "Dual norms to record")
      ->check(CLI::IsMember({"exact", "l2", "both"}));

  CLI::App* sexp =
      add("study-expansion", "Leading term and remainder of the MLE");
  AddStudyFlags(sexp, exp_study.flags);
  AddInstanceFlags(sexp, exp_study.inst);
  sexp->add_option("--mode", exp_mode, "Observed or expected outcomes")
      ->check(CLI::IsMember({"empirical", "expected"}));

  CLI::App* sao = add("study-ao", "Alternating optimization rates");
  AddStudyFlags(sao, ao_study.flags);
  AddInstanceFlags(sao, ao_study.inst);
  AddAoFlags(sao, study_ao_flags);

  CLI::App* selftest = add("selftest", "Run invariant checks on tiny inputs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  CLI::App* active = nullptr;
  try {
    app.parse(reversed);
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    if (!common[active].config.empty()) {
      ApplyConfig(active, common[active].config);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const Common& c = common[active];

  try {
    if (active == fit) {
      return RunFit(c, fit_input, fit_penalty, fit_gsq, fit_solver, fit_tol,
                    fit_out, out, err);
    }
    if (active == diagnose) {
      return RunDiagnose(c, dg_input, dg_truth, dg_penalty, dg_gsq, dg_out, out,
                         err);
    }
    if (active == ao) {
      return RunAo(c, ao_inst, ao_flags, ao_n, ao_rep, ao_out, out, err);
    }
    if (active == selftest) return RunSelftestCommand(c, out);

    if (active == srho) {
      ExperimentConfig cfg = BaseConfig(c, rho_study.inst);
      cfg.n_list = ParseNList(rho_study.flags.n_list);
      cfg.reps = rho_study.flags.reps;
      cfg.which_rho = which_rho == "exact" ? WhichRho::kExact
                      : which_rho == "l2"  ? WhichRho::kL2
                                           : WhichRho::kBoth;
      return FinishStudy(RunRhoStudy(cfg), rho_study.flags, cfg, c, out, err);
    }
    if (active == sexp) {
      ExperimentConfig cfg = BaseConfig(c, exp_study.inst);
      cfg.n_list = ParseNList(exp_study.flags.n_list);
      cfg.reps = exp_study.flags.reps;
      cfg.mode =
          exp_mode == "expected" ? BtlMode::kExpected : BtlMode::kEmpirical;
      return FinishStudy(RunExpansionStudy(cfg), exp_study.flags, cfg, c, out,
                         err);
    }
    ExperimentConfig cfg = BaseConfig(c, ao_study.inst);
    cfg.n_list = ParseNList(ao_study.flags.n_list);
    cfg.reps = ao_study.flags.reps;
    ApplyAoFlags(study_ao_flags, cfg);
    return FinishStudy(RunAoStudy(cfg), ao_study.flags, cfg, c, out, err);
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace perturbopt::cli

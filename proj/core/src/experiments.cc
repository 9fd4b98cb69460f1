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

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <type_traits>

#include "json.hpp"
#include "perturbopt/ao.h"
#include "perturbopt/csv.h"
#include "perturbopt/error.h"
#include "perturbopt/expansions.h"
#include "perturbopt/linalg.h"
#include "perturbopt/rng.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {
namespace {

using Json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Field visitors fixing the column order of each schema.
template <typename R, typename F>
void VisitCommon(R& r, F&& f) {
  f("n", r.n);
  f("rep", r.rep);
  f("seed", r.seed);
}

template <typename R, typename F>
void VisitFields(R& r, F&& f) {
  using T = std::remove_const_t<R>;
  VisitCommon(r, f);
  if constexpr (std::is_same_v<T, RhoRecord>) {
    f("rho_dual", r.rho_dual);
    f("rho_dual_l2", r.rho_dual_l2);
    f("connected", r.connected);
    f("diag_dom_margin", r.diag_dom_margin);
  } else if constexpr (std::is_same_v<T, ExpansionRecord>) {
    f("lead_fish", r.lead_fish);
    f("lead_diag", r.lead_diag);
    f("rem_fish", r.rem_fish);
    f("rem_diag", r.rem_diag);
    f("converged", r.converged);
  } else {
    f("ppT", r.ppt);
    f("rate", r.rate);
    f("cert_ok", r.cert_ok);
    f("steps", r.steps);
  }
}

template <typename R>
std::vector<std::string> ColumnNames() {
  std::vector<std::string> names = {"study"};
  R r;
  VisitFields(r, [&](const char* name, auto&) { names.emplace_back(name); });
  return names;
}

template <typename V>
std::string CsvValue(const V& v) {
  if constexpr (std::is_same_v<V, bool>) {
    return v ? "1" : "0";
  } else if constexpr (std::is_floating_point_v<V>) {
    return FormatDouble(v);
  } else {
    return std::to_string(v);
  }
}

template <typename V>
std::string JsonValue(const V& v) {
  if constexpr (std::is_same_v<V, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<V>) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    return FormatDouble(v);
  } else {
    return std::to_string(v);
  }
}

template <typename R>
void Write(std::ostream& out, const std::vector<R>& records,
           OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    const auto names = ColumnNames<R>();
    for (std::size_t i = 0; i < names.size(); ++i) {
      out << (i ? "," : "") << names[i];
    }
    out << '\n';
    for (const R& r : records) {
      out << R::kStudy;
      VisitFields(
          r, [&](const char*, const auto& v) { out << ',' << CsvValue(v); });
      out << '\n';
    }
    return;
  }
  if (records.empty()) {
    out << "[]\n";
    return;
  }
  out << "[\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << "  {\"study\": \"" << R::kStudy << '"';
    VisitFields(records[i], [&](const char* name, const auto& v) {
      out << ", \"" << name << "\": " << JsonValue(v);
    });
    out << (i + 1 < records.size() ? "},\n" : "}\n");
  }
  out << "]\n";
}

[[noreturn]] void Malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kIoError,
              "line " + std::to_string(line) + ": " + what);
}

template <typename V>
bool ParseToken(const std::string& s, V& out) {
  if constexpr (std::is_same_v<V, bool>) {
    if (s == "1" || s == "true") {
      out = true;
    } else if (s == "0" || s == "false") {
      out = false;
    } else {
      return false;
    }
    return true;
  } else if constexpr (std::is_floating_point_v<V>) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
  } else {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
  }
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename R>
std::vector<R> ParseCsv(std::istream& in) {
  const auto names = ColumnNames<R>();
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) Malformed(lineno, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (SplitCsv(line) != names) Malformed(lineno, "unexpected header");
  std::vector<R> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != names.size()) Malformed(lineno, "wrong column count");
    if (cells[0] != R::kStudy) Malformed(lineno, "wrong study id");
    R r;
    std::size_t col = 1;
    VisitFields(r, [&](const char* name, auto& v) {
      if (!ParseToken(cells[col++], v)) {
        Malformed(lineno, std::string("bad value for ") + name);
      }
    });
    out.push_back(r);
  }
  return out;
}

template <typename V>
bool FromJson(const Json& j, V& out) {
  if constexpr (std::is_same_v<V, bool>) {
    if (!j.is_boolean()) return false;
    out = j.get<bool>();
  } else if constexpr (std::is_floating_point_v<V>) {
    if (j.is_null()) {
      out = kNaN;
    } else if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s != "inf" && s != "-inf") return false;
      out = s == "inf" ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    } else if (j.is_number()) {
      out = j.get<double>();
    } else {
      return false;
    }
  } else {
    if (!j.is_number_integer()) return false;
    out = j.get<V>();
  }
  return true;
}

template <typename R>
std::vector<R> ParseJson(std::istream& in) {
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIoError, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kIoError, "expected an array");
  std::vector<R> out;
  std::size_t index = 0;
  for (const Json& obj : doc) {
    ++index;
    if (!obj.is_object() || !obj.contains("study") ||
        obj["study"] != std::string(R::kStudy)) {
      Malformed(index, "expected a record of study " + std::string(R::kStudy));
    }
    R r;
    VisitFields(r, [&](const char* name, auto& v) {
      if (!obj.contains(name) || !FromJson(obj[name], v)) {
        Malformed(index, std::string("bad value for ") + name);
      }
    });
    out.push_back(r);
  }
  return out;
}

template <typename R>
void Emit(const std::vector<R>& records, OutputFormat format,
          const std::string& path, const ExperimentConfig& cfg) {
  {
    std::ofstream out(path, std::ios::binary);
    Require(out.is_open(), ErrorCode::kIoError, "cannot open " + path);
    Write(out, records, format);
    Require(out.good(), ErrorCode::kIoError, "write failed: " + path);
  }
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
  Json meta;
  meta["artifact_version"] = std::string(kArtifactVersion);
  meta["study"] = std::string(R::kStudy);
  meta["format"] = format == OutputFormat::kCsv ? "csv" : "json";
  meta["records"] = records.size();
  meta["seed"] = cfg.seed;
  meta["config"] = Json::parse(ConfigJson(cfg));
  meta["created_utc"] = stamp;
  const std::string meta_path = path + ".meta.json";
  std::ofstream out(meta_path, std::ios::binary);
  Require(out.is_open(), ErrorCode::kIoError, "cannot open " + meta_path);
  out << meta.dump(2) << '\n';
  Require(out.good(), ErrorCode::kIoError, "write failed: " + meta_path);
}

// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void ParallelFor(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned workers = threads ? threads : std::thread::hardware_concurrency();
  workers =
      std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

template <typename R, typename Run>
StudyResult<R> RunStudy(const ExperimentConfig& cfg, Run&& run) {
  cfg.Validate();
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t n : cfg.n_list) {
    for (int rep = 0; rep < cfg.reps; ++rep) tasks.emplace_back(n, rep);
  }
  StudyResult<R> out;
  out.records.resize(tasks.size());
  out.details.resize(tasks.size());
  ParallelFor(tasks.size(), cfg.threads, [&](std::size_t i) {
    out.records[i] = run(cfg, tasks[i].first, tasks[i].second, &out.details[i]);
  });
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::pair(out.records[a].n, out.records[a].rep) <
                            std::pair(out.records[b].n, out.records[b].rep);
                   });
  StudyResult<R> sorted;
  for (std::size_t i : order) {
    sorted.records.push_back(out.records[i]);
    sorted.details.push_back(std::move(out.details[i]));
  }
  return sorted;
}

// Times a replication body and turns library errors into a recorded failure.
template <typename Body>
void Guarded(ReplicationDetail* detail, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const Error& e) {
    if (detail) detail->failure = e.what();
  }
  if (detail) {
    detail->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  }
}

void Fail(ReplicationDetail* detail, const std::string& why) {
  if (detail) detail->failure = why;
}

struct Instance {
  ComparisonGraph graph;
  ScoreVector truth;
  BtlObservation obs;
};

// Graph, centered truth and outcomes drawn in that order from the
// replication substream.
Instance SampleInstance(const ExperimentConfig& cfg, std::size_t n,
                        std::uint64_t seed) {
  Rng rng(seed);
  ComparisonGraph graph =
      SampleErGraph(n, cfg.p_rule.Probability(n), cfg.comparisons, rng);
  Vector u = SampleScores(n, cfg.score_min, cfg.score_max, rng).values();
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / n;
  for (double& v : u) v -= mean;
  ScoreVector truth(std::move(u));
  BtlObservation obs = cfg.mode == BtlMode::kExpected
                           ? ExpectedOutcomes(graph, truth)
                           : SampleOutcomes(graph, truth, rng);
  return {std::move(graph), std::move(truth), std::move(obs)};
}

void AddStat(StudySummary& s, const char* name,
             const std::vector<double>& values) {
  s.stats.emplace_back(name, Summarize(values));
}

// The CSV cells round-trip exactly and print NaN as "nan".
template <typename R>
bool SameFields(const R& a, const R& b) {
  std::vector<std::string> ca;
  std::vector<std::string> cb;
  VisitFields(a,
              [&](const char*, const auto& v) { ca.push_back(CsvValue(v)); });
  VisitFields(b,
              [&](const char*, const auto& v) { cb.push_back(CsvValue(v)); });
  return ca == cb;
}

template <typename R, typename Include, typename Fill>
std::vector<StudySummary> SummarizeBy(const std::vector<R>& records,
                                      Include&& include, Fill&& fill) {
  std::vector<std::size_t> ns;
  for (const R& r : records) {
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  }
  std::sort(ns.begin(), ns.end());
  std::vector<StudySummary> out;
  for (std::size_t n : ns) {
    StudySummary s;
    s.n = n;
    std::vector<R> kept;
    for (const R& r : records) {
      if (r.n != n) continue;
      if (include(r)) {
        kept.push_back(r);
      } else {
        ++s.excluded;
      }
    }
    s.included = kept.size();
    fill(s, kept);
    out.push_back(std::move(s));
  }
  return out;
}

template <typename R, typename Get>
std::vector<double> Column(const std::vector<R>& records, Get&& get) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const R& r : records) out.push_back(get(r));
  return out;
}

}  // namespace

bool operator==(const RhoRecord& a, const RhoRecord& b) {
  return SameFields(a, b);
}
bool operator==(const ExpansionRecord& a, const ExpansionRecord& b) {
  return SameFields(a, b);
}
bool operator==(const AoRecord& a, const AoRecord& b) {
  return SameFields(a, b);
}

double EdgeRule::Probability(std::size_t n) const {
  if (kind == Kind::kFixed) return p;
  const double l = std::log(static_cast<double>(n));
  return std::min(1.0, l * l * l / static_cast<double>(n));
}

PenaltySpec ExperimentConfig::Penalty() const {
  switch (penalty_kind) {
    case PenaltySpec::Kind::kNone:
      return PenaltySpec::None();
    case PenaltySpec::Kind::kMeanShift:
      return PenaltySpec::MeanShift(gsq);
    case PenaltySpec::Kind::kRidge:
      return PenaltySpec::Ridge(gsq);
  }
  return PenaltySpec::MeanShift(gsq);
}

void ExperimentConfig::Validate() const {
  const auto bad = ErrorCode::kInvalidArgument;
  Require(!n_list.empty(), bad, "n_list is empty");
  for (std::size_t n : n_list) Require(n >= 2, bad, "n must be at least 2");
  Require(reps >= 1, bad, "reps must be at least 1");
  Require(comparisons >= 1, bad, "comparisons per edge must be at least 1");
  Require(std::isfinite(score_min) && std::isfinite(score_max) &&
              score_min <= score_max,
          bad, "score range must satisfy min <= max");
  if (p_rule.kind == EdgeRule::Kind::kFixed) {
    Require(p_rule.p > 0.0 && p_rule.p <= 1.0, bad, "p must lie in (0, 1]");
  }
  Require(std::isfinite(gsq) && gsq >= 0.0, bad, "g^2 must be nonnegative");
  Require(penalty_kind == PenaltySpec::Kind::kNone || gsq > 0.0, bad,
          "a penalty needs g^2 > 0");
  Require(ao_steps >= 1, bad, "ao_steps must be at least 1");
  Require(std::isfinite(ao_gap) && ao_gap >= 0.0, bad,
          "ao_gap must be nonnegative");
  Require(ao_start == AoStart::kAbsolute || ao_gap <= 1.0, bad,
          "a certified fraction must lie in [0, 1]");
  Require(std::isfinite(ao_radius) && ao_radius > 0.0, bad,
          "ao_radius must be positive");
}

RhoRecord RunRhoReplication(const ExperimentConfig& cfg, std::size_t n, int rep,
                            ReplicationDetail* detail) {
  RhoRecord r;
  r.n = n;
  r.rep = rep;
  r.seed = SubstreamSeed(cfg.seed, n, static_cast<std::uint64_t>(rep));
  r.rho_dual = r.rho_dual_l2 = r.diag_dom_margin = kNaN;
  Guarded(detail, [&] {
    const Instance inst = SampleInstance(cfg, n, r.seed);
    r.connected = inst.graph.connected();
    const SymMatrix f =
        BtlFisher(inst.graph, cfg.Penalty(), inst.truth.values());
    const RhoDualResult rd = RhoDual(f, MetricTensor::SqrtDiagonalOf(f));
    if (cfg.which_rho != WhichRho::kL2) r.rho_dual = rd.exact;
    if (cfg.which_rho != WhichRho::kExact) r.rho_dual_l2 = rd.l2;
    r.diag_dom_margin = DiagonalDominanceMargin(f);
    if (!r.connected) Fail(detail, "comparison graph is disconnected");
  });
  return r;
}

ExpansionRecord RunExpansionReplication(const ExperimentConfig& cfg,
                                        std::size_t n, int rep,
                                        ReplicationDetail* detail) {
  ExpansionRecord r;
  r.n = n;
  r.rep = rep;
  r.seed = SubstreamSeed(cfg.seed, n, static_cast<std::uint64_t>(rep));
  r.lead_fish = r.lead_diag = r.rem_fish = r.rem_diag = kNaN;
  Guarded(detail, [&] {
    const Instance inst = SampleInstance(cfg, n, r.seed);
    const PenaltySpec penalty = cfg.Penalty();
    if (!inst.graph.connected()) {
      Fail(detail, "comparison graph is disconnected");
      return;
    }
    const SolveReport fit = FitPenalizedMle(
        inst.obs, penalty, MleSolver::kNewton, tol::kJointSolve);
    if (!SolveSucceeded(fit, tol::kJointSolve)) {
      Fail(detail, "penalized MLE did not converge");
      return;
    }
    const Vector& truth = inst.truth.values();
    const Vector a = NoiseGradient(inst.obs, inst.truth);
    const SymMatrix f = BtlFisher(inst.graph, penalty, truth);
    const Vector finv_a = SpdSolve(f, a);
    Vector dinv2_a(n);
    for (std::size_t j = 0; j < n; ++j) dinv2_a[j] = a[j] / f(j, j);
    const Vector err = Sub(fit.argmin, truth);
    r.lead_fish = NormInf(finv_a);
    r.lead_diag = NormInf(dinv2_a);
    r.rem_fish = NormInf(AddV(err, finv_a));
    r.rem_diag = NormInf(AddV(err, dinv2_a));
    r.converged = true;

    // The same expansion checked against its sup-norm bound.
    if (!detail) return;
    const MetricTensor d = MetricTensor::SqrtDiagonalOf(f);
    const double rho = RhoDual(f, d).exact;
    if (rho >= 1.0) return;
    const double r_inf =
        std::sqrt(2.0) * NormInf(d.ApplyInverse(a)) / (1.0 - rho);
    const ConditionConstants c =
        BtlConditionConstants(inst.graph, penalty, inst.truth,
                              Radii::Uniform(r_inf), d, NormTag::kLInf)
            .upper;
    const auto expected =
        MakeBtlObjective(inst.obs, penalty, BtlMode::kExpected, inst.truth);
    const SupExpansionResult res =
        CheckLinearSupExpansion(*expected, a, c, d, truth);
    const ResidualReport& iii = res.Report("iii");
    detail->iii_asserted = iii.asserted;
    detail->iii_holds = iii.holds;
    detail->iii_bound = iii.bound;
  });
  return r;
}

AoRecord RunAoReplication(const ExperimentConfig& cfg, std::size_t n, int rep,
                          ReplicationDetail* detail, AoTrace* trace_out) {
  AoRecord r;
  r.n = n;
  r.rep = rep;
  r.seed = SubstreamSeed(cfg.seed, n, static_cast<std::uint64_t>(rep));
  r.ppt = r.rate = kNaN;
  Guarded(detail, [&] {
    const Instance inst = SampleInstance(cfg, n, r.seed);
    const PenaltySpec penalty = cfg.Penalty();
    if (!MleExists(inst.obs, penalty)) {
      Fail(detail, "penalized MLE does not exist");
      return;
    }
    const auto f = MakeBtlObjective(inst.obs, penalty, cfg.mode, inst.truth);
    const Vector joint = SolveJointMinimizer(*f);
    const BlockSplit split = BlockSplit::Halves(n);
    const SymMatrix hess = f->Hessian(joint);
    const BlockHessian bh = BlockHessian::From(hess, split);
    const MetricTensor d = DominatedDiagonalMetric(bh.f_tt);
    const MetricTensor h = DominatedDiagonalMetric(bh.f_nn);

    Vector scale(n);
    for (std::size_t k = 0; k < split.p(); ++k) {
      scale[split.target()[k]] = d.diagonal()[k];
    }
    for (std::size_t k = 0; k < split.q(); ++k) {
      scale[split.nuisance()[k]] = h.diagonal()[k];
    }
    const ConditionConstants c =
        BtlConditionConstants(inst.graph, penalty, ScoreVector(joint),
                              Radii::Uniform(cfg.ao_radius),
                              MetricTensor::Diagonal(scale), NormTag::kL2,
                              split, r.seed)
            .upper;
    const double max_gap =
        MaxCertifiedGap(CertifyConvergence(bh, c, 0.0, d, h));

    // Start direction: the slowest AO mode for the surrogate, otherwise a
    // uniform draw from a stream separate from the instance.
    const Vector theta_star = split.Target(joint);
    Vector dir(split.p());
    if (cfg.ao_quadratic_surrogate) {
      const Contraction con = ContractionMatrix(bh);
      const EigenDecomposition eig =
          SymEig(SymMatrix(MatMul(con.p, con.p.Transpose())));
      dir = MatVec(PsdPower(bh.f_tt, PsdExponent::kInvSqrt),
                   eig.vectors.Column(split.p() - 1));
    } else {
      Rng rng(SplitMix64(r.seed));
      for (double& v : dir) v = rng.Uniform(-1.0, 1.0);
    }
    double size = cfg.ao_gap / NormInf(dir);
    if (cfg.ao_start == AoStart::kCertifiedFraction) {
      if (max_gap <= 0.0) {
        Fail(detail, "certificate holds for no start gap");
        return;
      }
      size = cfg.ao_gap * max_gap / Norm2(d.Apply(dir));
    }
    const Vector delta = Scale(dir, size);
    const Vector theta0 = AddV(theta_star, delta);
    const double gap = Norm2(d.Apply(delta));
    const AoCertificate cert = CertifyConvergence(bh, c, gap, d, h);

    AoOptions opts;
    opts.steps = cfg.ao_steps;
    opts.joint_minimizer = joint;
    const QuadraticObjective surrogate(joint, hess);
    const SmoothObjective& obj =
        cfg.ao_quadratic_surrogate
            ? static_cast<const SmoothObjective&>(surrogate)
            : *f;
    const AoTrace trace = AoRun(obj, split, theta0, opts);
    r.ppt = trace.ppt_norm;
    r.cert_ok = cert.holds();
    r.steps = static_cast<int>(trace.steps());
    if (trace_out) *trace_out = trace;
    r.rate = EstimateRate(trace);
    if (detail) {
      const StepContractionReport sc = VerifyStepContraction(trace, cert, d);
      detail->contraction_holds = sc.contraction_holds;
      detail->eps_holds = sc.eps_holds;
      detail->start_gap = gap;
      detail->max_certified_gap = max_gap;
    }
  });
  return r;
}

StudyResult<RhoRecord> RunRhoStudy(const ExperimentConfig& cfg) {
  return RunStudy<RhoRecord>(cfg, RunRhoReplication);
}

StudyResult<ExpansionRecord> RunExpansionStudy(const ExperimentConfig& cfg) {
  return RunStudy<ExpansionRecord>(cfg, RunExpansionReplication);
}

StudyResult<AoRecord> RunAoStudy(const ExperimentConfig& cfg) {
  return RunStudy<AoRecord>(
      cfg, [](const ExperimentConfig& c, std::size_t n, int rep,
              ReplicationDetail* d) { return RunAoReplication(c, n, rep, d); });
}

SummaryStat Summarize(const std::vector<double>& values) {
  SummaryStat s;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    ++s.count;
    sum += v;
  }
  if (s.count == 0) {
    s.mean = s.sd = kNaN;
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) {
    s.sd = kNaN;
    return s;
  }
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
  }
  s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  return s;
}

std::vector<StudySummary> SummarizeStudy(const std::vector<RhoRecord>& r) {
  return SummarizeBy(
      r,
      [](const RhoRecord& x) {
        return x.connected && !std::isnan(x.diag_dom_margin);
      },
      [](StudySummary& s, const std::vector<RhoRecord>& k) {
        AddStat(s, "rho_dual", Column(k, [](auto& x) { return x.rho_dual; }));
        AddStat(s, "rho_dual_l2",
                Column(k, [](auto& x) { return x.rho_dual_l2; }));
        AddStat(s, "diag_dom_margin",
                Column(k, [](auto& x) { return x.diag_dom_margin; }));
      });
}

std::vector<StudySummary> SummarizeStudy(
    const std::vector<ExpansionRecord>& r) {
  return SummarizeBy(
      r, [](const ExpansionRecord& x) { return x.converged; },
      [](StudySummary& s, const std::vector<ExpansionRecord>& k) {
        AddStat(s, "lead_fish", Column(k, [](auto& x) { return x.lead_fish; }));
        AddStat(s, "lead_diag", Column(k, [](auto& x) { return x.lead_diag; }));
        AddStat(s, "rem_fish", Column(k, [](auto& x) { return x.rem_fish; }));
        AddStat(s, "rem_diag", Column(k, [](auto& x) { return x.rem_diag; }));
      });
}

std::vector<StudySummary> SummarizeStudy(const std::vector<AoRecord>& r) {
  return SummarizeBy(
      r, [](const AoRecord& x) { return std::isfinite(x.rate); },
      [](StudySummary& s, const std::vector<AoRecord>& k) {
        AddStat(s, "ppT", Column(k, [](auto& x) { return x.ppt; }));
        AddStat(s, "rate", Column(k, [](auto& x) { return x.rate; }));
        AddStat(s, "cert_ok",
                Column(k, [](auto& x) { return x.cert_ok ? 1.0 : 0.0; }));
      });
}

void WriteRecords(std::ostream& out, const std::vector<RhoRecord>& r,
                  OutputFormat format) {
  Write(out, r, format);
}
void WriteRecords(std::ostream& out, const std::vector<ExpansionRecord>& r,
                  OutputFormat format) {
  Write(out, r, format);
}
void WriteRecords(std::ostream& out, const std::vector<AoRecord>& r,
                  OutputFormat format) {
  Write(out, r, format);
}

std::vector<RhoRecord> ParseRhoRecords(std::istream& in, OutputFormat format) {
  return format == OutputFormat::kCsv ? ParseCsv<RhoRecord>(in)
                                      : ParseJson<RhoRecord>(in);
}
std::vector<ExpansionRecord> ParseExpansionRecords(std::istream& in,
                                                   OutputFormat format) {
  return format == OutputFormat::kCsv ? ParseCsv<ExpansionRecord>(in)
                                      : ParseJson<ExpansionRecord>(in);
}
std::vector<AoRecord> ParseAoRecords(std::istream& in, OutputFormat format) {
  return format == OutputFormat::kCsv ? ParseCsv<AoRecord>(in)
                                      : ParseJson<AoRecord>(in);
}

void EmitRecords(const std::vector<RhoRecord>& r, OutputFormat format,
                 const std::string& path, const ExperimentConfig& cfg) {
  Emit(r, format, path, cfg);
}
void EmitRecords(const std::vector<ExpansionRecord>& r, OutputFormat format,
                 const std::string& path, const ExperimentConfig& cfg) {
  Emit(r, format, path, cfg);
}
void EmitRecords(const std::vector<AoRecord>& r, OutputFormat format,
                 const std::string& path, const ExperimentConfig& cfg) {
  Emit(r, format, path, cfg);
}

std::string ConfigJson(const ExperimentConfig& cfg) {
  Json j;
  j["n_list"] = cfg.n_list;
  if (cfg.p_rule.kind == EdgeRule::Kind::kPaper) {
    j["p_rule"] = "paper";
  } else {
    j["p_rule"] = {{"fixed", cfg.p_rule.p}};
  }
  j["comparisons"] = cfg.comparisons;
  j["score_range"] = {cfg.score_min, cfg.score_max};
  switch (cfg.penalty_kind) {
    case PenaltySpec::Kind::kNone:
      j["penalty"] = "none";
      break;
    case PenaltySpec::Kind::kMeanShift:
      j["penalty"] = "mean_shift";
      break;
    case PenaltySpec::Kind::kRidge:
      j["penalty"] = "ridge";
      break;
  }
  j["gsq"] = cfg.gsq;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["which_rho"] = cfg.which_rho == WhichRho::kExact ? "exact"
                   : cfg.which_rho == WhichRho::kL2  ? "l2"
                                                     : "both";
  j["threads"] = cfg.threads;
  j["mode"] = cfg.mode == BtlMode::kExpected ? "expected" : "empirical";
  j["ao_steps"] = cfg.ao_steps;
  j["ao_start"] =
      cfg.ao_start == AoStart::kAbsolute ? "absolute" : "certified_fraction";
  j["ao_gap"] = cfg.ao_gap;
  j["ao_radius"] = cfg.ao_radius;
  j["ao_quadratic_surrogate"] = cfg.ao_quadratic_surrogate;
  return j.dump();
}

}  // namespace perturbopt

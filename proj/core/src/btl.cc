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

#include "perturbopt/btl.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "perturbopt/error.h"
#include "perturbopt/linalg.h"
#include "perturbopt/tolerances.h"

namespace perturbopt {
namespace {

// Location of the maximum of |phi'''| on the positive half-line.
const double kPhi3PeakArg = std::log(2.0 + std::sqrt(3.0));
const double kPhi3Peak = 1.0 / (6.0 * std::sqrt(3.0));

// Cells used to resolve the coupled sup over u_j in the sup-norm constants.
constexpr std::size_t kMaxGridCells = 4096;

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void Unite(std::size_t a, std::size_t b) { parent_[Find(a)] = Find(b); }

 private:
  std::vector<std::size_t> parent_;
};

void RequireDim(std::size_t got, std::size_t want, const char* what) {
  Require(got == want, ErrorCode::kDimensionMismatch,
          std::string(what) + ": expected dimension " + std::to_string(want) +
              ", got " + std::to_string(got));
}

double PenaltyValue(const PenaltySpec& pen, std::span<const double> x) {
  switch (pen.kind) {
    case PenaltySpec::Kind::kNone:
      return 0.0;
    case PenaltySpec::Kind::kMeanShift: {
      const double s = std::accumulate(x.begin(), x.end(), 0.0);
      return 0.5 * pen.gsq * s * s / static_cast<double>(x.size());
    }
    case PenaltySpec::Kind::kRidge:
      return 0.5 * pen.gsq * Dot(x, x);
  }
  return 0.0;
}

// <nabla^3 L(x), a (x) b (x) c>; the quadratic penalty contributes nothing.
double EdgeThird(const ComparisonGraph& graph, std::span<const double> x,
                 std::span<const double> a, std::span<const double> b,
                 std::span<const double> c) {
  double sum = 0.0;
  for (const Edge& e : graph.edges()) {
    sum += e.count * Phi3(x[e.j] - x[e.m]) * (a[e.j] - a[e.m]) *
           (b[e.j] - b[e.m]) * (c[e.j] - c[e.m]);
  }
  return sum;
}

// Everything reachable from item 0 along arcs, forward or reversed.
bool ReachesAll(const std::vector<std::vector<std::size_t>>& arcs) {
  std::vector<char> seen(arcs.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : arcs[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == arcs.size();
}

BtlConstantsReport SupNormConstants(const ComparisonGraph& graph,
                                    const ScoreVector& center, double r,
                                    const Vector& d) {
  const std::size_t n = graph.n();
  ConditionConstants out;
  out.norm = NormTag::kLInf;
  out.radii = Radii::Uniform(r);
  out.method = EstimateMethod::kExact;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& inc = graph.incident(j);
    if (inc.empty()) continue;
    // The target coordinate ranges over |u_j - u*_j| <= 2r / D_j. The range
    // is cut into cells; within a cell the per-edge sup is taken over the
    // edge interval widened by half a cell, which bounds the cell from above.
    const double width = 4.0 * r / d[j];
    std::size_t cells = 1;
    if (width > 0.0) {
      cells = static_cast<std::size_t>(std::ceil(width / tol::kGridResolution));
      cells = std::clamp<std::size_t>(cells, 1, kMaxGridCells);
    }
    const double cell = width / static_cast<double>(cells);
    double tau = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
      const double shift = -0.5 * width + (static_cast<double>(k) + 0.5) * cell;
      double sum = 0.0;
      for (std::size_t idx : inc) {
        const Edge& e = graph.edges()[idx];
        const std::size_t m = e.j == j ? e.m : e.j;
        sum += e.count *
               SupAbsPhi3(center[j] + shift - center[m], r / d[m] + 0.5 * cell);
      }
      tau = std::max(tau, sum);
    }
    double s21 = 0.0;
    double s12 = 0.0;
    for (std::size_t idx : inc) {
      const Edge& e = graph.edges()[idx];
      const std::size_t m = e.j == j ? e.m : e.j;
      const double sup = e.count * SupAbsPhi3(center[j] - center[m], r / d[m]);
      s21 += sup / d[m];
      s12 += sup / (d[m] * d[m]);
    }
    out.tau3 = std::max(out.tau3, tau / (d[j] * d[j] * d[j]));
    out.d21 = std::max(out.d21, s21 / (d[j] * d[j]));
    out.d12 = std::max(out.d12, s12 / d[j]);
  }
  return {out, std::nullopt};
}

// Largest eigenvalue of M^{-1} F_BB M^{-1} over the block coordinates.
double ScaledBlockCurvature(const SymMatrix& f, const Vector& metric,
                            const std::vector<std::size_t>& block) {
  if (block.empty()) return 0.0;
  SymMatrix sub = Submatrix(f, block);
  const std::size_t k = block.size();
  SymMatrix scaled(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      scaled.Set(a, b, sub(a, b) / (metric[block[a]] * metric[block[b]]));
    }
  }
  return MaxEigenvalue(scaled);
}

// Draws a point of the metric ball of radius r over the block coordinates.
void PerturbInBall(const std::vector<std::size_t>& block, const Vector& metric,
                   double r, Rng& rng, Vector& x) {
  if (block.empty() || r <= 0.0) return;
  Vector y(block.size());
  for (double& v : y) v = rng.Normal();
  const double norm = Norm2(y);
  if (norm == 0.0) return;
  const double radius =
      r * std::pow(rng.Uniform(), 1.0 / static_cast<double>(block.size()));
  for (std::size_t a = 0; a < block.size(); ++a) {
    x[block[a]] += radius * y[a] / (norm * metric[block[a]]);
  }
}

Vector RandomDirection(const std::vector<std::size_t>& block, std::size_t n,
                       Rng& rng) {
  Vector u(n, 0.0);
  for (std::size_t k : block) u[k] = rng.Normal();
  return u;
}

double MetricNorm(const Vector& u, const Vector& metric) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    s += (metric[k] * u[k]) * (metric[k] * u[k]);
  }
  return std::sqrt(s);
}

BtlConstantsReport L2Constants(const ComparisonGraph& graph,
                               const PenaltySpec& penalty,
                               const ScoreVector& center, const Radii& radii,
                               const Vector& metric,
                               const std::optional<BlockSplit>& split,
                               std::uint64_t seed) {
  const std::size_t n = graph.n();
  std::vector<std::size_t> target;
  std::vector<std::size_t> nuisance;
  if (split) {
    RequireDim(split->dim(), n, "block split");
    target = split->target();
    nuisance = split->nuisance();
  } else {
    target.resize(n);
    std::iota(target.begin(), target.end(), std::size_t{0});
  }
  std::vector<char> in_target(n, 0);
  for (std::size_t k : target) in_target[k] = 1;

  // Per-coordinate displacement bound s_k = r_block / metric_k.
  Vector reach(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = in_target[k] ? radii.target : radii.nuisance;
    reach[k] = r / metric[k];
  }

  const SymMatrix f = BtlFisher(graph, penalty, center.values());
  const double c_t = ScaledBlockCurvature(f, metric, target);
  const double c_n = ScaledBlockCurvature(f, metric, nuisance);

  double log_w = 0.0;
  double e_t = 0.0;
  double e_n = 0.0;
  for (const Edge& e : graph.edges()) {
    log_w = std::max(log_w, reach[e.j] + reach[e.m]);
    const auto inv = [&](std::size_t k, bool want_target) {
      return static_cast<bool>(in_target[k]) == want_target ? 1.0 / metric[k]
                                                            : 0.0;
    };
    e_t = std::max(e_t, std::hypot(inv(e.j, true), inv(e.m, true)));
    e_n = std::max(e_n, std::hypot(inv(e.j, false), inv(e.m, false)));
  }
  const double w = std::exp(log_w);

  ConditionConstants upper;
  upper.norm = NormTag::kL2;
  upper.radii = radii;
  upper.method = EstimateMethod::kEnvelope;
  if (split) {
    upper.tau3 = w * std::max(c_t * e_t, c_n * e_n);
    upper.d12 = w * e_t * c_n;
    upper.d21 = w * e_n * c_t;
  } else {
    upper.tau3 = w * c_t * e_t;
    upper.d12 = upper.tau3;
    upper.d21 = upper.tau3;
  }

  ConditionConstants lower = upper;
  lower.method = EstimateMethod::kMonteCarlo;
  lower.tau3 = lower.d12 = lower.d21 = 0.0;
  Rng rng(seed);
  const auto& cross_t = target;
  const auto& cross_n = split ? nuisance : target;
  for (int k = 0; k < tol::kMonteCarloDirections; ++k) {
    Vector x = center.values();
    PerturbInBall(target, metric, radii.target, rng, x);
    PerturbInBall(nuisance, metric, radii.nuisance, rng, x);
    const auto& block = (split && k % 2 == 1) ? nuisance : target;
    if (!block.empty()) {
      const Vector u = RandomDirection(block, n, rng);
      const double nu = MetricNorm(u, metric);
      if (nu > 0.0) {
        lower.tau3 =
            std::max(lower.tau3,
                     std::abs(EdgeThird(graph, x, u, u, u)) / (nu * nu * nu));
      }
    }
    if (cross_t.empty() || cross_n.empty()) continue;
    const Vector z = RandomDirection(cross_t, n, rng);
    const Vector v = RandomDirection(cross_n, n, rng);
    const double nz = MetricNorm(z, metric);
    const double nv = MetricNorm(v, metric);
    if (nz == 0.0 || nv == 0.0) continue;
    lower.d12 = std::max(
        lower.d12, std::abs(EdgeThird(graph, x, z, v, v)) / (nz * nv * nv));
    lower.d21 = std::max(
        lower.d21, std::abs(EdgeThird(graph, x, z, z, v)) / (nz * nz * nv));
  }
  return {upper, lower};
}

}  // namespace

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double LogOnePlusExp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double Phi2(double t) {
  const double e = std::exp(-std::abs(t));
  return e / ((1.0 + e) * (1.0 + e));
}

double Phi3(double t) { return -Phi2(t) * std::tanh(0.5 * t); }

double SupAbsPhi3(double center, double half_width) {
  Require(half_width >= 0.0, ErrorCode::kInvalidArgument,
          "half width must be nonnegative");
  const double lo = center - half_width;
  const double hi = center + half_width;
  // |phi'''| is even and unimodal on each half-line.
  if ((lo <= kPhi3PeakArg && kPhi3PeakArg <= hi) ||
      (lo <= -kPhi3PeakArg && -kPhi3PeakArg <= hi)) {
    return kPhi3Peak;
  }
  return std::max(std::abs(Phi3(lo)), std::abs(Phi3(hi)));
}

ComparisonGraph::ComparisonGraph(std::size_t n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)), incident_(n) {
  Require(n >= 1, ErrorCode::kInvalidArgument, "graph needs at least 1 item");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  UnionFind uf(n);
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    Require(e.j < e.m && e.m < n, ErrorCode::kInvalidArgument,
            "edge (" + std::to_string(e.j) + ", " + std::to_string(e.m) +
                ") must satisfy j < m < n");
    Require(e.count >= 1, ErrorCode::kInvalidArgument,
            "comparison counts must be positive");
    Require(seen.emplace(e.j, e.m).second, ErrorCode::kInvalidArgument,
            "duplicate edge (" + std::to_string(e.j) + ", " +
                std::to_string(e.m) + ")");
    incident_[e.j].push_back(i);
    incident_[e.m].push_back(i);
    uf.Unite(e.j, e.m);
  }
  const std::size_t root = uf.Find(0);
  connected_ = true;
  for (std::size_t k = 1; k < n; ++k) {
    if (uf.Find(k) != root) {
      connected_ = false;
      break;
    }
  }
}

std::size_t ComparisonGraph::TotalComparisons() const {
  std::size_t total = 0;
  for (const Edge& e : edges_) total += static_cast<std::size_t>(e.count);
  return total;
}

BtlObservation::BtlObservation(ComparisonGraph graph, std::vector<double> wins)
    : graph_(std::move(graph)), wins_(std::move(wins)) {
  RequireDim(wins_.size(), graph_.edges().size(), "wins");
  for (std::size_t i = 0; i < wins_.size(); ++i) {
    const double s = wins_[i];
    Require(std::isfinite(s) && s >= 0.0 && s <= graph_.edges()[i].count,
            ErrorCode::kInvalidArgument,
            "wins must lie in [0, N] on edge " + std::to_string(i));
  }
}

double PenaltySpec::Entry(std::size_t n, std::size_t j, std::size_t m) const {
  switch (kind) {
    case Kind::kNone:
      return 0.0;
    case Kind::kMeanShift:
      return gsq / static_cast<double>(n);
    case Kind::kRidge:
      return j == m ? gsq : 0.0;
  }
  return 0.0;
}

ScoreVector::ScoreVector(Vector values) : values_(std::move(values)) {
  for (double v : values_) {
    Require(std::isfinite(v), ErrorCode::kInvalidArgument,
            "scores must be finite");
  }
}

ComparisonGraph SampleErGraph(std::size_t n, double p, int comparisons,
                              Rng& rng) {
  Require(n >= 2, ErrorCode::kInvalidArgument, "need at least 2 items");
  Require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument,
          "edge probability must lie in [0, 1]");
  Require(comparisons >= 1, ErrorCode::kInvalidArgument,
          "comparisons per edge must be positive");
  std::vector<Edge> edges;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t m = j + 1; m < n; ++m) {
      if (rng.Bernoulli(p)) edges.push_back({j, m, comparisons});
    }
  }
  return ComparisonGraph(n, std::move(edges));
}

BtlObservation SampleOutcomes(const ComparisonGraph& graph,
                              const ScoreVector& truth, Rng& rng) {
  RequireDim(truth.size(), graph.n(), "truth");
  std::vector<double> wins;
  wins.reserve(graph.edges().size());
  for (const Edge& e : graph.edges()) {
    wins.push_back(rng.Binomial(e.count, Sigmoid(truth[e.j] - truth[e.m])));
  }
  return BtlObservation(graph, std::move(wins));
}

BtlObservation ExpectedOutcomes(const ComparisonGraph& graph,
                                const ScoreVector& truth) {
  RequireDim(truth.size(), graph.n(), "truth");
  std::vector<double> wins;
  wins.reserve(graph.edges().size());
  for (const Edge& e : graph.edges()) {
    wins.push_back(e.count * Sigmoid(truth[e.j] - truth[e.m]));
  }
  return BtlObservation(graph, std::move(wins));
}

ScoreVector SampleScores(std::size_t n, double lo, double hi, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.Uniform(lo, hi);
  return ScoreVector(std::move(v));
}

BtlObjective::BtlObjective(BtlObservation obs, PenaltySpec penalty)
    : obs_(std::move(obs)), penalty_(penalty) {
  Require(penalty_.gsq >= 0.0 && std::isfinite(penalty_.gsq),
          ErrorCode::kInvalidArgument, "penalty g^2 must be nonnegative");
}

double BtlObjective::Value(std::span<const double> x) const {
  RequireDim(x.size(), dim(), "point");
  const auto& edges = obs_.graph().edges();
  double sum = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    const double d = x[e.j] - x[e.m];
    sum += e.count * LogOnePlusExp(d) - obs_.wins()[i] * d;
  }
  return sum + PenaltyValue(penalty_, x);
}

double BtlObjective::PenaltyGradient(std::span<const double> x, std::size_t i,
                                     double sum) const {
  switch (penalty_.kind) {
    case PenaltySpec::Kind::kNone:
      return 0.0;
    case PenaltySpec::Kind::kMeanShift:
      return penalty_.gsq * sum / static_cast<double>(x.size());
    case PenaltySpec::Kind::kRidge:
      return penalty_.gsq * x[i];
  }
  return 0.0;
}

Vector BtlObjective::Gradient(std::span<const double> x) const {
  RequireDim(x.size(), dim(), "point");
  const auto& edges = obs_.graph().edges();
  Vector g(dim(), 0.0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    const double r = e.count * Sigmoid(x[e.j] - x[e.m]) - obs_.wins()[i];
    g[e.j] += r;
    g[e.m] -= r;
  }
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += PenaltyGradient(x, k, sum);
  return g;
}

SymMatrix BtlObjective::Hessian(std::span<const double> x) const {
  RequireDim(x.size(), dim(), "point");
  return BtlFisher(obs_.graph(), penalty_, x);
}

double BtlObjective::ThirdDirectional(std::span<const double> x,
                                      std::span<const double> a,
                                      std::span<const double> b,
                                      std::span<const double> c) const {
  RequireDim(x.size(), dim(), "point");
  RequireDim(a.size(), dim(), "direction");
  RequireDim(b.size(), dim(), "direction");
  RequireDim(c.size(), dim(), "direction");
  return EdgeThird(obs_.graph(), x, a, b, c);
}

double BtlObjective::Partial(std::span<const double> x, std::size_t i) const {
  const auto& graph = obs_.graph();
  double g = 0.0;
  for (std::size_t idx : graph.incident(i)) {
    const Edge& e = graph.edges()[idx];
    const double r = e.count * Sigmoid(x[e.j] - x[e.m]) - obs_.wins()[idx];
    g += e.j == i ? r : -r;
  }
  const double sum = penalty_.kind == PenaltySpec::Kind::kMeanShift
                         ? std::accumulate(x.begin(), x.end(), 0.0)
                         : 0.0;
  return g + PenaltyGradient(x, i, sum);
}

double BtlObjective::Partial2(std::span<const double> x, std::size_t i) const {
  const auto& graph = obs_.graph();
  double h = penalty_.Entry(dim(), i, i);
  for (std::size_t idx : graph.incident(i)) {
    const Edge& e = graph.edges()[idx];
    h += e.count * Phi2(x[e.j] - x[e.m]);
  }
  return h;
}

std::shared_ptr<const BtlObjective> MakeBtlObjective(
    const BtlObservation& obs, const PenaltySpec& penalty, BtlMode mode,
    const std::optional<ScoreVector>& truth) {
  if (mode == BtlMode::kEmpirical) {
    return std::make_shared<const BtlObjective>(obs, penalty);
  }
  Require(truth.has_value(), ErrorCode::kInvalidArgument,
          "expected mode requires the true scores");
  return std::make_shared<const BtlObjective>(
      ExpectedOutcomes(obs.graph(), *truth), penalty);
}

SymMatrix BtlFisher(const ComparisonGraph& graph, const PenaltySpec& penalty,
                    std::span<const double> u) {
  const std::size_t n = graph.n();
  RequireDim(u.size(), n, "point");
  SymMatrix f(n);
  if (penalty.kind != PenaltySpec::Kind::kNone) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m = j; m < n; ++m) f.Set(j, m, penalty.Entry(n, j, m));
    }
  }
  for (const Edge& e : graph.edges()) {
    const double w = e.count * Phi2(u[e.j] - u[e.m]);
    f.Add(e.j, e.j, w);
    f.Add(e.m, e.m, w);
    f.Add(e.j, e.m, -w);
  }
  return f;
}

Vector NoiseGradient(const BtlObservation& obs, const ScoreVector& truth) {
  const auto& graph = obs.graph();
  RequireDim(truth.size(), graph.n(), "truth");
  Vector a(graph.n(), 0.0);
  for (std::size_t i = 0; i < graph.edges().size(); ++i) {
    const Edge& e = graph.edges()[i];
    const double r = e.count * Sigmoid(truth[e.j] - truth[e.m]) - obs.wins()[i];
    a[e.j] += r;
    a[e.m] -= r;
  }
  return a;
}

bool MleExists(const BtlObservation& obs, const PenaltySpec& penalty) {
  if (penalty.kind == PenaltySpec::Kind::kRidge && penalty.gsq > 0.0) {
    return true;
  }
  if (penalty.kind == PenaltySpec::Kind::kNone || penalty.gsq <= 0.0) {
    return false;
  }
  const auto& graph = obs.graph();
  if (!graph.connected()) return false;
  // Arc j -> m when j beat m at least once; the likelihood is coercive
  // modulo shifts exactly when every item can reach every other.
  std::vector<std::vector<std::size_t>> fwd(graph.n());
  std::vector<std::vector<std::size_t>> bwd(graph.n());
  for (std::size_t i = 0; i < graph.edges().size(); ++i) {
    const Edge& e = graph.edges()[i];
    const double s = obs.wins()[i];
    if (s > 0.0) {
      fwd[e.j].push_back(e.m);
      bwd[e.m].push_back(e.j);
    }
    if (s < e.count) {
      fwd[e.m].push_back(e.j);
      bwd[e.j].push_back(e.m);
    }
  }
  return ReachesAll(fwd) && ReachesAll(bwd);
}

SolveReport FitPenalizedMle(const BtlObservation& obs,
                            const PenaltySpec& penalty, MleSolver solver,
                            double tol) {
  Require(penalty.kind != PenaltySpec::Kind::kNone && penalty.gsq > 0.0,
          ErrorCode::kInvalidArgument,
          "the MLE needs a positive penalty; the likelihood is shift "
          "invariant");
  const BtlObjective f(obs, penalty);
  const Vector x0(obs.graph().n(), 0.0);
  const bool exists = MleExists(obs, penalty);
  SolveReport report;
  try {
    if (solver == MleSolver::kNewton) {
      NewtonOptions opts;
      opts.tol = tol;
      report = NewtonMinimize(f, x0, opts);
    } else {
      CoordinateOptions opts;
      opts.tol = tol;
      report = CoordinateDescentMinimize(f, x0, opts);
    }
  } catch (const Error& e) {
    // Along a divergent direction the curvature underflows.
    if (exists || e.code() != ErrorCode::kHessianNotPD) throw;
    report.argmin = x0;
    report.final_grad_supnorm = NormInf(f.Gradient(x0));
  }
  if (!exists) {
    report.converged = false;
    report.status = SolveStatus::kNoMinimizer;
  }
  return report;
}

double DiagonalDominanceMargin(const SymMatrix& f) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < f.dim(); ++j) {
    double off = 0.0;
    for (std::size_t m = 0; m < f.dim(); ++m) {
      if (m != j) off += std::abs(f(j, m));
    }
    Require(f(j, j) > 0.0, ErrorCode::kInvalidArgument,
            "diagonal entries must be positive");
    margin = std::min(margin, (f(j, j) - off) / f(j, j));
  }
  return margin;
}

BtlConstantsReport BtlConditionConstants(
    const ComparisonGraph& graph, const PenaltySpec& penalty,
    const ScoreVector& center, const Radii& radii, const MetricTensor& metric,
    NormTag norm, const std::optional<BlockSplit>& split, std::uint64_t seed) {
  RequireDim(center.size(), graph.n(), "center");
  RequireDim(metric.dim(), graph.n(), "metric");
  Require(metric.is_diagonal(), ErrorCode::kInvalidArgument,
          "BTL condition constants need a diagonal metric");
  Require(radii.target >= 0.0 && radii.nuisance >= 0.0,
          ErrorCode::kInvalidArgument, "radii must be nonnegative");
  const Vector& d = metric.diagonal();
  if (norm == NormTag::kLInf) {
    return SupNormConstants(graph, center, radii.target, d);
  }
  return L2Constants(graph, penalty, center, radii, d, split, seed);
}

}  // namespace perturbopt

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

// Portable random streams. The standard distributions are implementation
// defined, so uniforms and Bernoulli draws are derived from raw engine bits
// to keep outputs identical across standard libraries.

#ifndef PERTURBOPT_RNG_H_
#define PERTURBOPT_RNG_H_

#include <cstdint>
#include <random>

namespace perturbopt {

std::uint64_t SplitMix64(std::uint64_t x);

// Seed of the substream for replication `rep` at problem size `n`.
std::uint64_t SubstreamSeed(std::uint64_t master, std::uint64_t n,
                            std::uint64_t rep);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  bool Bernoulli(double p) { return Uniform() < p; }
  // Sum of independent Bernoulli draws.
  int Binomial(int trials, double p);
  // Standard normal by Box-Muller.
  double Normal();

  std::uint64_t NextU64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace perturbopt

#endif  // PERTURBOPT_RNG_H_

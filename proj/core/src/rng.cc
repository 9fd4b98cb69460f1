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

#include "perturbopt/rng.h"

#include <cmath>
#include <numbers>

namespace perturbopt {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t SubstreamSeed(std::uint64_t master, std::uint64_t n,
                            std::uint64_t rep) {
  std::uint64_t s = SplitMix64(master);
  s = SplitMix64(s ^ SplitMix64(n + 0x632be59bd9b4e019ULL));
  return SplitMix64(s ^ SplitMix64(rep + 0x85157af5ULL));
}

int Rng::Binomial(int trials, double p) {
  int count = 0;
  for (int i = 0; i < trials; ++i) count += Bernoulli(p) ? 1 : 0;
  return count;
}

double Rng::Normal() {
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace perturbopt

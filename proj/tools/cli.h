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

// Command-line dispatch for the `perturbopt` tool, kept in a library so that
// tests can drive it with in-memory streams.

#ifndef PERTURBOPT_TOOLS_CLI_H_
#define PERTURBOPT_TOOLS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace perturbopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // structured failure
inline constexpr int kExitUsage = 2;

// `args` excludes the program name. Normal output goes to `out`, warnings
// and errors to `err`.
int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

struct SelftestCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

// Invariant checks on small built-in instances.
std::vector<SelftestCheck> RunSelftest(std::uint64_t seed);

}  // namespace perturbopt::cli

#endif  // PERTURBOPT_TOOLS_CLI_H_

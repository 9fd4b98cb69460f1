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

// Small helpers shared by the CSV writers.

#ifndef PERTURBOPT_CSV_H_
#define PERTURBOPT_CSV_H_

#include <string>

namespace perturbopt {

// 17 significant digits, enough to round-trip any double; NaN prints "nan".
std::string FormatDouble(double v);

}  // namespace perturbopt

#endif  // PERTURBOPT_CSV_H_

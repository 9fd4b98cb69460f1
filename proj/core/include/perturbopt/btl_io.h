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

// CSV files for comparison data and score vectors. Item indices are 1-based
// on disk and 0-based in memory.
//
//   observations: header `j,m,N,S` (graph-only files omit `S`), j < m
//   scores:       header `item,score`

#ifndef PERTURBOPT_BTL_IO_H_
#define PERTURBOPT_BTL_IO_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "perturbopt/btl.h"
#include "perturbopt/csv.h"

namespace perturbopt {

struct ObservationFile {
  ComparisonGraph graph;
  // Present when the file carries the `S` column.
  std::optional<std::vector<double>> wins;

  BtlObservation ToObservation() const;
};

// The item count is the largest index seen, or `min_items` if larger.
ObservationFile ParseObservationCsv(std::istream& in,
                                    std::size_t min_items = 0);
ObservationFile ReadObservationCsv(const std::string& path,
                                   std::size_t min_items = 0);
void WriteObservationCsv(std::ostream& out, const ComparisonGraph& graph,
                         const std::vector<double>* wins);
void WriteObservationCsv(const std::string& path, const BtlObservation& obs);

ScoreVector ParseScoresCsv(std::istream& in);
ScoreVector ReadScoresCsv(const std::string& path);
void WriteScoresCsv(std::ostream& out, const Vector& scores);
void WriteScoresCsv(const std::string& path, const Vector& scores);

}  // namespace perturbopt

#endif  // PERTURBOPT_BTL_IO_H_

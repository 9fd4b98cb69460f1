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

#include "perturbopt/btl_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include "perturbopt/error.h"

namespace perturbopt {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(Trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void Fail(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::kIoError,
              "line " + std::to_string(line_no) + ": " + what);
}

long ParseIndex(std::string_view s, std::size_t line_no) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    Fail(line_no, "expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

double ParseReal(std::string_view s, std::size_t line_no) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    Fail(line_no, "expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

// Reads the next non-blank line; false at end of input.
bool NextLine(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!Trim(line).empty()) return true;
  }
  return false;
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIoError, "cannot open " + path);
  return in;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path);
  Require(out.good(), ErrorCode::kIoError, "cannot write " + path);
  return out;
}

}  // namespace

BtlObservation ObservationFile::ToObservation() const {
  Require(wins.has_value(), ErrorCode::kIoError,
          "observation file has no S column");
  return BtlObservation(graph, *wins);
}

ObservationFile ParseObservationCsv(std::istream& in, std::size_t min_items) {
  std::string line;
  std::size_t line_no = 0;
  Require(NextLine(in, line, line_no), ErrorCode::kIoError,
          "observation file is empty");
  const auto header = SplitFields(line);
  const bool has_wins = header.size() == 4;
  if (!(header.size() == 3 || has_wins) || header[0] != "j" ||
      header[1] != "m" || header[2] != "N" || (has_wins && header[3] != "S")) {
    Fail(line_no, "header must be j,m,N or j,m,N,S");
  }
  std::vector<Edge> edges;
  std::vector<double> wins;
  std::size_t n = min_items;
  while (NextLine(in, line, line_no)) {
    const auto fields = SplitFields(line);
    if (fields.size() != header.size()) Fail(line_no, "wrong field count");
    const long j = ParseIndex(fields[0], line_no);
    const long m = ParseIndex(fields[1], line_no);
    const long count = ParseIndex(fields[2], line_no);
    if (j < 1 || m <= j) Fail(line_no, "indices must satisfy 1 <= j < m");
    if (count < 1) Fail(line_no, "N must be positive");
    edges.push_back({static_cast<std::size_t>(j - 1),
                     static_cast<std::size_t>(m - 1), static_cast<int>(count)});
    if (has_wins) wins.push_back(ParseReal(fields[3], line_no));
    n = std::max(n, static_cast<std::size_t>(m));
  }
  Require(n >= 1, ErrorCode::kIoError, "observation file has no items");
  ObservationFile file{ComparisonGraph(n, std::move(edges)), std::nullopt};
  if (has_wins) {
    // Validates 0 <= S <= N.
    BtlObservation check(file.graph, wins);
    file.wins = std::move(wins);
  }
  return file;
}

ObservationFile ReadObservationCsv(const std::string& path,
                                   std::size_t min_items) {
  std::ifstream in = OpenIn(path);
  return ParseObservationCsv(in, min_items);
}

void WriteObservationCsv(std::ostream& out, const ComparisonGraph& graph,
                         const std::vector<double>* wins) {
  out << (wins ? "j,m,N,S\n" : "j,m,N\n");
  for (std::size_t i = 0; i < graph.edges().size(); ++i) {
    const Edge& e = graph.edges()[i];
    out << e.j + 1 << ',' << e.m + 1 << ',' << e.count;
    if (wins) out << ',' << FormatDouble((*wins)[i]);
    out << '\n';
  }
}

void WriteObservationCsv(const std::string& path, const BtlObservation& obs) {
  std::ofstream out = OpenOut(path);
  WriteObservationCsv(out, obs.graph(), &obs.wins());
  Require(out.good(), ErrorCode::kIoError, "failed writing " + path);
}

ScoreVector ParseScoresCsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  Require(NextLine(in, line, line_no), ErrorCode::kIoError,
          "score file is empty");
  const auto header = SplitFields(line);
  if (header.size() != 2 || header[0] != "item" || header[1] != "score") {
    Fail(line_no, "header must be item,score");
  }
  std::map<long, double> by_item;
  while (NextLine(in, line, line_no)) {
    const auto fields = SplitFields(line);
    if (fields.size() != 2) Fail(line_no, "wrong field count");
    const long item = ParseIndex(fields[0], line_no);
    if (item < 1) Fail(line_no, "items are 1-based");
    if (!by_item.emplace(item, ParseReal(fields[1], line_no)).second) {
      Fail(line_no, "duplicate item " + std::to_string(item));
    }
  }
  Vector values;
  values.reserve(by_item.size());
  long expect = 1;
  for (const auto& [item, score] : by_item) {
    Require(item == expect, ErrorCode::kIoError,
            "score file is missing item " + std::to_string(expect));
    values.push_back(score);
    ++expect;
  }
  return ScoreVector(std::move(values));
}

ScoreVector ReadScoresCsv(const std::string& path) {
  std::ifstream in = OpenIn(path);
  return ParseScoresCsv(in);
}

void WriteScoresCsv(std::ostream& out, const Vector& scores) {
  out << "item,score\n";
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out << k + 1 << ',' << FormatDouble(scores[k]) << '\n';
  }
}

void WriteScoresCsv(const std::string& path, const Vector& scores) {
  std::ofstream out = OpenOut(path);
  WriteScoresCsv(out, scores);
  Require(out.good(), ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace perturbopt

// Copyright (c) 2026 The pvtrigger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pvt/trials.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pvt/common.h"

namespace pvt {

const char* ToString(Label label) {
  return label == Label::kPositive ? "positive" : "negative";
}

Label ParseLabel(const std::string& s) {
  if (s == "positive") return Label::kPositive;
  if (s == "negative") return Label::kNegative;
  throw Error(ErrorKind::kParse, "bad label '" + s + "' (expected positive or negative)");
}

namespace {

std::vector<std::string> SplitSpaces(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(f);
  return fields;
}

[[noreturn]] void LineError(const std::string& name, int line, const std::string& msg) {
  throw Error(ErrorKind::kParse, name + ":" + std::to_string(line) + ": " + msg);
}

double ParseDouble(const std::string& s, const std::string& name, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    LineError(name, line, "bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<Trial> ParseTrials(std::istream& in, const std::string& name) {
  std::vector<Trial> trials;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto fields = SplitSpaces(text);
    if (fields.empty()) continue;
    if (fields.size() != 5) {
      LineError(name, line, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    Trial t;
    t.enrollment = {fields[0], fields[1], fields[2]};
    t.test = fields[3];
    try {
      t.label = ParseLabel(fields[4]);
    } catch (const Error& e) {
      LineError(name, line, e.what());
    }
    t.line = line;
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<Trial> ParseTrials(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "trials " + path + ": cannot open");
  return ParseTrials(in, path);
}

void WriteTrials(std::ostream& out, const std::vector<Trial>& trials) {
  for (const auto& t : trials) {
    out << t.enrollment[0] << ' ' << t.enrollment[1] << ' ' << t.enrollment[2]
        << ' ' << t.test << ' ' << ToString(t.label) << '\n';
  }
}

std::vector<ScoredTrial> ParseScoreTable(std::istream& in, const std::string& name) {
  std::vector<ScoredTrial> rows;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto fields = SplitSpaces(text);
    if (fields.empty() || fields[0].starts_with('#')) continue;
    if (fields.size() != 3) {
      LineError(name, line, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    ScoredTrial row;
    try {
      row.label = ParseLabel(fields[0]);
    } catch (const Error& e) {
      LineError(name, line, e.what());
    }
    row.kws_confidence = ParseDouble(fields[1], name, line);
    if (fields[2] != "NA") row.sv_score = ParseDouble(fields[2], name, line);
    row.line = line;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ScoredTrial> ParseScoreTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "scores " + path + ": cannot open");
  return ParseScoreTable(in, path);
}

void WriteScoreTable(std::ostream& out, const std::vector<ScoredTrial>& rows) {
  char buf[64];
  for (const auto& r : rows) {
    out << ToString(r.label);
    std::snprintf(buf, sizeof buf, "\t%.6f\t", r.kws_confidence);
    out << buf;
    if (r.sv_score) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.sv_score);
      out << buf;
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

}  // namespace pvt

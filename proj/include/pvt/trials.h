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

#ifndef PVT_TRIALS_H_
#define PVT_TRIALS_H_

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pvt/common.h"

namespace pvt {

enum class Label { kPositive, kNegative };

const char* ToString(Label label);
Label ParseLabel(const std::string& s);  // throws kParse

// One line of a trial file: "enroll1 enroll2 enroll3 test label".
struct Trial {
  std::array<std::string, 3> enrollment;
  std::string test;
  Label label = Label::kNegative;
  int line = 0;  // 1-based line in the source file
};

std::vector<Trial> ParseTrials(std::istream& in, const std::string& name = "<trials>");
std::vector<Trial> ParseTrials(const std::string& path);
void WriteTrials(std::ostream& out, const std::vector<Trial>& trials);

// Score-only rows: "label kws_confidence sv_score", sv_score may be NA.
struct ScoredTrial {
  Label label = Label::kNegative;
  double kws_confidence = 0.0;
  std::optional<double> sv_score;
  int line = 0;
};

std::vector<ScoredTrial> ParseScoreTable(std::istream& in,
                                         const std::string& name = "<scores>");
std::vector<ScoredTrial> ParseScoreTable(const std::string& path);
void WriteScoreTable(std::ostream& out, const std::vector<ScoredTrial>& rows);

}  // namespace pvt

#endif  // PVT_TRIALS_H_

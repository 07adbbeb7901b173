// Copyright 2026 The adlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADLAB_CSV_H_
#define ADLAB_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace adlab::csv {

// Shortest text that parses back to the same double.
std::string FormatDouble(double v);

std::string JoinRow(const std::vector<std::string>& fields);
std::vector<std::string> SplitRow(std::string_view line);

// Header plus rows of a comma separated file without quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a column; throws MissingArtifactError when absent.
  int Column(std::string_view name) const;
};

// Throws MissingArtifactError when the file cannot be read or a row has the
// wrong number of fields.
Table ReadFile(const std::string& path);

double ParseDouble(const std::string& field);
long ParseLong(const std::string& field);

}  // namespace adlab::csv

#endif  // ADLAB_CSV_H_

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

#include "adlab/csv.h"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "adlab/errors.h"

namespace adlab::csv {

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string JoinRow(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::vector<std::string> SplitRow(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

int Table::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw MissingArtifactError("csv: missing column '" + std::string(name) + "'");
}

Table ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw MissingArtifactError("empty file " + path);
  t.header = SplitRow(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = SplitRow(line);
    if (row.size() != t.header.size()) {
      throw MissingArtifactError("malformed row in " + path);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

double ParseDouble(const std::string& field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw MissingArtifactError("csv: bad number '" + field + "'");
  }
  return v;
}

long ParseLong(const std::string& field) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw MissingArtifactError("csv: bad integer '" + field + "'");
  }
  return v;
}

}  // namespace adlab::csv

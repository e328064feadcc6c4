// Copyright 2026 The Pmet Authors.
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

#ifndef PMET_CSVIO_HPP_
#define PMET_CSVIO_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pmet::csvio {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // Trim surrounding whitespace.
    size_t a = cell.find_first_not_of(" \t\r");
    size_t b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline Table read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open CSV " + path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      t.header = split_line(line);
      first = false;
    } else {
      auto row = split_line(line);
      if (row.size() != t.header.size())
        throw std::runtime_error("malformed CSV row in " + path + ": " + line);
      t.rows.push_back(std::move(row));
    }
  }
  if (first) throw std::runtime_error("empty CSV " + path);
  return t;
}

}  // namespace pmet::csvio

#endif  // PMET_CSVIO_HPP_

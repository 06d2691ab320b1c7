/* Copyright 2026 The mtex Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mtex/loss_trace.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mtex/errors.hpp"

namespace mtex {
namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> parse_optional(const std::string& field, int line) {
  if (field.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw FormatError("loss trace line " + std::to_string(line) + ": bad number '" + field + "'");
  }
}

}  // namespace

std::string LossTrace::to_csv() const {
  std::string out = "step,estimator,exact,triplets\n";
  for (const TraceEntry& e : entries) {
    out += std::to_string(e.step);
    out += ',';
    if (e.estimate) out += format_number(*e.estimate);
    out += ',';
    if (e.exact) out += format_number(*e.exact);
    out += ',';
    for (std::size_t i = 0; i < e.triplets.size(); ++i) {
      if (i > 0) out += ';';
      out += e.triplets[i].to_string();
    }
    out += '\n';
  }
  return out;
}

LossTrace LossTrace::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "step,estimator,exact,triplets") {
    throw FormatError("loss trace: missing header 'step,estimator,exact,triplets'");
  }
  LossTrace trace;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 4) throw FormatError("loss trace line " + std::to_string(number) + ": expected 4 fields");
    TraceEntry e;
    int step = 0;
    const auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), step);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size()) {
      throw FormatError("loss trace line " + std::to_string(number) + ": bad step '" + fields[0] + "'");
    }
    e.step = step;
    e.estimate = parse_optional(fields[1], number);
    e.exact = parse_optional(fields[2], number);
    if (!fields[3].empty()) {
      for (const std::string& t : split(fields[3], ';')) {
        TripletIndex idx;
        std::istringstream ts(t);
        if (!(ts >> idx.channels[0] >> idx.channels[1] >> idx.channels[2])) {
          throw FormatError("loss trace line " + std::to_string(number) + ": bad triplet '" + t + "'");
        }
        e.triplets.push_back(idx);
      }
    }
    trace.entries.push_back(std::move(e));
  }
  return trace;
}

void LossTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
  if (!out) throw IoError("failed writing " + path.string());
}

LossTrace LossTrace::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

}  // namespace mtex

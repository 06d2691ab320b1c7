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

#ifndef MTEX_LOSS_TRACE_HPP_
#define MTEX_LOSS_TRACE_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mtex/triplet.hpp"

namespace mtex {

struct TraceEntry {
  int step = 0;
  // Training-loss value; absent on a trailing exact-only row.
  std::optional<double> estimate;
  std::optional<double> exact;
  std::vector<TripletIndex> triplets;
};

/// Per-step record of an optimization or training run.
///
/// CSV form: header "step,estimator,exact,triplets", one row per entry,
/// numbers printed with 17 significant digits, empty fields for absent
/// values, triplets as "c0 c1 c2" joined by ';'.
struct LossTrace {
  std::vector<TraceEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::string to_csv() const;
  static LossTrace from_csv(const std::string& text);

  void write_csv(const std::filesystem::path& path) const;
  static LossTrace read_csv(const std::filesystem::path& path);
};

}  // namespace mtex

#endif  // MTEX_LOSS_TRACE_HPP_

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

#include "mtex/summation.hpp"

#include <cmath>

namespace mtex {
namespace {

constexpr int kFolds = 3;

}  // namespace

double order_independent_sum(std::span<double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  int guard = 0;
  while ((std::size_t{1} << guard) < n + 2) ++guard;

  double parts[kFolds] = {0.0, 0.0, 0.0};
  for (int fold = 0; fold < kFolds; ++fold) {
    double peak = 0.0;
    for (double v : values) peak = std::fmax(peak, std::fabs(v));
    if (peak == 0.0) break;
    if (!std::isfinite(peak)) {
      double plain = 0.0;
      for (double v : values) plain += v;
      return plain;
    }
    int exponent = 0;
    std::frexp(peak, &exponent);
    const double sigma = std::ldexp(1.0, exponent + guard);
    // Every extracted high part is a multiple of ulp(sigma) / 2 and their
    // total stays below sigma, so these partial sums are exact.
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      for (int lane = 0; lane < 4; ++lane) {
        const double high = (sigma + values[i + lane]) - sigma;
        values[i + lane] -= high;
        acc[lane] += high;
      }
    }
    for (; i < n; ++i) {
      const double high = (sigma + values[i]) - sigma;
      values[i] -= high;
      acc[0] += high;
    }
    parts[fold] = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  }
  return parts[0] + (parts[1] + parts[2]);
}

}  // namespace mtex

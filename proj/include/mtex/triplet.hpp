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

#ifndef MTEX_TRIPLET_HPP_
#define MTEX_TRIPLET_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <string>

namespace mtex {

/// Ordered channel triple selecting a pseudo-RGB view; repeats allowed.
struct TripletIndex {
  std::array<int, 3> channels{0, 0, 0};

  int operator[](std::size_t k) const { return channels[k]; }
  auto operator<=>(const TripletIndex&) const = default;

  bool within(int n) const;
  // Lexicographic rank in {0..n-1}^3.
  int rank(int n) const { return (channels[0] * n + channels[1]) * n + channels[2]; }
  static TripletIndex from_rank(int rank, int n);
  // "c0 c1 c2"
  std::string to_string() const;
};

}  // namespace mtex

#endif  // MTEX_TRIPLET_HPP_

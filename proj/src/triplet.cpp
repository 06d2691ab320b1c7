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

#include "mtex/triplet.hpp"

namespace mtex {

bool TripletIndex::within(int n) const {
  for (int c : channels) {
    if (c < 0 || c >= n) return false;
  }
  return true;
}

TripletIndex TripletIndex::from_rank(int rank, int n) {
  return TripletIndex{{rank / (n * n), (rank / n) % n, rank % n}};
}

std::string TripletIndex::to_string() const {
  return std::to_string(channels[0]) + ' ' + std::to_string(channels[1]) + ' ' +
         std::to_string(channels[2]);
}

}  // namespace mtex

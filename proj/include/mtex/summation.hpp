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

#ifndef MTEX_SUMMATION_HPP_
#define MTEX_SUMMATION_HPP_

#include <cstddef>
#include <span>

namespace mtex {

/// Sum whose result depends only on the multiset of inputs, not their order.
/// Uses three error-free extraction passes against power-of-two splitters;
/// `values` is overwritten with the final residuals.
double order_independent_sum(std::span<double> values);

}  // namespace mtex

#endif  // MTEX_SUMMATION_HPP_

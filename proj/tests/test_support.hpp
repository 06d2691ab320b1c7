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

#ifndef MTEX_TESTS_TEST_SUPPORT_HPP_
#define MTEX_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

#include "mtex/material_io.hpp"
#include "mtex/tensor.hpp"

namespace mtex::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline MaterialStack random_stack(int n, int h, int w, std::uint64_t seed) {
  return MaterialStack(random_tensor({n, h, w}, seed), ChannelLayout::anonymous(n));
}

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Central difference of f at coordinate `index`, double precision.
inline double central_difference(const std::function<double(const Tensor&)>& f, Tensor x, std::size_t index,
                                 double step = 1e-4) {
  const double original = x[index];
  x[index] = original + step;
  const double up = f(x);
  x[index] = original - step;
  const double down = f(x);
  return (up - down) / (2.0 * step);
}

// Max over `count` random coordinates of |analytic - numeric| / max(|analytic|,
// |numeric|, floor), where floor = 1e-6 * max |analytic|.
inline double max_gradient_error(const std::function<double(const Tensor&)>& f, const Tensor& analytic,
                                 const Tensor& x, int count, std::uint64_t seed, double step = 1e-4) {
  double grad_scale = 0.0;
  for (double g : analytic.values()) grad_scale = std::max(grad_scale, std::abs(g));
  const double floor = 1e-6 * grad_scale;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const std::size_t index = pick(rng);
    const double numeric = central_difference(f, x, index, step);
    const double denom = std::max({std::abs(analytic[index]), std::abs(numeric), floor, 1e-300});
    worst = std::max(worst, std::abs(analytic[index] - numeric) / denom);
  }
  return worst;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mtex_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace mtex::testing

#endif  // MTEX_TESTS_TEST_SUPPORT_HPP_

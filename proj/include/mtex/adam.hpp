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

#ifndef MTEX_ADAM_HPP_
#define MTEX_ADAM_HPP_

#include <vector>

#include "mtex/tensor.hpp"

namespace mtex {

struct AdamConfig {
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // ConfigError unless lr > 0, 0 <= beta < 1, epsilon > 0.
  void validate() const;
};

/// Adam with bias correction. State is allocated on the first step and tied
/// to the position of each parameter in the list.
class Adam {
 public:
  explicit Adam(AdamConfig config);

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  const AdamConfig& config() const { return config_; }
  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace mtex

#endif  // MTEX_ADAM_HPP_

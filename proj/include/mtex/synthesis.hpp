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

#ifndef MTEX_SYNTHESIS_HPP_
#define MTEX_SYNTHESIS_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mtex/adam.hpp"
#include "mtex/feature_extractor.hpp"
#include "mtex/loss_trace.hpp"
#include "mtex/material_io.hpp"
#include "mtex/textural_loss.hpp"

namespace mtex {

enum class LossMode { kStochastic, kExact, kSeparate };

struct LossConfig {
  LossMode mode = LossMode::kStochastic;
  // Triplets per step in stochastic mode.
  int k = 1;
  // Separate mode; empty takes the layout's role groups.
  std::vector<TripletIndex> groups;
  ExactOptions exact;
};

enum class InitMode { kUniformNoise, kMeanPlusNoise };
enum class Parameterization { kSigmoid, kClamped };

struct SynthesisConfig {
  // Output size; 0 takes the exemplar's.
  int height = 0;
  int width = 0;
  int steps = 500;
  AdamConfig adam;
  std::uint64_t seed = 0;
  LossConfig loss;
  InitMode init = InitMode::kMeanPlusNoise;
  double noise_amplitude = 0.1;
  Parameterization parameterization = Parameterization::kSigmoid;
  // Exact n-channel loss recorded every this many steps and at the end; 0 disables.
  int exact_every = 0;
  int checkpoint_every = 0;
};

/// Direct optimization of an n-channel stack against an exemplar.
struct SynthesisResult {
  MaterialStack stack;
  LossTrace trace;
};

using CheckpointFn = std::function<void(int step, const MaterialStack&)>;

// ConfigError for invalid fields or an output smaller than the extractor accepts.
void validate(const SynthesisConfig& config, const MaterialStack& exemplar, const FeatureExtractor& extractor);

// Seeded starting stack; what synthesize returns for steps = 0.
MaterialStack initial_stack(const MaterialStack& exemplar, const SynthesisConfig& config);

/// Trace rows 0..steps-1 hold the training loss of the iterate before each
/// update; with exact_every > 0 a final row at `steps` holds the exact loss
/// of the returned stack. NumericalError names the step and triplet of a
/// non-finite loss.
SynthesisResult synthesize(const MaterialStack& exemplar, const SynthesisConfig& config,
                           const FeatureExtractor& extractor, std::shared_ptr<GramCache> cache = nullptr,
                           const CheckpointFn& on_checkpoint = {});

}  // namespace mtex

#endif  // MTEX_SYNTHESIS_HPP_

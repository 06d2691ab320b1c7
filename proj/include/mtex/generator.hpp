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

#ifndef MTEX_GENERATOR_HPP_
#define MTEX_GENERATOR_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtex/adam.hpp"
#include "mtex/autograd.hpp"
#include "mtex/feature_extractor.hpp"
#include "mtex/loss_trace.hpp"
#include "mtex/material_io.hpp"
#include "mtex/rng.hpp"
#include "mtex/textural_loss.hpp"

namespace mtex {

struct GeneratorArchitecture {
  int scales = 5;
  int noise_channels = 3;
  // Channels produced by each per-scale block; merged widths grow by this much per level.
  int block_width = 8;
  double leaky_slope = 0.01;
  double norm_epsilon = 1e-5;

  // Admissible output sizes are multiples of 2^(scales - 1).
  int pyramid_factor() const { return 1 << (scales - 1); }
  void validate() const;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Multi-scale noise -> n-channel texture network.
///
/// Scale s (0 = full resolution) reads a (noise_channels, H/2^s, W/2^s) noise
/// image through a block of three convolutions (3x3, 3x3, 1x1), each followed
/// by pixel-wise response normalization and a leaky ReLU. Starting from the
/// coarsest scale, the running features are upsampled 2x, concatenated with
/// the next scale's block output and passed through a block of the merged
/// width. A final 1x1 convolution and a sigmoid give n channels in [0, 1].
class GeneratorModel {
 public:
  GeneratorModel() = default;
  static GeneratorModel initialize(const GeneratorArchitecture& arch, const ChannelLayout& layout,
                                   std::uint64_t seed);

  const GeneratorArchitecture& architecture() const { return arch_; }
  const ChannelLayout& layout() const { return layout_; }
  int channels() const { return layout_.total_channels(); }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  std::vector<NamedTensor>& mutable_parameters() { return params_; }
  std::size_t parameter_count() const;

  // ConfigError unless both are positive multiples of the pyramid factor.
  void check_size(int height, int width) const;
  std::vector<Tensor> sample_noise(int height, int width, Rng& rng) const;

  // `params` holds one node per entry of parameters(), in order.
  ag::Var forward(const std::vector<ag::Var>& noise, const std::vector<ag::Var>& params) const;
  ag::Var forward(const std::vector<ag::Var>& noise) const;

  // Recorded at training time.
  std::string extractor_fingerprint;
  nlohmann::ordered_json train_config = nlohmann::ordered_json::object();

  friend bool operator==(const GeneratorModel& a, const GeneratorModel& b);

 private:
  GeneratorArchitecture arch_;
  ChannelLayout layout_;
  std::vector<NamedTensor> params_;
};

enum class TripletSharing { kPerBatch, kPerElement };

struct TrainConfig {
  GeneratorArchitecture architecture;
  int batch_size = 1;
  int steps = 1000;
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 0;
  // Triplets per batch element and step.
  int k = 1;
  TripletSharing sharing = TripletSharing::kPerBatch;
  // Random exemplar crops of this size; training size is the crop size, or
  // the exemplar rounded down to the pyramid factor when smaller.
  int crop_size = 128;
  int checkpoint_every = 0;
  // Divergence guard.
  int running_mean_window = 50;
  double divergence_factor = 10.0;
  int divergence_patience = 500;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct TrainResult {
  GeneratorModel model;
  LossTrace trace;
  int training_height = 0;
  int training_width = 0;
};

using ModelCheckpointFn = std::function<void(int step, const GeneratorModel&)>;

// Training resolution for an exemplar under `config`.
std::pair<int, int> training_size(const MaterialStack& exemplar, const TrainConfig& config);

/// Each step draws a noise batch, draws one set of k triplets (or one per
/// element), compares triplet views of each generated sample with the same
/// views of an exemplar crop and takes an Adam step on the batch-mean loss.
/// NumericalError on a non-finite loss or when the divergence guard trips.
TrainResult train_generator(const MaterialStack& exemplar, const TrainConfig& config,
                            const FeatureExtractor& extractor, std::shared_ptr<GramCache> cache = nullptr,
                            const ModelCheckpointFn& on_checkpoint = {});

MaterialStack generate(const GeneratorModel& model, int height, int width, std::uint64_t seed);

/// MTXA archive with f64 parameters; metadata holds the architecture,
/// layout, extractor fingerprint and training configuration.
void save_model(const GeneratorModel& model, const std::filesystem::path& path);

/// Version or fingerprint mismatches are appended to `warnings`, not thrown.
/// Pass the extractor fingerprint in use as `expected_fingerprint` to check it.
GeneratorModel load_model(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr,
                          const std::string& expected_fingerprint = "");

}  // namespace mtex

#endif  // MTEX_GENERATOR_HPP_

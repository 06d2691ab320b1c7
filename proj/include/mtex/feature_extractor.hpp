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

#ifndef MTEX_FEATURE_EXTRACTOR_HPP_
#define MTEX_FEATURE_EXTRACTOR_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mtex/autograd.hpp"
#include "mtex/tensor.hpp"

namespace mtex {

enum class PoolingMode { kAverage, kMax };

struct ExtractorConfig {
  // "mock", or the path of an MTXA archive holding VGG-19 convolution weights.
  std::string weights_source = "mock";
  // Empty selects the network's default taps.
  std::vector<std::string> taps;
  PoolingMode pooling = PoolingMode::kAverage;
  // Applied to every 3-channel view before the first convolution.
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> stddev{0.229, 0.224, 0.225};

  bool is_mock() const { return weights_source == "mock"; }
};

// Feature maps per tap, each (N_l, M_l): channels by flattened positions.
struct LayerFeatures {
  std::vector<Tensor> maps;
};

// Per-tap Gram matrices G^l (N_l x N_l) and their feature counts N_l.
struct GramStatistics {
  std::vector<Tensor> grams;
  std::vector<int> feature_counts;

  std::size_t layers() const { return grams.size(); }
};

/// Immutable convolutional tap stack.
///
/// The mock network is conv1 (3->8, 3x3) relu1 pool1 conv2 (8->16, 3x3)
/// relu2, taps relu1 and relu2, weights drawn from a fixed seed.
/// The VGG-19 network follows the conventional layer names (conv1_1, relu1_1,
/// pool1, ..., relu5_4, pool5) and reads "conv<b>_<i>.weight" (out, in, 3, 3)
/// and "conv<b>_<i>.bias" from the archive; its default taps are relu1_1 and
/// pool1..pool4.
class FeatureExtractor {
 public:
  static FeatureExtractor load(const ExtractorConfig& config);

  const ExtractorConfig& config() const { return config_; }
  const std::vector<std::string>& tap_names() const { return tap_names_; }
  const std::vector<int>& feature_counts() const { return feature_counts_; }
  std::size_t tap_count() const { return tap_names_.size(); }
  // Smallest square input for which every tap keeps a position.
  int min_size() const;
  // (height, width) of each tap for an input of the given size.
  std::vector<std::pair<int, int>> tap_sizes(int height, int width) const;
  // Identifies weights + taps + pooling + normalization.
  const std::string& fingerprint() const { return fingerprint_; }

  // Weight and bias of convolution `name`, or nulls when there is none.
  std::pair<const Tensor*, const Tensor*> conv_parameters(const std::string& name) const;

  // Differentiable forward pass; returns one (N_l, h_l, w_l) node per tap.
  std::vector<ag::Var> forward(const ag::Var& image) const;

  LayerFeatures extract(const Tensor& image) const;
  GramStatistics grams(const Tensor& image) const;

  // Validation shared by every entry point: (3, H, W), finite, large enough.
  void check_input(const Tensor& image) const;

 private:
  enum class LayerKind { kConv, kRelu, kPool };
  struct Layer {
    LayerKind kind;
    std::string name;
    ag::Var weight;
    ag::Var bias;
  };

  FeatureExtractor() = default;

  ExtractorConfig config_;
  std::vector<Layer> layers_;
  std::vector<std::string> tap_names_;
  std::vector<std::size_t> tap_layers_;  // index into layers_, in tap order
  std::vector<int> feature_counts_;
  std::string fingerprint_;
};

/// G = F F^T / M for a feature map F of shape (N, M), or (N, H, W) with
/// M = H W. Exactly symmetric, and bitwise unchanged by any permutation of
/// the M positions.
Tensor gram(const Tensor& features);

// Named convolution widths of VGG-19, in network order: {"conv1_1", 64}, ...
const std::vector<std::pair<std::string, int>>& vgg19_convolutions();

}  // namespace mtex

#endif  // MTEX_FEATURE_EXTRACTOR_HPP_

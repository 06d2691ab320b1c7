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

#include "mtex/feature_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mtex/archive.hpp"
#include "mtex/errors.hpp"
#include "mtex/material_io.hpp"
#include "mtex/rng.hpp"

namespace mtex {
namespace {

constexpr std::uint64_t kMockSeed = 0x6d6f636b2d766767ULL;

std::string hex64(std::uint64_t v) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(v));
  return buffer;
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = uniform_real(rng, -bound, bound);
  return t;
}

}  // namespace

Tensor gram(const Tensor& features) {
  if (!features.all_finite()) throw NumericalError("gram: non-finite features");
  ag::NoGradGuard no_grad;
  return ag::gram(ag::constant(features)).value();
}

const std::vector<std::pair<std::string, int>>& vgg19_convolutions() {
  static const std::vector<std::pair<std::string, int>> convs = {
      {"conv1_1", 64},  {"conv1_2", 64},  {"conv2_1", 128}, {"conv2_2", 128},
      {"conv3_1", 256}, {"conv3_2", 256}, {"conv3_3", 256}, {"conv3_4", 256},
      {"conv4_1", 512}, {"conv4_2", 512}, {"conv4_3", 512}, {"conv4_4", 512},
      {"conv5_1", 512}, {"conv5_2", 512}, {"conv5_3", 512}, {"conv5_4", 512},
  };
  return convs;
}

FeatureExtractor FeatureExtractor::load(const ExtractorConfig& config) {
  for (double s : config.stddev) {
    if (!(s > 0.0)) throw ConfigError("extractor normalization std must be > 0");
  }
  FeatureExtractor ex;
  ex.config_ = config;
  std::uint64_t weights_hash = 0;

  if (config.is_mock()) {
    Rng rng(kMockSeed);
    auto conv = [&rng](const std::string& name, int out, int in) {
      const double bound = std::sqrt(6.0 / (in * 9));
      Tensor w = uniform_tensor({out, in, 3, 3}, bound, rng);
      Tensor b = uniform_tensor({out}, 0.1, rng);
      return Layer{LayerKind::kConv, name, ag::constant(std::move(w)), ag::constant(std::move(b))};
    };
    ex.layers_.push_back(conv("conv1", 8, 3));
    ex.layers_.push_back({LayerKind::kRelu, "relu1", {}, {}});
    ex.layers_.push_back({LayerKind::kPool, "pool1", {}, {}});
    ex.layers_.push_back(conv("conv2", 16, 8));
    ex.layers_.push_back({LayerKind::kRelu, "relu2", {}, {}});
    if (ex.config_.taps.empty()) ex.config_.taps = {"relu1", "relu2"};
    weights_hash = kMockSeed;
  } else {
    const TensorArchive archive = read_archive(config.weights_source);
    const int block_sizes[5] = {2, 2, 4, 4, 4};
    std::size_t conv_index = 0;
    int in_channels = 3;
    bool complete = true;
    for (int block = 1; block <= 5 && complete; ++block) {
      for (int i = 1; i <= block_sizes[block - 1]; ++i, ++conv_index) {
        const std::string name = vgg19_convolutions()[conv_index].first;
        const ArchiveEntry* w = archive.find(name + ".weight");
        const ArchiveEntry* b = archive.find(name + ".bias");
        if (!w || !b) {
          complete = false;  // truncated networks are fine if no tap needs the rest
          break;
        }
        const Shape& ws = w->values.shape();
        if (ws.size() != 4 || ws[1] != in_channels || ws[2] != 3 || ws[3] != 3 ||
            b->values.shape() != Shape{ws[0]}) {
          throw FormatError("weights '" + name + "' have shape " + shape_string(ws) +
                            " (expected (out, " + std::to_string(in_channels) + ", 3, 3))");
        }
        in_channels = ws[0];
        weights_hash ^= mtex::fingerprint(w->values) + 0x9e3779b97f4a7c15ULL + (weights_hash << 6);
        ex.layers_.push_back({LayerKind::kConv, name, ag::constant(w->values), ag::constant(b->values)});
        ex.layers_.push_back({LayerKind::kRelu, "relu" + name.substr(4), {}, {}});
      }
      if (complete) ex.layers_.push_back({LayerKind::kPool, "pool" + std::to_string(block), {}, {}});
    }
    if (ex.layers_.empty()) throw FormatError("'" + config.weights_source + "' holds no conv1_1 weights");
    if (ex.config_.taps.empty()) ex.config_.taps = {"relu1_1", "pool1", "pool2", "pool3", "pool4"};
  }

  std::set<std::string> seen;
  for (const std::string& tap : ex.config_.taps) {
    if (!seen.insert(tap).second) throw ConfigError("tap layer '" + tap + "' listed twice");
    auto it = std::find_if(ex.layers_.begin(), ex.layers_.end(), [&](const Layer& l) { return l.name == tap; });
    if (it == ex.layers_.end()) throw ConfigError("tap layer '" + tap + "' not found in the network");
    ex.tap_names_.push_back(tap);
    ex.tap_layers_.push_back(static_cast<std::size_t>(it - ex.layers_.begin()));
  }

  // Feature widths come from the loaded weight shapes.
  for (std::size_t layer : ex.tap_layers_) {
    int channels = 3;
    for (std::size_t i = 0; i <= layer; ++i) {
      if (ex.layers_[i].kind == LayerKind::kConv) channels = ex.layers_[i].weight.value().dim(0);
    }
    ex.feature_counts_.push_back(channels);
  }

  std::string fp = (config.is_mock() ? "mock:" : "vgg19:") + hex64(weights_hash) + "|taps=";
  for (const std::string& tap : ex.tap_names_) fp += tap + ",";
  fp += config.pooling == PoolingMode::kAverage ? "|pool=average|norm=" : "|pool=max|norm=";
  char buffer[64];
  for (int c = 0; c < 3; ++c) {
    std::snprintf(buffer, sizeof buffer, "%.6g/%.6g,", config.mean[c], config.stddev[c]);
    fp += buffer;
  }
  ex.fingerprint_ = fp;
  return ex;
}

std::vector<std::pair<int, int>> FeatureExtractor::tap_sizes(int height, int width) const {
  std::vector<std::pair<int, int>> sizes(tap_layers_.size());
  for (std::size_t t = 0; t < tap_layers_.size(); ++t) {
    int h = height, w = width;
    for (std::size_t i = 0; i <= tap_layers_[t]; ++i) {
      if (layers_[i].kind == LayerKind::kPool) {
        h /= 2;
        w /= 2;
      }
    }
    sizes[t] = {h, w};
  }
  return sizes;
}

std::pair<const Tensor*, const Tensor*> FeatureExtractor::conv_parameters(const std::string& name) const {
  for (const Layer& layer : layers_) {
    if (layer.kind == LayerKind::kConv && layer.name == name) return {&layer.weight.value(), &layer.bias.value()};
  }
  return {nullptr, nullptr};
}

int FeatureExtractor::min_size() const {
  const std::size_t last = *std::max_element(tap_layers_.begin(), tap_layers_.end());
  int size = 1;
  for (std::size_t i = 0; i <= last; ++i) {
    if (layers_[i].kind == LayerKind::kPool) size *= 2;
  }
  return size;
}

void FeatureExtractor::check_input(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("extractor input must be (3, H, W), got " + shape_string(image.shape()));
  }
  if (!image.all_finite()) throw NumericalError("extractor input contains non-finite values");
  for (const auto& [h, w] : tap_sizes(image.dim(1), image.dim(2))) {
    if (h < 1 || w < 1) {
      throw ShapeError("image " + std::to_string(image.dim(1)) + "x" + std::to_string(image.dim(2)) +
                       " is too small for the extractor (minimum " + std::to_string(min_size()) + "x" +
                       std::to_string(min_size()) + ")");
    }
  }
}

std::vector<ag::Var> FeatureExtractor::forward(const ag::Var& image) const {
  check_input(image.value());
  const std::size_t last = *std::max_element(tap_layers_.begin(), tap_layers_.end());
  std::vector<ag::Var> activations;
  activations.reserve(last + 1);
  ag::Var x = ag::normalize_channels(image, config_.mean, config_.stddev);
  for (std::size_t i = 0; i <= last; ++i) {
    const Layer& layer = layers_[i];
    switch (layer.kind) {
      case LayerKind::kConv:
        x = ag::conv2d(x, layer.weight, layer.bias);
        break;
      case LayerKind::kRelu:
        x = ag::relu(x);
        break;
      case LayerKind::kPool:
        x = config_.pooling == PoolingMode::kAverage ? ag::avg_pool2(x) : ag::max_pool2(x);
        break;
    }
    activations.push_back(x);
  }
  std::vector<ag::Var> taps;
  for (std::size_t layer : tap_layers_) taps.push_back(activations[layer]);
  return taps;
}

LayerFeatures FeatureExtractor::extract(const Tensor& image) const {
  ag::NoGradGuard no_grad;
  LayerFeatures out;
  for (const ag::Var& tap : forward(ag::constant(image))) {
    const Tensor& v = tap.value();
    out.maps.emplace_back(Shape{v.dim(0), v.dim(1) * v.dim(2)},
                          std::vector<double>(v.data(), v.data() + v.size()));
  }
  return out;
}

GramStatistics FeatureExtractor::grams(const Tensor& image) const {
  ag::NoGradGuard no_grad;
  GramStatistics out;
  for (const ag::Var& tap : forward(ag::constant(image))) {
    out.grams.push_back(ag::gram(tap).value());
    out.feature_counts.push_back(tap.value().dim(0));
  }
  return out;
}

}  // namespace mtex

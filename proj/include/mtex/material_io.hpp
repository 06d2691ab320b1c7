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

#ifndef MTEX_MATERIAL_IO_HPP_
#define MTEX_MATERIAL_IO_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtex/tensor.hpp"
#include "mtex/triplet.hpp"

namespace mtex {

struct ChannelRole {
  std::string name;
  int channels = 1;  // 1 or 3

  bool operator==(const ChannelRole&) const = default;
};

/// Ordered named groups of scalar planes (albedo:3, normal:3, roughness:1, ...).
class ChannelLayout {
 public:
  ChannelLayout() = default;
  explicit ChannelLayout(std::vector<ChannelRole> roles);

  // `n` one-channel roles named c0, c1, ...
  static ChannelLayout anonymous(int n);

  const std::vector<ChannelRole>& roles() const { return roles_; }
  int total_channels() const { return total_; }
  // First plane of role `index`.
  int offset(std::size_t index) const;
  std::optional<std::size_t> find(const std::string& name) const;
  // One group per role; 1-channel roles replicated to (c, c, c).
  std::vector<TripletIndex> role_groups() const;

  bool operator==(const ChannelLayout&) const = default;

 private:
  std::vector<ChannelRole> roles_;
  int total_ = 0;
};

/// H x W x n field of values in [0, 1], stored as an (n, H, W) tensor.
class MaterialStack {
 public:
  MaterialStack() = default;
  MaterialStack(Tensor data, ChannelLayout layout);

  const Tensor& data() const { return data_; }
  const ChannelLayout& layout() const { return layout_; }
  int channels() const { return data_.dim(0); }
  int height() const { return data_.dim(1); }
  int width() const { return data_.dim(2); }

  // Per-channel arithmetic mean.
  std::vector<double> channel_means() const;

  friend bool operator==(const MaterialStack& a, const MaterialStack& b) {
    return a.data_ == b.data_ && a.layout_ == b.layout_;
  }

 private:
  Tensor data_;
  ChannelLayout layout_;
};

struct RoleSource {
  std::string name;
  std::filesystem::path path;
  int channels = 1;
};

/// Which files make up a material, and how to write one back.
///
/// JSON document; role entries keep their document order:
///   { "albedo": {"path": "albedo.png", "channels": 3},
///     "roughness": {"path": "rough.png", "channels": 1},
///     "size": [H, W], "bit_depth": 8, "output_dir": "out" }
/// `size`, `bit_depth` and `output_dir` are optional and reserved. Relative
/// paths resolve against the manifest's directory.
struct MaterialManifest {
  std::vector<RoleSource> roles;
  std::optional<std::pair<int, int>> size;  // (H, W) resampling target
  int bit_depth = 8;
  std::filesystem::path output_dir;

  ChannelLayout layout() const;

  static MaterialManifest parse(const std::string& text, const std::filesystem::path& base_dir);
  static MaterialManifest read(const std::filesystem::path& path);
  // One <role>.png per role under `dir`.
  static MaterialManifest for_output(const ChannelLayout& layout, const std::filesystem::path& dir,
                                     int bit_depth);
  std::string to_json() const;
};

/// Reads every role file and stacks the planes in manifest order.
/// Warnings (e.g. a 3-channel file feeding a 1-channel role) are appended to
/// `warnings` when given.
MaterialStack load_material(const MaterialManifest& manifest,
                            std::vector<std::string>* warnings = nullptr);

/// Writes one PNG per role into manifest.output_dir plus a manifest.json that
/// reloads them. Values are clamped to [0, 1] and rounded half up to the
/// manifest bit depth. Returns the reloadable manifest.
MaterialManifest save_material(const MaterialStack& stack, const MaterialManifest& manifest);
// Same, for planes that have not been validated into a MaterialStack.
MaterialManifest save_material(const Tensor& planes, const ChannelLayout& layout,
                               const MaterialManifest& manifest);

// Integer sample code for v in [0, 1] at the given bit depth.
int quantize(double v, int bit_depth);

/// Pure channel gather: plane k of the result is plane t[k] of the stack.
Tensor apply_triplet(const MaterialStack& stack, const TripletIndex& t);
Tensor apply_triplet(const Tensor& planes, const TripletIndex& t);

// Half-pixel-centered bilinear resampling of every plane.
Tensor resample_bilinear(const Tensor& planes, int height, int width);

// FNV-1a over shape and raw values; identifies exemplars in caches.
std::uint64_t fingerprint(const Tensor& planes);

}  // namespace mtex

#endif  // MTEX_MATERIAL_IO_HPP_

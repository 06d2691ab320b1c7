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

#ifndef MTEX_IMAGE_IO_HPP_
#define MTEX_IMAGE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mtex {

// Interleaved integer samples as stored in a lossless raster file.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 (gray) or 3 (RGB); alpha is dropped on read
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;

  std::uint16_t sample(int y, int x, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  int max_value() const { return (1 << bit_depth) - 1; }
};

// PNG, gray/gray-alpha/RGB/RGBA at 8 or 16 bits. Palette and sub-byte depths
// raise FormatError.
RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& image);

}  // namespace mtex

#endif  // MTEX_IMAGE_IO_HPP_

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

#ifndef MTEX_ARCHIVE_HPP_
#define MTEX_ARCHIVE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mtex/tensor.hpp"

namespace mtex {

enum class ElementType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

struct ArchiveEntry {
  std::string name;
  Tensor values;
  ElementType type = ElementType::kFloat32;
};

/// Named-array container shared by extractor weights and generator models.
///
/// Little-endian layout:
///   "MTXA" | u32 version (1) | u64 metadata bytes | metadata (UTF-8 JSON)
///   | u32 entry count | entries...
/// entry:
///   u32 name bytes | name | u8 type (1 = f32, 2 = f64) | u32 rank
///   | u32 dims[rank] | raw values, row-major
struct TensorArchive {
  std::string metadata = "{}";
  std::vector<ArchiveEntry> entries;

  const ArchiveEntry* find(const std::string& name) const;
};

void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
// IoError when the file is missing or truncated, FormatError on bad magic/version.
TensorArchive read_archive(const std::filesystem::path& path);

}  // namespace mtex

#endif  // MTEX_ARCHIVE_HPP_

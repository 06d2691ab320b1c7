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

#include "mtex/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mtex/errors.hpp"

namespace mtex {
namespace {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'T', 'X', 'A'};
constexpr std::uint32_t kVersion = 1;
// Guards against absurd allocations from corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

class Reader {
 public:
  Reader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  template <typename T>
  T get() {
    T value{};
    bytes(&value, sizeof value);
    return value;
  }

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IoError("archive '" + path_.string() + "' is truncated");
    }
  }

 private:
  std::ifstream& in_;
  const std::filesystem::path& path_;
};

}  // namespace

const ArchiveEntry* TensorArchive::find(const std::string& name) const {
  for (const ArchiveEntry& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write archive '" + path.string() + "'");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, archive.metadata.size());
  out.write(archive.metadata.data(), static_cast<std::streamsize>(archive.metadata.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(archive.entries.size()));
  for (const ArchiveEntry& e : archive.entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.type));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.values.rank()));
    for (int d : e.values.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    if (e.type == ElementType::kFloat64) {
      out.write(reinterpret_cast<const char*>(e.values.data()),
                static_cast<std::streamsize>(e.values.size() * sizeof(double)));
    } else {
      for (double v : e.values.values()) put<float>(out, static_cast<float>(v));
    }
  }
  if (!out) throw IoError("failed writing archive '" + path.string() + "'");
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive '" + path.string() + "'");
  Reader r(in, path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("'" + path.string() + "' is not an MTXA archive");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError("archive '" + path.string() + "' has unsupported version " + std::to_string(version));
  }
  TensorArchive archive;
  const auto meta_size = r.get<std::uint64_t>();
  if (meta_size > (std::uint64_t{1} << 30)) throw FormatError("archive metadata block is implausibly large");
  archive.metadata.resize(meta_size);
  r.bytes(archive.metadata.data(), meta_size);
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    ArchiveEntry e;
    const auto name_size = r.get<std::uint32_t>();
    if (name_size > 4096) throw FormatError("archive entry name is implausibly long");
    e.name.resize(name_size);
    r.bytes(e.name.data(), name_size);
    const auto type = r.get<std::uint8_t>();
    if (type != 1 && type != 2) throw FormatError("archive entry '" + e.name + "' has unknown element type");
    e.type = static_cast<ElementType>(type);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw FormatError("archive entry '" + e.name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::uint64_t elements = 1;
    for (auto& d : shape) {
      d = static_cast<int>(r.get<std::uint32_t>());
      elements *= static_cast<std::uint64_t>(d);
    }
    if (elements > kMaxElements) throw FormatError("archive entry '" + e.name + "' is implausibly large");
    e.values = Tensor(shape);
    if (e.type == ElementType::kFloat64) {
      r.bytes(e.values.data(), e.values.size() * sizeof(double));
    } else {
      std::vector<float> buffer(e.values.size());
      r.bytes(buffer.data(), buffer.size() * sizeof(float));
      for (std::size_t j = 0; j < buffer.size(); ++j) e.values[j] = buffer[j];
    }
    archive.entries.push_back(std::move(e));
  }
  return archive;
}

}  // namespace mtex

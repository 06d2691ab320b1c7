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

#include "mtex/material_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mtex/errors.hpp"
#include "mtex/image_io.hpp"

namespace mtex {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void check_bit_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw FormatError("unsupported bit depth " + std::to_string(bit_depth) + " (expected 8 or 16)");
  }
}

}  // namespace

ChannelLayout::ChannelLayout(std::vector<ChannelRole> roles) : roles_(std::move(roles)) {
  std::set<std::string> names;
  for (const ChannelRole& role : roles_) {
    if (role.name.empty()) throw ConfigError("channel layout: empty role name");
    if (!names.insert(role.name).second) throw ConfigError("channel layout: duplicate role '" + role.name + "'");
    if (role.channels != 1 && role.channels != 3) {
      throw ConfigError("channel layout: role '" + role.name + "' has " + std::to_string(role.channels) +
                        " channels (expected 1 or 3)");
    }
    total_ += role.channels;
  }
  if (total_ < 1) throw ConfigError("channel layout: no channels");
}

ChannelLayout ChannelLayout::anonymous(int n) {
  std::vector<ChannelRole> roles;
  for (int c = 0; c < n; ++c) roles.push_back({"c" + std::to_string(c), 1});
  return ChannelLayout(std::move(roles));
}

int ChannelLayout::offset(std::size_t index) const {
  int off = 0;
  for (std::size_t i = 0; i < index; ++i) off += roles_.at(i).channels;
  return off;
}

std::optional<std::size_t> ChannelLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < roles_.size(); ++i) {
    if (roles_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<TripletIndex> ChannelLayout::role_groups() const {
  std::vector<TripletIndex> groups;
  int off = 0;
  for (const ChannelRole& role : roles_) {
    if (role.channels == 3) {
      groups.push_back({{off, off + 1, off + 2}});
    } else {
      groups.push_back({{off, off, off}});
    }
    off += role.channels;
  }
  return groups;
}

MaterialStack::MaterialStack(Tensor data, ChannelLayout layout)
    : data_(std::move(data)), layout_(std::move(layout)) {
  if (data_.rank() != 3) throw ShapeError("material stack must be (n, H, W), got " + shape_string(data_.shape()));
  if (data_.dim(1) < 1 || data_.dim(2) < 1) throw ShapeError("material stack has empty spatial extent");
  if (data_.dim(0) != layout_.total_channels()) {
    throw ShapeError("material stack has " + std::to_string(data_.dim(0)) + " planes but layout declares " +
                     std::to_string(layout_.total_channels()));
  }
  for (double v : data_.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw FormatError("material stack value outside [0, 1]: " + std::to_string(v));
    }
  }
}

std::vector<double> MaterialStack::channel_means() const {
  std::vector<double> means(static_cast<std::size_t>(channels()));
  for (int c = 0; c < channels(); ++c) {
    double s = 0.0;
    for (double v : data_.plane(c)) s += v;
    means[c] = s / (static_cast<double>(height()) * width());
  }
  return means;
}

ChannelLayout MaterialManifest::layout() const {
  std::vector<ChannelRole> out;
  for (const RoleSource& r : roles) out.push_back({r.name, r.channels});
  return ChannelLayout(std::move(out));
}

MaterialManifest MaterialManifest::parse(const std::string& text, const fs::path& base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("material manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("material manifest must be a JSON object");
  MaterialManifest m;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "size") {
        if (!value.is_array() || value.size() != 2) throw ConfigError("manifest 'size' must be [H, W]");
        m.size = std::make_pair(value[0].get<int>(), value[1].get<int>());
        if (m.size->first < 1 || m.size->second < 1) throw ConfigError("manifest 'size' must be positive");
      } else if (key == "bit_depth") {
        m.bit_depth = value.get<int>();
        check_bit_depth(m.bit_depth);
      } else if (key == "output_dir") {
        fs::path p = value.get<std::string>();
        m.output_dir = p.is_absolute() ? p : base_dir / p;
      } else {
        if (!value.is_object() || !value.contains("path")) {
          throw ConfigError("manifest role '" + key + "' must be {\"path\": ..., \"channels\": ...}");
        }
        fs::path p = value.at("path").get<std::string>();
        m.roles.push_back({key, p.is_absolute() ? p : base_dir / p, value.value("channels", 1)});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("material manifest: ") + e.what());
  }
  if (m.roles.empty()) throw ConfigError("material manifest declares no roles");
  (void)m.layout();  // validates role names and counts
  return m;
}

MaterialManifest MaterialManifest::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open material manifest '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

MaterialManifest MaterialManifest::for_output(const ChannelLayout& layout, const fs::path& dir,
                                              int bit_depth) {
  check_bit_depth(bit_depth);
  MaterialManifest m;
  for (const ChannelRole& role : layout.roles()) {
    m.roles.push_back({role.name, dir / (role.name + ".png"), role.channels});
  }
  m.bit_depth = bit_depth;
  m.output_dir = dir;
  return m;
}

std::string MaterialManifest::to_json() const {
  ordered_json doc;
  for (const RoleSource& r : roles) {
    const fs::path rel = output_dir.empty() ? r.path : r.path.lexically_relative(output_dir);
    doc[r.name] = {{"path", rel.string()}, {"channels", r.channels}};
  }
  if (size) doc["size"] = {size->first, size->second};
  doc["bit_depth"] = bit_depth;
  return doc.dump(2);
}

MaterialStack load_material(const MaterialManifest& manifest, std::vector<std::string>* warnings) {
  const ChannelLayout layout = manifest.layout();
  std::vector<Tensor> role_planes;
  int height = 0, width = 0;
  for (const RoleSource& role : manifest.roles) {
    if (!fs::exists(role.path)) {
      throw IoError("material role '" + role.name + "': file not found '" + role.path.string() + "'");
    }
    const RasterImage image = read_png(role.path);
    check_bit_depth(image.bit_depth);
    int take = role.channels;
    if (image.channels != role.channels) {
      if (role.channels == 1 && image.channels == 3) {
        if (warnings) {
          warnings->push_back("role '" + role.name + "': 3-channel file '" + role.path.string() +
                              "' used for a 1-channel role; taking plane 0");
        }
      } else {
        throw FormatError("role '" + role.name + "' expects " + std::to_string(role.channels) +
                          " channels but '" + role.path.string() + "' has " + std::to_string(image.channels));
      }
    }
    Tensor planes({take, image.height, image.width});
    const double max_value = image.max_value();
    for (int c = 0; c < take; ++c) {
      for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) planes.at(c, y, x) = image.sample(y, x, c) / max_value;
      }
    }
    if (manifest.size) {
      const auto [th, tw] = *manifest.size;
      if (image.height != th || image.width != tw) planes = resample_bilinear(planes, th, tw);
    } else if (role_planes.empty()) {
      height = image.height;
      width = image.width;
    } else if (image.height != height || image.width != width) {
      throw ShapeError("role '" + role.name + "' is " + std::to_string(image.height) + "x" +
                       std::to_string(image.width) + " but earlier maps are " + std::to_string(height) + "x" +
                       std::to_string(width) + "; set 'size' in the manifest to resample");
    }
    role_planes.push_back(std::move(planes));
  }
  if (manifest.size) std::tie(height, width) = *manifest.size;

  Tensor data({layout.total_channels(), height, width});
  std::size_t offset = 0;
  for (const Tensor& planes : role_planes) {
    std::copy(planes.data(), planes.data() + planes.size(), data.data() + offset);
    offset += planes.size();
  }
  return MaterialStack(std::move(data), layout);
}

int quantize(double v, int bit_depth) {
  const int max_value = (1 << bit_depth) - 1;
  const double clamped = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  return static_cast<int>(std::floor(clamped * max_value + 0.5));
}

MaterialManifest save_material(const MaterialStack& stack, const MaterialManifest& manifest) {
  return save_material(stack.data(), stack.layout(), manifest);
}

MaterialManifest save_material(const Tensor& planes, const ChannelLayout& layout,
                               const MaterialManifest& manifest) {
  check_bit_depth(manifest.bit_depth);
  if (manifest.layout() != layout) throw ConfigError("save_material: stack layout does not match manifest roles");
  if (planes.rank() != 3 || planes.dim(0) != layout.total_channels()) {
    throw ShapeError("save_material: planes " + shape_string(planes.shape()) + " do not match layout");
  }
  fs::path dir = manifest.output_dir;
  if (dir.empty() && !manifest.roles.empty()) dir = manifest.roles.front().path.parent_path();
  std::error_code ec;
  if (!dir.empty()) fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  const int height = planes.dim(1), width = planes.dim(2);
  MaterialManifest written = manifest;
  written.output_dir = dir;
  written.size.reset();
  int offset = 0;
  for (RoleSource& role : written.roles) {
    if (!manifest.output_dir.empty()) role.path = manifest.output_dir / (role.name + ".png");
    RasterImage image;
    image.width = width;
    image.height = height;
    image.channels = role.channels;
    image.bit_depth = manifest.bit_depth;
    image.samples.resize(static_cast<std::size_t>(width) * height * role.channels);
    std::size_t i = 0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        for (int c = 0; c < role.channels; ++c) {
          image.samples[i++] = static_cast<std::uint16_t>(quantize(planes.at(offset + c, y, x), image.bit_depth));
        }
      }
    }
    write_png(role.path, image);
    offset += role.channels;
  }
  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write '" + manifest_path.string() + "'");
  out << written.to_json() << '\n';
  return written;
}

Tensor apply_triplet(const MaterialStack& stack, const TripletIndex& t) {
  return apply_triplet(stack.data(), t);
}

Tensor apply_triplet(const Tensor& planes, const TripletIndex& t) {
  const int n = planes.dim(0);
  if (!t.within(n)) {
    throw std::out_of_range("triplet (" + t.to_string() + ") outside [0, " + std::to_string(n) + ")");
  }
  Tensor out({3, planes.dim(1), planes.dim(2)});
  for (int k = 0; k < 3; ++k) {
    auto src = planes.plane(t[k]);
    std::copy(src.begin(), src.end(), out.plane(k).begin());
  }
  return out;
}

Tensor resample_bilinear(const Tensor& planes, int height, int width) {
  const int channels = planes.dim(0), sh = planes.dim(1), sw = planes.dim(2);
  Tensor out({channels, height, width});
  const double fy = static_cast<double>(sh) / height;
  const double fx = static_cast<double>(sw) / width;
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, static_cast<double>(sw - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = sx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = planes.at(c, y0, x0) * (1 - wx) + planes.at(c, y0, x1) * wx;
        const double bottom = planes.at(c, y1, x0) * (1 - wx) + planes.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

std::uint64_t fingerprint(const Tensor& planes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 0x100000001b3ULL;
    }
  };
  for (int d : planes.shape()) mix(&d, sizeof d);
  mix(planes.data(), planes.size() * sizeof(double));
  return hash;
}

}  // namespace mtex

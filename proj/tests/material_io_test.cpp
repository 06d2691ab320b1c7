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

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

#include "mtex/errors.hpp"
#include "mtex/image_io.hpp"
#include "test_support.hpp"

namespace mtex {
namespace {

namespace fs = std::filesystem;
using testing::random_stack;
using testing::random_tensor;
using testing::TempDir;

RasterImage constant_raster(int h, int w, int channels, int bit_depth, std::uint16_t value) {
  RasterImage img;
  img.height = h;
  img.width = w;
  img.channels = channels;
  img.bit_depth = bit_depth;
  img.samples.assign(static_cast<std::size_t>(h) * w * channels, value);
  return img;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

TEST(ChannelLayoutTest, Invariants) {
  EXPECT_THROW(ChannelLayout({{"albedo", 3}, {"albedo", 1}}), ConfigError);
  EXPECT_THROW(ChannelLayout({{"", 1}}), ConfigError);
  EXPECT_THROW(ChannelLayout({{"normal", 2}}), ConfigError);
  EXPECT_THROW(ChannelLayout(std::vector<ChannelRole>{}), ConfigError);
  const ChannelLayout layout({{"albedo", 3}, {"roughness", 1}, {"normal", 3}});
  EXPECT_EQ(layout.total_channels(), 7);
  EXPECT_EQ(layout.offset(2), 4);
  const auto groups = layout.role_groups();
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[1], (TripletIndex{{3, 3, 3}}));
  EXPECT_EQ(groups[2], (TripletIndex{{4, 5, 6}}));
}

TEST(MaterialStackTest, RejectsOutOfRangeAndMismatchedLayout) {
  EXPECT_THROW(MaterialStack(Tensor({2, 2, 2}, 1.5), ChannelLayout::anonymous(2)), FormatError);
  EXPECT_THROW(MaterialStack(Tensor({2, 2, 2}, 0.5), ChannelLayout::anonymous(3)), ShapeError);
  Tensor nan_tensor({1, 1, 1}, std::nan(""));
  EXPECT_THROW(MaterialStack(nan_tensor, ChannelLayout::anonymous(1)), FormatError);
}

TEST(LoadMaterialTest, PbrManifestGivesNineChannels) {
  TempDir dir("pbr");
  const std::pair<const char*, int> roles[] = {
      {"albedo", 3}, {"normal", 3}, {"roughness", 1}, {"metalness", 1}, {"ao", 1}};
  std::string manifest = "{";
  for (const auto& [name, channels] : roles) {
    write_png(dir.path() / (std::string(name) + ".png"), constant_raster(8, 6, channels, 8, 17));
    manifest += "\"" + std::string(name) + "\": {\"path\": \"" + name + ".png\", \"channels\": " +
                std::to_string(channels) + "},";
  }
  manifest.back() = '}';
  write_text(dir.path() / "m.json", manifest);
  const MaterialStack stack = load_material(MaterialManifest::read(dir.path() / "m.json"));
  EXPECT_EQ(stack.channels(), 9);
  EXPECT_EQ(stack.height(), 8);
  EXPECT_EQ(stack.width(), 6);
  EXPECT_EQ(stack.layout().roles()[2].name, "roughness");
}

TEST(LoadMaterialTest, SingleZeroPlane) {
  TempDir dir("zero");
  write_png(dir.path() / "r.png", constant_raster(4, 4, 1, 8, 0));
  write_text(dir.path() / "m.json", R"({"roughness": {"path": "r.png", "channels": 1}})");
  const MaterialStack stack = load_material(MaterialManifest::read(dir.path() / "m.json"));
  EXPECT_EQ(stack.data().shape(), (Shape{1, 4, 4}));
  for (double v : stack.data().values()) EXPECT_EQ(v, 0.0);
}

TEST(LoadMaterialTest, EightBitScaling) {
  TempDir dir("scale");
  RasterImage img = constant_raster(2, 3, 1, 8, 0);
  for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = static_cast<std::uint16_t>(i * 51);
  img.samples[0] = 128;
  img.samples[5] = 255;
  write_png(dir.path() / "r.png", img);
  write_text(dir.path() / "m.json", R"({"r": {"path": "r.png", "channels": 1}})");
  const MaterialStack stack = load_material(MaterialManifest::read(dir.path() / "m.json"));
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    EXPECT_EQ(stack.data()[i], static_cast<double>(img.samples[i]) / 255.0);
  }
  EXPECT_EQ(stack.data()[5], 1.0);
  EXPECT_EQ(stack.data()[0], 128.0 / 255.0);
}

TEST(LoadMaterialTest, ThreeChannelFileForScalarRoleWarns) {
  TempDir dir("warn");
  RasterImage img = constant_raster(2, 2, 3, 16, 0);
  for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = static_cast<std::uint16_t>(1000 * (i % 3));
  write_png(dir.path() / "rgb.png", img);
  write_text(dir.path() / "m.json", R"({"roughness": {"path": "rgb.png", "channels": 1}})");
  std::vector<std::string> warnings;
  const MaterialStack stack = load_material(MaterialManifest::read(dir.path() / "m.json"), &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("plane 0"), std::string::npos);
  for (double v : stack.data().values()) EXPECT_EQ(v, 0.0);
}

TEST(LoadMaterialTest, ErrorPaths) {
  TempDir dir("errors");
  write_png(dir.path() / "a.png", constant_raster(4, 4, 3, 8, 9));
  write_png(dir.path() / "b.png", constant_raster(5, 4, 1, 8, 9));
  write_png(dir.path() / "gray.png", constant_raster(4, 4, 1, 8, 9));

  write_text(dir.path() / "missing.json", R"({"albedo": {"path": "nope.png", "channels": 3}})");
  try {
    load_material(MaterialManifest::read(dir.path() / "missing.json"));
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.png"), std::string::npos);
  }

  write_text(dir.path() / "sizes.json",
             R"({"albedo": {"path": "a.png", "channels": 3}, "r": {"path": "b.png", "channels": 1}})");
  EXPECT_THROW(load_material(MaterialManifest::read(dir.path() / "sizes.json")), ShapeError);

  write_text(dir.path() / "gray.json", R"({"albedo": {"path": "gray.png", "channels": 3}})");
  EXPECT_THROW(load_material(MaterialManifest::read(dir.path() / "gray.json")), FormatError);

  EXPECT_THROW(MaterialManifest::parse(R"({"a": {"path": "a.png", "channels": 3}, "bit_depth": 12})", dir.path()),
               FormatError);
  EXPECT_THROW(MaterialManifest::parse("[1, 2]", dir.path()), ConfigError);
  EXPECT_THROW(MaterialManifest::read(dir.path() / "absent.json"), IoError);
}

TEST(LoadMaterialTest, ResamplesToTargetSize) {
  TempDir dir("resample");
  write_png(dir.path() / "a.png", constant_raster(4, 4, 3, 8, 51));
  write_png(dir.path() / "b.png", constant_raster(8, 2, 1, 16, 65535));
  write_text(dir.path() / "m.json", R"({"albedo": {"path": "a.png", "channels": 3},
                                         "r": {"path": "b.png", "channels": 1}, "size": [6, 6]})");
  const MaterialStack stack = load_material(MaterialManifest::read(dir.path() / "m.json"));
  EXPECT_EQ(stack.data().shape(), (Shape{4, 6, 6}));
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      EXPECT_NEAR(stack.data().at(0, y, x), 0.2, 1e-12);
      EXPECT_NEAR(stack.data().at(3, y, x), 1.0, 1e-12);
    }
  }
}

TEST(ResampleTest, BilinearOnRamp) {
  Tensor ramp({1, 1, 4});
  for (int x = 0; x < 4; ++x) ramp.at(0, 0, x) = x;
  const Tensor up = resample_bilinear(ramp, 1, 8);
  // Half-pixel centers: output x maps to (x + 0.5) / 2 - 0.5, clamped to [0, 3].
  const double expected[8] = {0.0, 0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.0};
  for (int x = 0; x < 8; ++x) EXPECT_NEAR(up.at(0, 0, x), expected[x], 1e-12);
}

TEST(SaveMaterialTest, RoundTripWithinQuantizationStep) {
  TempDir dir("roundtrip");
  for (int bits : {8, 16}) {
    const MaterialStack stack(random_tensor({5, 7, 9}, 21 + bits),
                              ChannelLayout({{"albedo", 3}, {"roughness", 1}, {"ao", 1}}));
    const auto out = MaterialManifest::for_output(stack.layout(), dir.path() / std::to_string(bits), bits);
    const MaterialManifest written = save_material(stack, out);
    const MaterialStack back = load_material(MaterialManifest::read(written.output_dir / "manifest.json"));
    ASSERT_EQ(back.data().shape(), stack.data().shape());
    EXPECT_EQ(back.layout(), stack.layout());
    const double step = 1.0 / ((1 << bits) - 1);
    for (std::size_t i = 0; i < stack.data().size(); ++i) {
      EXPECT_LE(std::abs(back.data()[i] - stack.data()[i]), step);
    }
  }
}

TEST(SaveMaterialTest, RoundsHalfUpAndClamps) {
  EXPECT_EQ(quantize(0.5, 8), 128);
  EXPECT_EQ(quantize(1.2, 8), 255);
  EXPECT_EQ(quantize(-0.3, 16), 0);
  TempDir dir("clamp");
  Tensor planes({2, 1, 2});
  planes[0] = 0.5;
  planes[1] = 1.2;
  planes[2] = -0.1;
  planes[3] = 1.0;
  const auto layout = ChannelLayout::anonymous(2);
  save_material(planes, layout, MaterialManifest::for_output(layout, dir.path(), 8));
  const RasterImage c0 = read_png(dir.path() / "c0.png");
  EXPECT_EQ(c0.sample(0, 0, 0), 128);
  EXPECT_EQ(c0.sample(0, 1, 0), 255);
  const RasterImage c1 = read_png(dir.path() / "c1.png");
  EXPECT_EQ(c1.sample(0, 0, 0), 0);
}

TEST(SaveMaterialTest, UnwritableDestination) {
  TempDir dir("unwritable");
  write_text(dir.path() / "file", "x");
  const MaterialStack stack = random_stack(1, 2, 2, 3);
  EXPECT_THROW(save_material(stack, MaterialManifest::for_output(stack.layout(), dir.path() / "file" / "sub", 8)),
               IoError);
}

TEST(ApplyTripletTest, IdentityAndDuplication) {
  const MaterialStack stack = random_stack(3, 4, 5, 31);
  EXPECT_EQ(apply_triplet(stack, {{0, 1, 2}}), stack.data());
  const Tensor gray = apply_triplet(stack, {{1, 1, 1}});
  for (int k = 0; k < 3; ++k) {
    EXPECT_TRUE(std::equal(gray.plane(k).begin(), gray.plane(k).end(), stack.data().plane(1).begin()));
  }
}

TEST(ApplyTripletTest, ConstantPlanesGatherDirectly) {
  Tensor planes({9, 3, 3});
  for (int c = 0; c < 9; ++c) {
    for (double& v : planes.plane(c)) v = c / 10.0;
  }
  const Tensor view = apply_triplet(MaterialStack(planes, ChannelLayout::anonymous(9)), {{8, 0, 4}});
  for (double v : view.plane(0)) EXPECT_EQ(v, 0.8);
  for (double v : view.plane(1)) EXPECT_EQ(v, 0.0);
  for (double v : view.plane(2)) EXPECT_EQ(v, 0.4);
  EXPECT_THROW(apply_triplet(planes, {{0, 9, 1}}), std::out_of_range);
  EXPECT_THROW(apply_triplet(planes, {{-1, 0, 1}}), std::out_of_range);
}

TEST(ApplyTripletTest, LinearityAndPermutationProperties) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const Tensor x = random_tensor({n, 3, 4}, rng(), -1, 1);
    const Tensor y = random_tensor({n, 3, 4}, rng(), -1, 1);
    const TripletIndex t{{static_cast<int>(rng() % n), static_cast<int>(rng() % n), static_cast<int>(rng() % n)}};
    const double a = 0.5 + trial, b = -1.25;

    Tensor combo(x.shape());
    for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * x[i] + b * y[i];
    const Tensor lhs = apply_triplet(combo, t);
    const Tensor tx = apply_triplet(x, t), ty = apply_triplet(y, t);
    for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_EQ(lhs[i], a * tx[i] + b * ty[i]);

    // pi(X) has plane c = X[perm[c]]; the claim is triplet(pi(X), t) = triplet(X, perm o t).
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor permuted(x.shape());
    for (int c = 0; c < n; ++c) {
      std::copy(x.plane(perm[c]).begin(), x.plane(perm[c]).end(), permuted.plane(c).begin());
    }
    const TripletIndex mapped{{perm[t[0]], perm[t[1]], perm[t[2]]}};
    EXPECT_EQ(apply_triplet(permuted, t), apply_triplet(x, mapped));
  }
}

TEST(FingerprintTest, SensitiveToValuesAndShape) {
  const Tensor a = random_tensor({2, 3, 3}, 1);
  Tensor b = a;
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  b[4] += 1e-12;
  EXPECT_NE(fingerprint(a), fingerprint(b));
  EXPECT_NE(fingerprint(Tensor({1, 2, 3})), fingerprint(Tensor({1, 3, 2})));
}

}  // namespace
}  // namespace mtex

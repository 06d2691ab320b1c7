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

#include "mtex/evaluation.hpp"

#include <gtest/gtest.h>

#include <random>

#include "mtex/errors.hpp"
#include "test_support.hpp"

namespace mtex {
namespace {

using testing::random_stack;
using testing::random_tensor;

const FeatureExtractor& mock() {
  static const FeatureExtractor ex = FeatureExtractor::load(ExtractorConfig{});
  return ex;
}

MaterialStack from_planes(const std::vector<std::vector<double>>& planes, int h, int w) {
  Tensor t({static_cast<int>(planes.size()), h, w});
  for (std::size_t c = 0; c < planes.size(); ++c) std::copy(planes[c].begin(), planes[c].end(), t.plane(static_cast<int>(c)).begin());
  return MaterialStack(t, ChannelLayout::anonymous(static_cast<int>(planes.size())));
}

TEST(EdgeMagnitudeTest, HandComputed) {
  // Ramp along x with slope 1: central difference 1 everywhere in the interior.
  Tensor ramp({4, 5});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) ramp[y * 5 + x] = x;
  }
  const Tensor e = edge_magnitude(ramp);
  EXPECT_EQ(e.shape(), (Shape{2, 3}));
  for (double v : e.values()) EXPECT_DOUBLE_EQ(v, 1.0);

  Tensor spike({3, 3});
  spike[1 * 3 + 2] = 4.0;
  spike[0 * 3 + 1] = 2.0;
  // gx = (4 - 0) / 2, gy = (0 - 2) / 2
  EXPECT_DOUBLE_EQ(edge_magnitude(spike)[0], std::sqrt(5.0));
  EXPECT_THROW(edge_magnitude(Tensor({2, 5})), ShapeError);
}

TEST(PearsonTest, KnownValues) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{5, 5, 5, 5};
  EXPECT_DOUBLE_EQ(*pearson(x, y), 1.0);
  EXPECT_DOUBLE_EQ(*pearson(x, z), -1.0);
  EXPECT_FALSE(pearson(x, c).has_value());
  const std::vector<double> u{1, 0, 0, 1}, v{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(*pearson(u, v), 0.0);
}

TEST(AlignmentTest, CopiedChannelCorrelatesPerfectly) {
  const MaterialStack base = random_stack(2, 16, 16, 1);
  Tensor t = base.data();
  std::copy(t.plane(0).begin(), t.plane(0).end(), t.plane(1).begin());
  const MaterialStack a(t, base.layout());
  const AlignmentReport r = alignment_metric(a, base);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_DOUBLE_EQ(*r.pairs[0].edge_a, 1.0);
  EXPECT_DOUBLE_EQ(*r.pairs[0].raw_a, 1.0);
}

TEST(AlignmentTest, SelfComparisonIsZero) {
  const MaterialStack a = random_stack(5, 20, 12, 2);
  const AlignmentReport r = alignment_metric(a, a);
  EXPECT_EQ(r.error, 0.0);
  EXPECT_EQ(r.raw_error, 0.0);
  EXPECT_EQ(r.pairs.size(), 10u);
  EXPECT_EQ(r.compared_pairs, 10);
  for (const PairCorrelation& p : r.pairs) {
    EXPECT_GE(*p.edge_a, -1.0);
    EXPECT_LE(*p.edge_a, 1.0);
  }
}

TEST(AlignmentTest, RotatedNoiseIsUncorrelated) {
  const int size = 128;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p0(size * size), p1(size * size);
    for (double& v : p0) v = u(rng);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) p1[y * size + x] = p0[(size - 1 - x) * size + y];
    }
    const AlignmentReport r = alignment_metric(from_planes({p0, p1}, size, size), from_planes({p0, p0}, size, size));
    EXPECT_LT(std::abs(*r.pairs[0].edge_a), 0.2) << "seed " << seed;
    EXPECT_DOUBLE_EQ(*r.pairs[0].edge_b, 1.0);
  }
}

TEST(AlignmentTest, ConstantChannelIsFlagged) {
  Tensor t = random_stack(3, 8, 8, 3).data();
  for (double& v : t.plane(1)) v = 0.5;
  const MaterialStack a(t, ChannelLayout::anonymous(3));
  const AlignmentReport r = alignment_metric(a, random_stack(3, 10, 10, 4));
  EXPECT_EQ(r.compared_pairs, 1);
  EXPECT_EQ(r.flags.size(), 2u);
  EXPECT_FALSE(r.pairs[0].edge_a.has_value());
  EXPECT_TRUE(r.to_json()["pairs"][0]["edge_a"].is_null());
  EXPECT_THROW(alignment_metric(a, random_stack(2, 8, 8, 5)), ShapeError);
}

TEST(AlignmentTest, CsvLayout) {
  const AlignmentReport r = alignment_metric(random_stack(2, 6, 6, 6), random_stack(2, 6, 6, 7));
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "i,j,edge_a,edge_b,raw_a,raw_b");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(UnbiasednessTest, GapVanishes) {
  for (int n = 1; n <= 4; ++n) {
    const MaterialStack a = random_stack(n, 16, 16, 10 + n), b = random_stack(n, 16, 16, 20 + n);
    const UnbiasednessReport r = unbiasedness_check(a, b, mock());
    EXPECT_LT(r.relative_gap, 1e-6) << "n = " << n;
    EXPECT_GT(r.exact, 0.0);
    const UnbiasednessReport same = unbiasedness_check(a, a, mock());
    EXPECT_EQ(same.exact, 0.0);
    EXPECT_EQ(same.stochastic_mean, 0.0);
    EXPECT_EQ(same.relative_gap, 0.0);
  }
}

TEST(GradcheckTest, QuadraticToy) {
  const Tensor x = random_tensor({3, 16, 16}, 30, -1.0, 1.0);
  const GradcheckReport r = gradcheck(quadratic_loss(), x, 100, 1);
  EXPECT_EQ(r.coordinates, 100);
  EXPECT_LT(r.max_scaled_error, 1e-8);
}

TEST(GradcheckTest, ThreeChannelLoss) {
  const Tensor x = random_tensor({3, 16, 16}, 31), ref = random_tensor({3, 16, 16}, 32);
  const GradcheckReport r = gradcheck(loss_3channel_fn(mock(), ref), x, 100, 2);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradcheckTest, StochasticLoss) {
  const Tensor x = random_tensor({5, 16, 16}, 33), ref = random_tensor({5, 16, 16}, 34);
  const GradcheckReport r = gradcheck(loss_stochastic_fn(mock(), ref, 7), x, 100, 3);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradcheckTest, DetectsWrongGradient) {
  DifferentiableFn wrong = [](const Tensor& x, Tensor* g) {
    if (g) {
      *g = x;
      *g *= 3.0;
    }
    return x.squared_norm();
  };
  const GradcheckReport r = gradcheck(wrong, random_tensor({50}, 1, 0.5, 1.0), 100, 1);
  EXPECT_GT(r.max_relative_error, 0.3);
  EXPECT_EQ(r.nonsmooth_coordinates, 0);
  EXPECT_EQ(gradcheck(quadratic_loss(), random_tensor({50}, 1), 100, 1).coordinates, 50);
}

TEST(GradcheckTest, KinksInsideTheStencilAreRedrawn) {
  DifferentiableFn abs_sum = [](const Tensor& x, Tensor* g) {
    double s = 0.0;
    if (g) *g = Tensor(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += std::abs(x[i]);
      if (g) (*g)[i] = x[i] > 0.0 ? 1.0 : -1.0;
    }
    return s;
  };
  Tensor x = random_tensor({60}, 5, 0.5, 1.0);
  for (std::size_t i = 0; i < 10; ++i) x[i] = (i % 2 ? 1.0 : -1.0) * 9e-6 * static_cast<double>(i + 1);
  const GradcheckReport r = gradcheck(abs_sum, x, 40, 6);
  EXPECT_EQ(r.coordinates, 40);
  EXPECT_LT(r.max_relative_error, 1e-10);

  const GradcheckReport all = gradcheck(abs_sum, x, 60, 6);
  EXPECT_EQ(all.coordinates, 50);
  EXPECT_EQ(all.nonsmooth_coordinates, 10);
}

TEST(GradcheckTest, ThreeChannelLossAcrossSeeds) {
  const FeatureExtractor ex = mock();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor x = random_tensor({3, 16, 16}, 100 + seed), ref = random_tensor({3, 16, 16}, 200 + seed);
    const GradcheckReport r = gradcheck(loss_3channel_fn(ex, ref), x, 100, seed);
    EXPECT_EQ(r.coordinates, 100);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
  }
}

}  // namespace
}  // namespace mtex

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

#include "mtex/textural_loss.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "mtex/errors.hpp"
#include "test_support.hpp"

namespace mtex {
namespace {

using testing::max_gradient_error;
using testing::random_stack;
using testing::random_tensor;
using testing::relative_difference;

// chi2.ppf(0.999, df) for df = 26 and 728.
constexpr double kChiSquare26 = 54.05196238857664;
constexpr double kChiSquare728 = 851.636244600382;

const FeatureExtractor& mock() {
  static const FeatureExtractor ex = FeatureExtractor::load(ExtractorConfig{});
  return ex;
}

Tensor gram_oracle(const Tensor& f) {
  const int n = f.dim(0);
  const int m = static_cast<int>(f.size() / n);
  Tensor g({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < m; ++p) s += f[static_cast<std::size_t>(i) * m + p] * f[static_cast<std::size_t>(j) * m + p];
      g[static_cast<std::size_t>(i) * n + j] = s / m;
    }
  }
  return g;
}

double chi_square(const std::vector<long>& counts, double expected) {
  double stat = 0.0;
  for (long c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

TEST(Loss3ChannelTest, ZeroAtIdentity) {
  const Tensor image = random_tensor({3, 16, 16}, 1);
  const LossReport r = loss_3channel(image, mock().grams(image), mock());
  EXPECT_EQ(r.total, 0.0);
  ASSERT_EQ(r.layer_terms.size(), 2u);
}

TEST(Loss3ChannelTest, ConstantImagesHandAssembled) {
  const Tensor zero({3, 8, 8}, 0.0), one({3, 8, 8}, 1.0);
  const LayerFeatures fz = mock().extract(zero), fo = mock().extract(one);
  double expected = 0.0;
  for (std::size_t l = 0; l < fz.maps.size(); ++l) {
    const Tensor gz = gram_oracle(fz.maps[l]), go = gram_oracle(fo.maps[l]);
    const double n = fz.maps[l].dim(0);
    double sq = 0.0;
    for (std::size_t i = 0; i < gz.size(); ++i) sq += (go[i] - gz[i]) * (go[i] - gz[i]);
    expected += sq / (n * n);
  }
  const LossReport r = loss_3channel(one, mock().grams(zero), mock());
  EXPECT_GT(expected, 0.0);
  EXPECT_NEAR(r.total, expected, 1e-12 * expected);
  EXPECT_NEAR(r.total, r.layer_terms[0] + r.layer_terms[1], 1e-12 * r.total);
}

TEST(Loss3ChannelTest, NonNegativeAndSymmetric) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor a = random_tensor({3, 12, 12}, seed), b = random_tensor({3, 10, 14}, seed + 100);
    const double ab = loss_3channel(a, mock().grams(b), mock()).total;
    const double ba = loss_3channel(b, mock().grams(a), mock()).total;
    EXPECT_GT(ab, 0.0);
    EXPECT_LT(relative_difference(ab, ba), 1e-12);
  }
}

TEST(Loss3ChannelTest, RejectsMismatchedReference) {
  ExtractorConfig one_tap;
  one_tap.taps = {"relu1"};
  const FeatureExtractor other = FeatureExtractor::load(one_tap);
  const Tensor image = random_tensor({3, 8, 8}, 3);
  EXPECT_THROW(loss_3channel(image, other.grams(image), mock()), ConfigError);
  GramStatistics wrong = mock().grams(image);
  wrong.feature_counts[1] = 15;
  EXPECT_THROW(loss_3channel(image, wrong, mock()), ConfigError);
}

TEST(SampleTripletTest, SingleChannel) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_triplet(1, rng), (TripletIndex{{0, 0, 0}}));
  EXPECT_THROW(sample_triplet(0, rng), std::invalid_argument);
}

TEST(SampleTripletTest, ConsumesExactlyThreeDraws) {
  Rng a(42);
  std::mt19937_64 b(42);
  sample_triplet(7, a);
  b.discard(3);
  EXPECT_EQ(a(), b());
}

TEST(SampleTripletTest, NineChannelSupportIsAllOrderedTriples) {
  Rng rng(2024);
  std::vector<long> counts(729, 0);
  for (int i = 0; i < 270000; ++i) {
    const TripletIndex t = sample_triplet(9, rng);
    ASSERT_TRUE(t.within(9));
    ++counts[t.rank(9)];
  }
  EXPECT_EQ(std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }), 729);
  EXPECT_LT(chi_square(counts, 270000.0 / 729), kChiSquare728);
  EXPECT_EQ(all_triplets(9).size(), 729u);
}

TEST(SampleTripletTest, ThreeChannelChiSquare) {
  Rng rng(7);
  std::vector<long> counts(27, 0);
  for (int i = 0; i < 270000; ++i) ++counts[sample_triplet(3, rng).rank(3)];
  EXPECT_LT(chi_square(counts, 10000.0), kChiSquare26);
}

TEST(ExactLossTest, ZeroAtIdentity) {
  for (int n = 1; n <= 4; ++n) {
    const MaterialStack a = random_stack(n, 8, 8, n);
    EXPECT_EQ(loss_nchannel_exact(a, a, mock()).total, 0.0);
  }
}

TEST(ExactLossTest, MeanOfAllTwentySevenViews) {
  const MaterialStack a = random_stack(3, 12, 12, 5), b = random_stack(3, 12, 12, 6);
  double mean = 0.0;
  for (int c0 = 0; c0 < 3; ++c0) {
    for (int c1 = 0; c1 < 3; ++c1) {
      for (int c2 = 0; c2 < 3; ++c2) {
        const TripletIndex t{{c0, c1, c2}};
        mean += loss_3channel(apply_triplet(a, t), mock().grams(apply_triplet(b, t)), mock()).total;
      }
    }
  }
  mean /= 27.0;
  const LossReport r = loss_nchannel_exact(a, b, mock());
  EXPECT_LT(relative_difference(r.total, mean), 1e-12);
  EXPECT_EQ(r.triplets.size(), 27u);
}

TEST(ExactLossTest, IdenticalPlanesCollapseToOneView) {
  Tensor pa({2, 10, 10}), pb({2, 10, 10});
  const Tensor sa = random_tensor({1, 10, 10}, 8), sb = random_tensor({1, 10, 10}, 9);
  for (int c = 0; c < 2; ++c) {
    std::copy(sa.data(), sa.data() + sa.size(), pa.plane(c).begin());
    std::copy(sb.data(), sb.data() + sb.size(), pb.plane(c).begin());
  }
  const MaterialStack a(pa, ChannelLayout::anonymous(2)), b(pb, ChannelLayout::anonymous(2));
  const Tensor view0 = apply_triplet(a, {{0, 0, 0}});
  for (const TripletIndex& t : all_triplets(2)) EXPECT_EQ(apply_triplet(a, t), view0);
  const double single = loss_3channel(view0, mock().grams(apply_triplet(b, {{0, 0, 0}})), mock()).total;
  EXPECT_LT(relative_difference(loss_nchannel_exact(a, b, mock()).total, single), 1e-12);
}

TEST(ExactLossTest, EnumerationCapAndMismatch) {
  const MaterialStack a = random_stack(7, 4, 4, 1), b = random_stack(7, 4, 4, 2);
  EXPECT_THROW(loss_nchannel_exact(a, b, mock()), ConfigError);
  EXPECT_GT(loss_nchannel_exact(a, b, mock(), {.enumeration_cap = 6, .force = true}).total, 0.0);
  EXPECT_THROW(loss_nchannel_exact(a, random_stack(6, 4, 4, 3), mock()), ShapeError);
}

TEST(ExactLossTest, ChannelPermutationInvariance) {
  const int n = 4;
  const MaterialStack a = random_stack(n, 12, 12, 11), b = random_stack(n, 12, 12, 12);
  const std::vector<int> perm{2, 0, 3, 1};
  Tensor pa(a.data().shape()), pb(b.data().shape());
  for (int c = 0; c < n; ++c) {
    std::copy(a.data().plane(perm[c]).begin(), a.data().plane(perm[c]).end(), pa.plane(c).begin());
    std::copy(b.data().plane(perm[c]).begin(), b.data().plane(perm[c]).end(), pb.plane(c).begin());
  }
  const double base = loss_nchannel_exact(a, b, mock()).total;
  const double permuted = loss_nchannel_exact(MaterialStack(pa, a.layout()), MaterialStack(pb, b.layout()), mock()).total;
  EXPECT_LT(relative_difference(base, permuted), 1e-6);
}

TEST(StochasticLossTest, SingleTripletIsThreeChannelLoss) {
  const MaterialStack a = random_stack(5, 10, 10, 13), b = random_stack(5, 10, 10, 14);
  RandomTriplets source(99);
  const LossReport r = loss_nchannel_stochastic(a, b, mock(), source);
  Rng replay(99);
  const TripletIndex t = sample_triplet(5, replay);
  ASSERT_EQ(r.triplets, std::vector<TripletIndex>{t});
  EXPECT_EQ(r.total, loss_3channel(apply_triplet(a, t), mock().grams(apply_triplet(b, t)), mock()).total);
}

TEST(StochasticLossTest, EnumeratedSourceRecoversExactLoss) {
  for (int n = 1; n <= 4; ++n) {
    const MaterialStack a = random_stack(n, 16, 16, 20 + n), b = random_stack(n, 16, 16, 40 + n);
    EnumeratedTriplets source;
    double mean = 0.0;
    for (int i = 0; i < n * n * n; ++i) mean += loss_nchannel_stochastic(a, b, mock(), source).total;
    mean /= n * n * n;
    EXPECT_LT(relative_difference(mean, loss_nchannel_exact(a, b, mock()).total), 1e-6) << "n = " << n;
  }
}

TEST(StochasticLossTest, ZeroAtIdentityForEverySeed) {
  const MaterialStack a = random_stack(6, 8, 8, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomTriplets source(seed);
    EXPECT_EQ(loss_nchannel_stochastic(a, a, mock(), source, 3).total, 0.0);
  }
}

TEST(StochasticLossTest, VarianceDecaysAsOneOverK) {
  const MaterialStack a = random_stack(4, 16, 16, 60), b = random_stack(4, 16, 16, 61);
  const TexturalReference ref(mock(), b.data(), std::make_shared<GramCache>());
  auto variance = [&](int k) {
    std::vector<double> values;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      RandomTriplets source(derive_seed(seed, static_cast<std::uint64_t>(k)));
      values.push_back(evaluate_plan(a.data(), ref, stochastic_plan(4, source, k), false).report.total);
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return var / (values.size() - 1);
  };
  const double v1 = variance(1), v4 = variance(4), v16 = variance(16);
  EXPECT_GT(v1, 0.0);
  for (auto [k, vk] : {std::pair{4, v4}, std::pair{16, v16}}) {
    const double ratio = (v1 / vk) / k;
    EXPECT_GT(ratio, 1.0 / 1.5) << "k = " << k;
    EXPECT_LT(ratio, 1.5) << "k = " << k;
  }
}

TEST(StochasticLossTest, GradientMatchesFiniteDifferences) {
  const MaterialStack a = random_stack(5, 12, 12, 70), b = random_stack(5, 12, 12, 71);
  const TexturalReference ref(mock(), b.data());
  RandomTriplets source(5);
  const TripletPlan plan = stochastic_plan(5, source, 2);
  const LossEvaluation eval = evaluate_plan(a.data(), ref, plan, true);
  auto f = [&](const Tensor& x) { return evaluate_plan(x, ref, plan, false).report.total; };
  EXPECT_LT(max_gradient_error(f, eval.gradient, a.data(), 100, 72), 1e-4);
}

TEST(SeparateBaselineTest, SumOfGroupLosses) {
  const MaterialStack a = random_stack(9, 10, 10, 80), b = random_stack(9, 10, 10, 81);
  const std::vector<TripletIndex> groups{{{0, 1, 2}}, {{6, 6, 6}}};
  double expected = 0.0;
  for (const TripletIndex& g : groups) {
    expected += loss_3channel(apply_triplet(a, g), mock().grams(apply_triplet(b, g)), mock()).total;
  }
  EXPECT_LT(relative_difference(loss_separate_baseline(a, b, mock(), groups).total, expected), 1e-12);
  EXPECT_EQ(loss_separate_baseline(a, a, mock(), groups).total, 0.0);
}

TEST(SeparateBaselineTest, SingleGroupIsThreeChannelLoss) {
  const MaterialStack a = random_stack(3, 10, 10, 82), b = random_stack(3, 10, 10, 83);
  EXPECT_EQ(loss_separate_baseline(a, b, mock(), {{{0, 1, 2}}}).total,
            loss_3channel(a.data(), mock().grams(b.data()), mock()).total);
}

TEST(SeparateBaselineTest, RejectsOverlapAndRange) {
  const MaterialStack a = random_stack(4, 4, 4, 1);
  EXPECT_THROW(loss_separate_baseline(a, a, mock(), {{{0, 1, 2}}, {{2, 2, 2}}}), ConfigError);
  EXPECT_THROW(loss_separate_baseline(a, a, mock(), {{{0, 1, 4}}}), std::out_of_range);
  EXPECT_THROW(loss_separate_baseline(a, a, mock(), {}), ConfigError);
}

TEST(GramCacheTest, LeastRecentlyUsedEviction) {
  GramCache cache(2);
  int computed = 0;
  auto compute = [&] {
    ++computed;
    return GramStatistics{};
  };
  cache.get_or_compute(1, {{0, 0, 0}}, compute);
  cache.get_or_compute(1, {{0, 0, 1}}, compute);
  cache.get_or_compute(1, {{0, 0, 0}}, compute);  // hit, now most recent
  cache.get_or_compute(1, {{0, 1, 1}}, compute);  // evicts (0,0,1)
  EXPECT_EQ(computed, 3);
  EXPECT_EQ(cache.size(), 2u);
  cache.get_or_compute(1, {{0, 0, 0}}, compute);
  EXPECT_EQ(computed, 3);
  cache.get_or_compute(1, {{0, 0, 1}}, compute);
  EXPECT_EQ(computed, 4);
  cache.get_or_compute(2, {{0, 0, 0}}, compute);  // distinct exemplar
  EXPECT_EQ(computed, 5);
  EXPECT_EQ(cache.hits(), 2u);
}

TEST(GramCacheTest, ConcurrentEvaluationsAgree) {
  const MaterialStack a = random_stack(3, 12, 12, 90), b = random_stack(3, 12, 12, 91);
  auto cache = std::make_shared<GramCache>();
  const TexturalReference ref(mock(), b.data(), cache);
  const double expected = loss_nchannel_exact(a, b, mock()).total;
  std::vector<double> results(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] { results[i] = evaluate_plan(a.data(), ref, exact_plan(3), false).report.total; });
  }
  for (auto& t : threads) t.join();
  for (double r : results) EXPECT_LT(relative_difference(r, expected), 1e-12);
  EXPECT_EQ(cache->size(), 27u);
}

}  // namespace
}  // namespace mtex

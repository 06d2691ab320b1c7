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

#include "mtex/generator.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "mtex/errors.hpp"
#include "test_support.hpp"

namespace mtex {
namespace {

using testing::random_stack;
using testing::TempDir;

// chi2.ppf(0.999, 728)
constexpr double kChiSquare728 = 851.636244600382;

const FeatureExtractor& mock() {
  static const FeatureExtractor ex = FeatureExtractor::load(ExtractorConfig{});
  return ex;
}

GeneratorModel untrained(int n, std::uint64_t seed = 1) {
  return GeneratorModel::initialize(GeneratorArchitecture{}, ChannelLayout::anonymous(n), seed);
}

TEST(GeneratorTest, ShapeLawAndParameterCount) {
  const GeneratorModel model = untrained(4);
  EXPECT_EQ(model.architecture().pyramid_factor(), 16);
  const std::size_t count = model.parameter_count();
  for (auto [h, w] : {std::pair{16, 16}, std::pair{32, 48}, std::pair{64, 16}}) {
    const MaterialStack s = generate(model, h, w, 3);
    EXPECT_EQ(s.data().shape(), (Shape{4, h, w}));
    EXPECT_EQ(model.parameter_count(), count);
    for (double v : s.data().values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  // Merged widths 8, 16, 24, 32, 40 feed a 1x1 projection to n channels.
  EXPECT_EQ(model.parameters().back().name, "output.bias");
  EXPECT_EQ(model.parameters()[model.parameters().size() - 2].value.shape(), (Shape{4, 40, 1, 1}));
}

TEST(GeneratorTest, ParameterCountMatchesHandCount) {
  const GeneratorModel model = untrained(2);
  auto conv = [](int in, int out, int k) { return std::size_t(out) * in * k * k + out; };
  auto block = [&](int in, int w) { return conv(in, w, 3) + conv(w, w, 3) + conv(w, w, 1); };
  std::size_t expected = 5 * block(3, 8);
  for (int merged : {16, 24, 32, 40}) expected += block(merged, merged);
  expected += conv(40, 2, 1);
  EXPECT_EQ(model.parameter_count(), expected);
}

TEST(GeneratorTest, SizeErrors) {
  const GeneratorModel model = untrained(2);
  EXPECT_THROW(generate(model, 250, 256, 0), ConfigError);
  EXPECT_THROW(generate(model, 8, 8, 0), ConfigError);
  try {
    generate(model, 250, 250, 0);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("multiples of 16"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("240x240"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(generate(model, 256, 256, 0));
}

TEST(GeneratorTest, SeedsControlVariation) {
  const GeneratorModel model = untrained(3);
  const MaterialStack a = generate(model, 32, 32, 1), b = generate(model, 32, 32, 2);
  EXPECT_EQ(a, generate(model, 32, 32, 1));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) diff += std::abs(a.data()[i] - b.data()[i]);
  EXPECT_GT(diff / a.data().size(), 0.0);
}

TEST(GeneratorTest, GradientReachesEveryParameter) {
  const GeneratorModel model = untrained(3, 5);
  const MaterialStack exemplar = random_stack(3, 32, 32, 6);
  const TexturalReference ref(mock(), exemplar.data());
  std::vector<ag::Var> leaves;
  for (const NamedTensor& p : model.parameters()) leaves.push_back(ag::leaf(p.value));
  Rng rng(7);
  std::vector<ag::Var> noise;
  for (Tensor& z : model.sample_noise(32, 32, rng)) noise.push_back(ag::constant(z));
  ag::backward(triplet_loss_graph(model.forward(noise, leaves), {{0, 1, 2}}, ref).total);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    EXPECT_GT(leaves[i].grad().squared_norm(), 0.0) << model.parameters()[i].name;
  }
}

TEST(GeneratorTest, ForwardGradientMatchesFiniteDifferences) {
  GeneratorArchitecture small;
  small.scales = 2;
  small.block_width = 2;
  const GeneratorModel model = GeneratorModel::initialize(small, ChannelLayout::anonymous(2), 8);
  const MaterialStack exemplar = random_stack(2, 8, 8, 9);
  const TexturalReference ref(mock(), exemplar.data());
  Rng rng(10);
  std::vector<ag::Var> noise;
  for (Tensor& z : model.sample_noise(8, 8, rng)) noise.push_back(ag::constant(z));
  const std::size_t which = 2;  // scale1.conv2.weight
  auto loss = [&](const Tensor& w, Tensor* grad) {
    std::vector<ag::Var> params;
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      params.push_back(i == which ? ag::leaf(w) : ag::constant(model.parameters()[i].value));
    }
    const ag::Var total = triplet_loss_graph(model.forward(noise, params), {{1, 0, 1}}, ref).total;
    if (grad) {
      ag::backward(total);
      *grad = params[which].grad();
    }
    return total.item();
  };
  Tensor analytic;
  loss(model.parameters()[which].value, &analytic);
  auto f = [&](const Tensor& w) { return loss(w, nullptr); };
  EXPECT_LT(testing::max_gradient_error(f, analytic, model.parameters()[which].value, 36, 11), 1e-4);
}

TEST(TrainTest, OneStepChangesWeights) {
  const MaterialStack exemplar = random_stack(2, 16, 16, 12);
  TrainConfig config;
  config.steps = 1;
  config.seed = 3;
  const TrainResult r = train_generator(exemplar, config, mock());
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_FALSE(r.model == GeneratorModel::initialize(config.architecture, exemplar.layout(),
                                                     derive_seed(3, SeedStream::kGeneratorWeights)));
  EXPECT_EQ(r.model.extractor_fingerprint, mock().fingerprint());
  EXPECT_EQ(r.training_height, 16);
}

TEST(TrainTest, TrainingReducesExactLoss) {
  const MaterialStack exemplar = random_stack(2, 16, 16, 13);
  TrainConfig config;
  config.steps = 500;
  config.seed = 4;
  const TrainResult r = train_generator(exemplar, config, mock());
  const GeneratorModel before = GeneratorModel::initialize(config.architecture, exemplar.layout(),
                                                           derive_seed(4, SeedStream::kGeneratorWeights));
  const double initial = loss_nchannel_exact(generate(before, 16, 16, 99), exemplar, mock()).total;
  const double trained = loss_nchannel_exact(generate(r.model, 16, 16, 99), exemplar, mock()).total;
  EXPECT_LT(trained, 0.3 * initial) << initial << " -> " << trained;
}

TEST(TrainTest, TripletLogIsUniform) {
  const MaterialStack exemplar = random_stack(9, 16, 16, 14);
  TrainConfig config;
  config.steps = 1000;
  config.seed = 5;
  config.architecture.block_width = 2;
  const TrainResult r = train_generator(exemplar, config, mock());
  std::vector<long> counts(729, 0);
  for (const TraceEntry& e : r.trace.entries) {
    ASSERT_EQ(e.triplets.size(), 1u);
    ++counts[e.triplets[0].rank(9)];
  }
  const double expected = 1000.0 / 729.0;
  double chi = 0.0;
  for (long c : counts) chi += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi, kChiSquare728);
}

TEST(TrainTest, DeterministicAndSharingModes) {
  const MaterialStack exemplar = random_stack(3, 40, 36, 15);
  TrainConfig config;
  config.steps = 4;
  config.batch_size = 2;
  config.k = 2;
  config.crop_size = 32;
  config.seed = 6;
  const TrainResult a = train_generator(exemplar, config, mock());
  const TrainResult b = train_generator(exemplar, config, mock());
  EXPECT_EQ(a.trace.to_csv(), b.trace.to_csv());
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(a.training_height, 32);
  EXPECT_EQ(a.trace.entries[0].triplets.size(), 2u);
  config.sharing = TripletSharing::kPerElement;
  const TrainResult c = train_generator(exemplar, config, mock());
  EXPECT_EQ(c.trace.entries[0].triplets.size(), 4u);
}

TEST(TrainTest, ConfigErrors) {
  const MaterialStack exemplar = random_stack(2, 16, 16, 16);
  TrainConfig config;
  config.steps = 0;
  EXPECT_THROW(train_generator(exemplar, config, mock()), ConfigError);
  config.steps = 1;
  config.batch_size = 0;
  EXPECT_THROW(train_generator(exemplar, config, mock()), ConfigError);
  config.batch_size = 1;
  EXPECT_THROW(train_generator(random_stack(2, 12, 12, 1), config, mock()), ConfigError);
}

TEST(TrainTest, DivergenceGuardTrips) {
  const MaterialStack exemplar = random_stack(2, 16, 16, 17);
  TrainConfig config;
  config.steps = 200;
  config.running_mean_window = 1;
  config.divergence_factor = 1.0001;
  config.divergence_patience = 3;
  config.adam.learning_rate = 5.0;
  try {
    train_generator(exemplar, config, mock());
    FAIL() << "expected the divergence guard to trip";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("diverged"), std::string::npos) << e.what();
  }
}

TEST(ModelFileTest, RoundTripIsBitwise) {
  TempDir dir("model");
  const MaterialStack exemplar = random_stack(5, 16, 16, 18);
  ChannelLayout layout({{"albedo", 3}, {"roughness", 1}, {"ao", 1}});
  TrainConfig config;
  config.steps = 2;
  const TrainResult r = train_generator(MaterialStack(exemplar.data(), layout), config, mock());
  save_model(r.model, dir.path() / "g.mtxa");
  std::vector<std::string> warnings;
  const GeneratorModel loaded = load_model(dir.path() / "g.mtxa", &warnings, mock().fingerprint());
  EXPECT_TRUE(warnings.empty());
  EXPECT_TRUE(loaded == r.model);
  EXPECT_EQ(loaded.layout(), layout);
  EXPECT_EQ(loaded.train_config, r.model.train_config);
  EXPECT_EQ(generate(loaded, 32, 32, 4), generate(r.model, 32, 32, 4));

  load_model(dir.path() / "g.mtxa", &warnings, "something else");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("extractor"), std::string::npos);
}

TEST(ModelFileTest, TruncatedFileIsAnError) {
  TempDir dir("trunc");
  save_model(untrained(2), dir.path() / "g.mtxa");
  const auto size = std::filesystem::file_size(dir.path() / "g.mtxa");
  std::filesystem::resize_file(dir.path() / "g.mtxa", size / 2);
  EXPECT_THROW(load_model(dir.path() / "g.mtxa"), IoError);
  std::ofstream(dir.path() / "junk.mtxa") << "not an archive";
  EXPECT_THROW(load_model(dir.path() / "junk.mtxa"), FormatError);
}

}  // namespace
}  // namespace mtex

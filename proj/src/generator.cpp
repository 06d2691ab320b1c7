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

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "mtex/archive.hpp"
#include "mtex/errors.hpp"

namespace mtex {
namespace {

constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormat = "mtex-generator";

struct ConvSpec {
  std::string name;
  int in;
  int out;
  int kernel;
};

// Convolutions in forward order.
std::vector<ConvSpec> layer_specs(const GeneratorArchitecture& arch, int channels) {
  std::vector<ConvSpec> specs;
  auto block = [&](const std::string& prefix, int in, int width) {
    specs.push_back({prefix + ".conv1", in, width, 3});
    specs.push_back({prefix + ".conv2", width, width, 3});
    specs.push_back({prefix + ".conv3", width, width, 1});
  };
  int merged = 0;
  for (int s = arch.scales - 1; s >= 0; --s) {
    block("scale" + std::to_string(s), arch.noise_channels, arch.block_width);
    if (s == arch.scales - 1) {
      merged = arch.block_width;
    } else {
      merged += arch.block_width;
      block("join" + std::to_string(s), merged, merged);
    }
  }
  specs.push_back({"output", merged, channels, 1});
  return specs;
}

Tensor crop(const Tensor& planes, int y0, int x0, int h, int w) {
  const int n = planes.dim(0), width = planes.dim(2);
  Tensor out({n, h, w});
  for (int c = 0; c < n; ++c) {
    const auto src = planes.plane(c);
    auto dst = out.plane(c);
    for (int y = 0; y < h; ++y) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(y0 + y) * width + x0, w,
                  dst.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
  }
  return out;
}

nlohmann::ordered_json architecture_json(const GeneratorArchitecture& a) {
  return {{"scales", a.scales},
          {"noise_channels", a.noise_channels},
          {"block_width", a.block_width},
          {"leaky_slope", a.leaky_slope},
          {"norm_epsilon", a.norm_epsilon}};
}

}  // namespace

void GeneratorArchitecture::validate() const {
  if (scales < 1 || scales > 12) throw ConfigError("generator scales must be in [1, 12], got " + std::to_string(scales));
  if (noise_channels < 1 || block_width < 1) throw ConfigError("generator widths must be >= 1");
  if (!(norm_epsilon > 0.0)) throw ConfigError("normalization epsilon must be > 0");
}

GeneratorModel GeneratorModel::initialize(const GeneratorArchitecture& arch, const ChannelLayout& layout,
                                          std::uint64_t seed) {
  arch.validate();
  if (layout.total_channels() < 1) throw ConfigError("generator needs at least one output channel");
  GeneratorModel model;
  model.arch_ = arch;
  model.layout_ = layout;
  Rng rng(seed);
  for (const ConvSpec& spec : layer_specs(arch, layout.total_channels())) {
    const double bound = std::sqrt(6.0 / (spec.in * spec.kernel * spec.kernel));
    Tensor w({spec.out, spec.in, spec.kernel, spec.kernel});
    for (double& v : w.values()) v = uniform_real(rng, -bound, bound);
    model.params_.push_back({spec.name + ".weight", std::move(w)});
    model.params_.push_back({spec.name + ".bias", Tensor({spec.out})});
  }
  return model;
}

std::size_t GeneratorModel::parameter_count() const {
  std::size_t total = 0;
  for (const NamedTensor& p : params_) total += p.value.size();
  return total;
}

void GeneratorModel::check_size(int height, int width) const {
  const int f = arch_.pyramid_factor();
  if (height < f || width < f || height % f != 0 || width % f != 0) {
    const int lo_h = std::max(f, height / f * f), lo_w = std::max(f, width / f * f);
    throw ConfigError("size " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not admissible: height and width must be positive multiples of " + std::to_string(f) +
                      " (nearest: " + std::to_string(lo_h) + "x" + std::to_string(lo_w) + " or " +
                      std::to_string(lo_h + f) + "x" + std::to_string(lo_w + f) + ")");
  }
}

std::vector<Tensor> GeneratorModel::sample_noise(int height, int width, Rng& rng) const {
  check_size(height, width);
  std::vector<Tensor> noise;
  for (int s = 0; s < arch_.scales; ++s) {
    Tensor z({arch_.noise_channels, height >> s, width >> s});
    for (double& v : z.values()) v = uniform01(rng);
    noise.push_back(std::move(z));
  }
  return noise;
}

ag::Var GeneratorModel::forward(const std::vector<ag::Var>& noise, const std::vector<ag::Var>& params) const {
  if (noise.size() != static_cast<std::size_t>(arch_.scales)) {
    throw ShapeError("generator expects " + std::to_string(arch_.scales) + " noise images, got " +
                     std::to_string(noise.size()));
  }
  if (params.size() != params_.size()) throw ShapeError("generator parameter count mismatch");
  std::size_t cursor = 0;
  auto conv = [&](const ag::Var& x) {
    const ag::Var& w = params[cursor++];
    const ag::Var& b = params[cursor++];
    return ag::conv2d(x, w, b);
  };
  auto block = [&](ag::Var x) {
    for (int i = 0; i < 3; ++i) {
      x = ag::leaky_relu(ag::response_norm(conv(x), arch_.norm_epsilon), arch_.leaky_slope);
    }
    return x;
  };
  ag::Var running;
  for (int s = arch_.scales - 1; s >= 0; --s) {
    ag::Var local = block(noise[static_cast<std::size_t>(s)]);
    if (s == arch_.scales - 1) {
      running = local;
    } else {
      running = block(ag::concat_channels({ag::upsample_nearest2(running), local}));
    }
  }
  return ag::sigmoid(conv(running));
}

ag::Var GeneratorModel::forward(const std::vector<ag::Var>& noise) const {
  std::vector<ag::Var> params;
  for (const NamedTensor& p : params_) params.push_back(ag::constant(p.value));
  return forward(noise, params);
}

bool operator==(const GeneratorModel& a, const GeneratorModel& b) {
  if (a.params_.size() != b.params_.size() || !(a.layout_ == b.layout_)) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].name != b.params_[i].name || !(a.params_[i].value == b.params_[i].value)) return false;
  }
  return architecture_json(a.arch_) == architecture_json(b.arch_);
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  architecture.validate();
  adam.validate();
  if (batch_size < 1) throw ConfigError("batch size must be >= 1, got " + std::to_string(batch_size));
  if (steps < 1) throw ConfigError("training steps must be >= 1, got " + std::to_string(steps));
  if (k < 1) throw ConfigError("k must be >= 1, got " + std::to_string(k));
  if (crop_size < architecture.pyramid_factor()) {
    throw ConfigError("crop size must be >= " + std::to_string(architecture.pyramid_factor()));
  }
  if (checkpoint_every < 0) throw ConfigError("checkpoint cadence must be >= 0");
  if (running_mean_window < 1 || divergence_patience < 1 || !(divergence_factor > 1.0)) {
    throw ConfigError("divergence guard needs window >= 1, patience >= 1, factor > 1");
  }
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"architecture", architecture_json(architecture)},
          {"batch_size", batch_size},
          {"steps", steps},
          {"adam",
           {{"learning_rate", adam.learning_rate},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon}}},
          {"seed", seed},
          {"k", k},
          {"triplet_sharing", sharing == TripletSharing::kPerBatch ? "batch" : "element"},
          {"crop_size", crop_size},
          {"checkpoint_every", checkpoint_every},
          {"running_mean_window", running_mean_window},
          {"divergence_factor", divergence_factor},
          {"divergence_patience", divergence_patience}};
}

std::pair<int, int> training_size(const MaterialStack& exemplar, const TrainConfig& config) {
  const int f = config.architecture.pyramid_factor();
  const int h = std::min(config.crop_size, exemplar.height()) / f * f;
  const int w = std::min(config.crop_size, exemplar.width()) / f * f;
  if (h < f || w < f) {
    throw ConfigError("exemplar " + std::to_string(exemplar.height()) + "x" + std::to_string(exemplar.width()) +
                      " is smaller than the generator's pyramid factor " + std::to_string(f));
  }
  return {h, w};
}

TrainResult train_generator(const MaterialStack& exemplar, const TrainConfig& config,
                            const FeatureExtractor& extractor, std::shared_ptr<GramCache> cache,
                            const ModelCheckpointFn& on_checkpoint) {
  config.validate();
  const auto [th, tw] = training_size(exemplar, config);
  if (th < extractor.min_size() || tw < extractor.min_size()) {
    throw ConfigError("training size " + std::to_string(th) + "x" + std::to_string(tw) +
                      " is below the extractor minimum " + std::to_string(extractor.min_size()));
  }
  const int n = exemplar.channels();

  TrainResult result;
  result.training_height = th;
  result.training_width = tw;
  GeneratorModel& model = result.model;
  model = GeneratorModel::initialize(config.architecture, exemplar.layout(),
                                     derive_seed(config.seed, SeedStream::kGeneratorWeights));
  model.extractor_fingerprint = extractor.fingerprint();
  model.train_config = config.to_json();

  const bool cropping = th < exemplar.height() || tw < exemplar.width();
  std::unique_ptr<TexturalReference> whole;
  if (!cropping) {
    whole = std::make_unique<TexturalReference>(extractor, exemplar.data(),
                                                cache ? cache : std::make_shared<GramCache>());
  }
  RandomTriplets triplets(derive_seed(config.seed, SeedStream::kTriplets));
  Rng noise_rng(derive_seed(config.seed, SeedStream::kNoise));
  Rng crop_rng(derive_seed(config.seed, SeedStream::kCrops));
  Adam adam(config.adam);

  std::deque<double> window;
  double window_sum = 0.0;
  double best_mean = INFINITY;
  int over = 0;
  const double weight = 1.0 / (static_cast<double>(config.batch_size) * config.k);

  for (int step = 0; step < config.steps; ++step) {
    std::vector<ag::Var> leaves;
    for (const NamedTensor& p : model.parameters()) leaves.push_back(ag::leaf(p.value));
    std::vector<TripletIndex> shared;
    if (config.sharing == TripletSharing::kPerBatch) {
      for (int j = 0; j < config.k; ++j) shared.push_back(triplets.next(n));
    }
    TraceEntry entry;
    entry.step = step;
    double total = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      std::unique_ptr<TexturalReference> cropped;
      if (cropping) {
        const int y0 = uniform_index(crop_rng, exemplar.height() - th + 1);
        const int x0 = uniform_index(crop_rng, exemplar.width() - tw + 1);
        cropped = std::make_unique<TexturalReference>(extractor, crop(exemplar.data(), y0, x0, th, tw));
      }
      const TexturalReference& ref = cropping ? *cropped : *whole;
      std::vector<ag::Var> noise;
      for (Tensor& z : model.sample_noise(th, tw, noise_rng)) noise.push_back(ag::constant(std::move(z)));
      const ag::Var sample = model.forward(noise, leaves);
      std::vector<TripletIndex> own;
      if (config.sharing == TripletSharing::kPerElement) {
        for (int j = 0; j < config.k; ++j) own.push_back(triplets.next(n));
      }
      const std::vector<TripletIndex>& used = config.sharing == TripletSharing::kPerBatch ? shared : own;
      std::vector<ag::Var> terms;
      for (const TripletIndex& t : used) terms.push_back(triplet_loss_graph(sample, t, ref).total);
      const ag::Var loss = ag::scale(ag::add_n(terms), weight);
      total += loss.item();
      if (!std::isfinite(loss.item())) {
        std::string list;
        for (const TripletIndex& t : used) list += (list.empty() ? "" : "; ") + t.to_string();
        throw NumericalError("non-finite training loss at step " + std::to_string(step) + ", batch element " +
                             std::to_string(b) + ", triplets (" + list + ")");
      }
      ag::backward(loss);
      if (config.sharing == TripletSharing::kPerElement || b == 0) {
        entry.triplets.insert(entry.triplets.end(), used.begin(), used.end());
      }
    }

    std::vector<Tensor> grads;
    std::vector<Tensor*> params;
    std::vector<const Tensor*> grad_ptrs;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      grads.push_back(leaves[i].grad().size() == 0 ? Tensor(leaves[i].shape()) : leaves[i].grad());
      if (!grads.back().all_finite()) {
        throw NumericalError("non-finite gradient for " + model.parameters()[i].name + " at step " +
                             std::to_string(step));
      }
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
      params.push_back(&model.mutable_parameters()[i].value);
      grad_ptrs.push_back(&grads[i]);
    }
    adam.step(params, grad_ptrs);

    entry.estimate = total;
    result.trace.entries.push_back(std::move(entry));

    window.push_back(total);
    window_sum += total;
    if (static_cast<int>(window.size()) > config.running_mean_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    const double mean = window_sum / static_cast<double>(window.size());
    best_mean = std::min(best_mean, mean);
    over = mean > config.divergence_factor * best_mean ? over + 1 : 0;
    if (over >= config.divergence_patience) {
      throw NumericalError("training diverged at step " + std::to_string(step) + ": running-mean loss " +
                           std::to_string(mean) + " stayed above " + std::to_string(config.divergence_factor) +
                           "x its minimum " + std::to_string(best_mean) + " for " +
                           std::to_string(config.divergence_patience) + " steps");
    }
    if (on_checkpoint && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      on_checkpoint(step + 1, model);
    }
  }
  return result;
}

MaterialStack generate(const GeneratorModel& model, int height, int width, std::uint64_t seed) {
  model.check_size(height, width);
  Rng rng(derive_seed(seed, SeedStream::kNoise));
  ag::NoGradGuard no_grad;
  std::vector<ag::Var> noise;
  for (Tensor& z : model.sample_noise(height, width, rng)) noise.push_back(ag::constant(std::move(z)));
  return MaterialStack(model.forward(noise).value(), model.layout());
}

// ---------------------------------------------------------------------------

void save_model(const GeneratorModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json meta;
  meta["format"] = kModelFormat;
  meta["version"] = kModelFormatVersion;
  meta["architecture"] = architecture_json(model.architecture());
  meta["layout"] = nlohmann::ordered_json::array();
  for (const ChannelRole& r : model.layout().roles()) meta["layout"].push_back({{"name", r.name}, {"channels", r.channels}});
  meta["extractor_fingerprint"] = model.extractor_fingerprint;
  meta["train_config"] = model.train_config;
  TensorArchive archive;
  archive.metadata = meta.dump();
  for (const NamedTensor& p : model.parameters()) archive.entries.push_back({p.name, p.value, ElementType::kFloat64});
  write_archive(path, archive);
}

GeneratorModel load_model(const std::filesystem::path& path, std::vector<std::string>* warnings,
                          const std::string& expected_fingerprint) {
  const TensorArchive archive = read_archive(path);
  nlohmann::ordered_json meta;
  try {
    meta = nlohmann::ordered_json::parse(archive.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad model metadata: " + e.what());
  }
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  GeneratorArchitecture arch;
  std::vector<ChannelRole> roles;
  std::string fingerprint;
  try {
    if (meta.value("format", std::string()) != kModelFormat) throw FormatError(path.string() + ": not a generator model");
    const int version = meta.at("version").get<int>();
    if (version != kModelFormatVersion) {
      warn("model format version " + std::to_string(version) + " differs from supported version " +
           std::to_string(kModelFormatVersion));
    }
    const auto& a = meta.at("architecture");
    arch.scales = a.at("scales").get<int>();
    arch.noise_channels = a.at("noise_channels").get<int>();
    arch.block_width = a.at("block_width").get<int>();
    arch.leaky_slope = a.at("leaky_slope").get<double>();
    arch.norm_epsilon = a.at("norm_epsilon").get<double>();
    for (const auto& r : meta.at("layout")) roles.push_back({r.at("name").get<std::string>(), r.at("channels").get<int>()});
    fingerprint = meta.value("extractor_fingerprint", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": incomplete model metadata: " + e.what());
  }
  GeneratorModel model = GeneratorModel::initialize(arch, ChannelLayout(std::move(roles)), 0);
  model.extractor_fingerprint = fingerprint;
  model.train_config = meta.value("train_config", nlohmann::ordered_json::object());
  for (NamedTensor& p : model.mutable_parameters()) {
    const ArchiveEntry* e = archive.find(p.name);
    if (!e) throw FormatError(path.string() + ": missing parameter " + p.name);
    if (e->values.shape() != p.value.shape()) {
      throw FormatError(path.string() + ": parameter " + p.name + " has shape " + shape_string(e->values.shape()) +
                        ", expected " + shape_string(p.value.shape()));
    }
    p.value = e->values;
  }
  if (!expected_fingerprint.empty() && expected_fingerprint != fingerprint) {
    warn("model was trained with extractor '" + fingerprint + "', current extractor is '" + expected_fingerprint + "'");
  }
  return model;
}

}  // namespace mtex

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

#include "mtex/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtex/errors.hpp"
#include "mtex/rng.hpp"

namespace mtex {
namespace {

// Keeps logit(x) finite for noise draws that land on 0 or 1.
constexpr double kLogitMargin = 1e-3;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Tensor to_values(const Tensor& param, Parameterization p) {
  if (p == Parameterization::kClamped) return param;
  Tensor out(param.shape());
  for (std::size_t i = 0; i < param.size(); ++i) out[i] = sigmoid(param[i]);
  return out;
}

// Starting point in parameter space.
Tensor initial_parameters(const MaterialStack& exemplar, const SynthesisConfig& config) {
  const int n = exemplar.channels();
  const int h = config.height > 0 ? config.height : exemplar.height();
  const int w = config.width > 0 ? config.width : exemplar.width();
  Rng rng(derive_seed(config.seed, SeedStream::kInit));
  const std::vector<double> means = exemplar.channel_means();
  Tensor x({n, h, w});
  for (int c = 0; c < n; ++c) {
    for (double& v : x.plane(c)) {
      v = config.init == InitMode::kUniformNoise
              ? uniform01(rng)
              : means[c] + uniform_real(rng, -config.noise_amplitude, config.noise_amplitude);
    }
  }
  for (double& v : x.values()) {
    if (config.parameterization == Parameterization::kClamped) {
      v = std::clamp(v, 0.0, 1.0);
    } else {
      v = std::clamp(v, kLogitMargin, 1.0 - kLogitMargin);
      v = std::log(v / (1.0 - v));
    }
  }
  return x;
}

TripletPlan fixed_plan(const LossConfig& loss, const MaterialStack& exemplar) {
  const int n = exemplar.channels();
  if (loss.mode == LossMode::kExact) return exact_plan(n, loss.exact);
  return separate_plan(n, loss.groups.empty() ? exemplar.layout().role_groups() : loss.groups);
}

const char* mode_name(LossMode m) {
  switch (m) {
    case LossMode::kStochastic: return "stochastic";
    case LossMode::kExact: return "exact";
    case LossMode::kSeparate: return "separate";
  }
  return "?";
}

[[noreturn]] void report_non_finite(int step, const Tensor& x, const TexturalReference& ref,
                                    const TripletPlan& plan) {
  for (const TripletIndex& t : plan.triplets) {
    const LossEvaluation single = evaluate_plan(x, ref, {{t}, 1.0}, true);
    if (!std::isfinite(single.report.total) || !single.gradient.all_finite()) {
      throw NumericalError("non-finite loss at step " + std::to_string(step) + ", triplet (" + t.to_string() + ")");
    }
  }
  throw NumericalError("non-finite loss at step " + std::to_string(step));
}

}  // namespace

void validate(const SynthesisConfig& config, const MaterialStack& exemplar, const FeatureExtractor& extractor) {
  if (config.steps < 0) throw ConfigError("steps must be >= 0, got " + std::to_string(config.steps));
  if (config.height < 0 || config.width < 0) throw ConfigError("output size must be positive");
  config.adam.validate();
  const int h = config.height > 0 ? config.height : exemplar.height();
  const int w = config.width > 0 ? config.width : exemplar.width();
  const int min = extractor.min_size();
  if (h < min || w < min || exemplar.height() < min || exemplar.width() < min) {
    throw ConfigError("sizes must be at least " + std::to_string(min) + "x" + std::to_string(min) +
                      " for this extractor (output " + std::to_string(h) + "x" + std::to_string(w) + ", exemplar " +
                      std::to_string(exemplar.height()) + "x" + std::to_string(exemplar.width()) + ")");
  }
  if (config.loss.mode == LossMode::kStochastic && config.loss.k < 1) {
    throw ConfigError("k must be >= 1, got " + std::to_string(config.loss.k));
  }
  if (!(config.noise_amplitude >= 0.0)) throw ConfigError("noise amplitude must be >= 0");
  if (config.exact_every < 0 || config.checkpoint_every < 0) throw ConfigError("cadences must be >= 0");
  if (config.exact_every > 0 || config.loss.mode == LossMode::kExact) exact_plan(exemplar.channels(), config.loss.exact);
  if (config.loss.mode == LossMode::kSeparate) fixed_plan(config.loss, exemplar);
}

MaterialStack initial_stack(const MaterialStack& exemplar, const SynthesisConfig& config) {
  return MaterialStack(to_values(initial_parameters(exemplar, config), config.parameterization), exemplar.layout());
}

SynthesisResult synthesize(const MaterialStack& exemplar, const SynthesisConfig& config,
                           const FeatureExtractor& extractor, std::shared_ptr<GramCache> cache,
                           const CheckpointFn& on_checkpoint) {
  validate(config, exemplar, extractor);
  const int n = exemplar.channels();
  const TexturalReference ref(extractor, exemplar.data(), cache ? cache : std::make_shared<GramCache>());
  RandomTriplets source(derive_seed(config.seed, SeedStream::kTriplets));
  const TripletPlan fixed =
      config.loss.mode == LossMode::kStochastic ? TripletPlan{} : fixed_plan(config.loss, exemplar);
  const TripletPlan exact = config.exact_every > 0 ? exact_plan(n, config.loss.exact) : TripletPlan{};

  Tensor param = initial_parameters(exemplar, config);
  Tensor x = to_values(param, config.parameterization);
  Adam adam(config.adam);
  SynthesisResult result;

  for (int step = 0; step < config.steps; ++step) {
    TraceEntry entry;
    entry.step = step;
    if (config.exact_every > 0 && step % config.exact_every == 0) {
      entry.exact = evaluate_plan(x, ref, exact, false).report.total;
    }
    const TripletPlan plan = config.loss.mode == LossMode::kStochastic ? stochastic_plan(n, source, config.loss.k)
                                                                        : fixed;
    LossEvaluation eval = evaluate_plan(x, ref, plan, true);
    if (!std::isfinite(eval.report.total) || !eval.gradient.all_finite()) report_non_finite(step, x, ref, plan);
    entry.estimate = eval.report.total;
    entry.triplets = std::move(eval.report.triplets);
    result.trace.entries.push_back(std::move(entry));

    Tensor& grad = eval.gradient;
    if (config.parameterization == Parameterization::kSigmoid) {
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= x[i] * (1.0 - x[i]);
    }
    adam.step({&param}, {&grad});
    if (config.parameterization == Parameterization::kClamped) {
      for (double& v : param.values()) v = std::clamp(v, 0.0, 1.0);
    }
    x = to_values(param, config.parameterization);
    if (!x.all_finite()) {
      throw NumericalError("non-finite values after the update at step " + std::to_string(step) + " (" +
                           mode_name(config.loss.mode) + " loss)");
    }
    if (on_checkpoint && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      on_checkpoint(step + 1, MaterialStack(x, exemplar.layout()));
    }
  }
  if (config.exact_every > 0) {
    TraceEntry last;
    last.step = config.steps;
    last.exact = evaluate_plan(x, ref, exact, false).report.total;
    result.trace.entries.push_back(std::move(last));
  }
  result.stack = MaterialStack(std::move(x), exemplar.layout());
  return result;
}

}  // namespace mtex

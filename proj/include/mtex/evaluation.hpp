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

#ifndef MTEX_EVALUATION_HPP_
#define MTEX_EVALUATION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mtex/feature_extractor.hpp"
#include "mtex/material_io.hpp"
#include "mtex/textural_loss.hpp"

namespace mtex {

// ---------------------------------------------------------------------------
// Cross-channel alignment

struct PairCorrelation {
  int i = 0;
  int j = 0;
  // Pearson correlation of edge-magnitude maps; absent when a map is constant.
  std::optional<double> edge_a;
  std::optional<double> edge_b;
  // Pearson correlation of the raw channel values.
  std::optional<double> raw_a;
  std::optional<double> raw_b;
};

/// Proxy for cross-channel feature co-location. `a` is the synthesized
/// stack, `b` the exemplar; correlations are taken within each stack, so the
/// two may differ in size.
struct AlignmentReport {
  std::vector<PairCorrelation> pairs;
  // Mean over pairs with both edge correlations defined of |rho_a - rho_b|.
  double error = 0.0;
  double raw_error = 0.0;
  int compared_pairs = 0;
  // One message per skipped pair.
  std::vector<std::string> flags;

  nlohmann::ordered_json to_json() const;
  // Header "i,j,edge_a,edge_b,raw_a,raw_b"; empty field when undefined.
  std::string to_csv() const;
};

// 3x3 central-difference gradient magnitude of one plane, interior pixels only: (H-2, W-2).
Tensor edge_magnitude(const Tensor& plane);

// Pearson correlation, or nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// ShapeError on channel-count mismatch or planes smaller than 3x3.
AlignmentReport alignment_metric(const MaterialStack& a, const MaterialStack& b);

// ---------------------------------------------------------------------------
// Estimator unbiasedness

struct UnbiasednessReport {
  int channels = 0;
  double exact = 0.0;
  // Mean of the stochastic loss forced through every triplet once.
  double stochastic_mean = 0.0;
  // |exact - mean| / |exact|; 0 when both vanish.
  double relative_gap = 0.0;

  nlohmann::ordered_json to_json() const;
};

UnbiasednessReport unbiasedness_check(const MaterialStack& a, const MaterialStack& b,
                                      const FeatureExtractor& extractor, const ExactOptions& options = {});

// ---------------------------------------------------------------------------
// Gradient checking

struct GradcheckReport {
  int coordinates = 0;
  // max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, 1e-6 s)
  double max_relative_error = 0.0;
  // max_i |analytic_i - numeric_i| / s
  double max_scaled_error = 0.0;
  // s: largest |analytic| over the checked coordinates
  double gradient_scale = 0.0;
  // Draws rejected because the step-h and step-h/2 central differences
  // disagree (a kink inside the stencil); each is replaced by a fresh draw.
  int nonsmooth_coordinates = 0;

  nlohmann::ordered_json to_json() const;
};

// Returns f(x) and writes df/dx into `gradient` when it is non-null.
using DifferentiableFn = std::function<double(const Tensor& x, Tensor* gradient)>;

/// Central differences with the given step on `coordinates` distinct
/// positions chosen from `seed` (all positions if fewer). A coordinate whose
/// stencil straddles a non-differentiable point is skipped and redrawn.
GradcheckReport gradcheck(const DifferentiableFn& f, const Tensor& point, int coordinates = 100,
                          std::uint64_t seed = 0, double step = 1e-4);

// f(x) = ||x||^2.
DifferentiableFn quadratic_loss();
// 3-channel loss of `x` against the Grams of `reference` (3, H, W).
DifferentiableFn loss_3channel_fn(const FeatureExtractor& extractor, const Tensor& reference);
// Stochastic n-channel loss with k triplets drawn once from `seed` and then held fixed.
DifferentiableFn loss_stochastic_fn(const FeatureExtractor& extractor, const Tensor& reference, std::uint64_t seed,
                                    int k = 1);

}  // namespace mtex

#endif  // MTEX_EVALUATION_HPP_

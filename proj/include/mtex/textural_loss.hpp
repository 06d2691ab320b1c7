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

#ifndef MTEX_TEXTURAL_LOSS_HPP_
#define MTEX_TEXTURAL_LOSS_HPP_

#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mtex/autograd.hpp"
#include "mtex/feature_extractor.hpp"
#include "mtex/material_io.hpp"
#include "mtex/rng.hpp"
#include "mtex/triplet.hpp"

namespace mtex {

struct LossReport {
  double total = 0.0;
  std::vector<double> layer_terms;
  // Triplets that contributed, in evaluation order.
  std::vector<TripletIndex> triplets;
};

// ---------------------------------------------------------------------------
// Triplet sampling

/// Uniform over the n^3 ordered triples with replacement. Consumes exactly
/// three engine draws, one per position, each mapped by uniform_index.
TripletIndex sample_triplet(int n, Rng& rng);

// All n^3 triples in lexicographic order.
std::vector<TripletIndex> all_triplets(int n);

class TripletSource {
 public:
  virtual ~TripletSource() = default;
  virtual TripletIndex next(int n) = 0;
};

class RandomTriplets final : public TripletSource {
 public:
  explicit RandomTriplets(std::uint64_t seed) : rng_(seed) {}
  TripletIndex next(int n) override { return sample_triplet(n, rng_); }

 private:
  Rng rng_;
};

// Walks {0..n-1}^3 in lexicographic order, wrapping around.
class EnumeratedTriplets final : public TripletSource {
 public:
  TripletIndex next(int n) override;

 private:
  int position_ = 0;
};

// ---------------------------------------------------------------------------
// Reference-side Gram cache

/// Thread-safe LRU map (exemplar id, triplet) -> reference Gram statistics.
class GramCache {
 public:
  explicit GramCache(std::size_t capacity = 1024);

  std::shared_ptr<const GramStatistics> get_or_compute(std::uint64_t exemplar_id, const TripletIndex& triplet,
                                                        const std::function<GramStatistics()>& compute);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  struct Key {
    std::uint64_t exemplar_id;
    TripletIndex triplet;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  using Entry = std::pair<Key, std::shared_ptr<const GramStatistics>>;

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<Key, std::list<Entry>::iterator, KeyHash> index_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Exemplar side of a comparison: Grams of its triplet views, optionally cached.
class TexturalReference {
 public:
  TexturalReference(const FeatureExtractor& extractor, Tensor planes, std::shared_ptr<GramCache> cache = nullptr);

  std::shared_ptr<const GramStatistics> grams(const TripletIndex& triplet) const;

  const FeatureExtractor& extractor() const { return *extractor_; }
  const Tensor& planes() const { return planes_; }
  int channels() const { return planes_.dim(0); }
  std::uint64_t id() const { return id_; }

 private:
  const FeatureExtractor* extractor_;
  Tensor planes_;
  std::shared_ptr<GramCache> cache_;
  std::uint64_t id_;
};

// ---------------------------------------------------------------------------
// Losses

struct LossGraph {
  ag::Var total;
  std::vector<ag::Var> layers;
};

/// sum_l ||G^l(image) - ref^l||_F^2 / N_l^2 as a differentiable graph.
/// ConfigError when `ref` was produced by a different tap configuration.
LossGraph loss_3channel_graph(const ag::Var& image, const GramStatistics& ref, const FeatureExtractor& extractor);

// 3-channel loss of the `triplet` view of an n-channel candidate graph.
LossGraph triplet_loss_graph(const ag::Var& candidate, const TripletIndex& triplet, const TexturalReference& ref);

LossReport loss_3channel(const Tensor& image, const GramStatistics& ref, const FeatureExtractor& extractor);

/// weight * sum over `triplets` of the per-triplet 3-channel loss.
struct TripletPlan {
  std::vector<TripletIndex> triplets;
  double weight = 1.0;
};

struct LossEvaluation {
  LossReport report;
  Tensor gradient;  // d total / d candidate; empty unless requested
};

LossEvaluation evaluate_plan(const Tensor& candidate, const TexturalReference& ref, const TripletPlan& plan,
                             bool with_gradient);

struct ExactOptions {
  int enumeration_cap = 6;
  bool force = false;  // ignore the cap
};

// Mean over every ordered triplet; ConfigError when n exceeds the cap.
TripletPlan exact_plan(int n, const ExactOptions& options = {});
// Mean over k triplets drawn from `source`.
TripletPlan stochastic_plan(int n, TripletSource& source, int k = 1);
/// Sum over fixed disjoint groups. A group is a triple such as (0, 1, 2) or a
/// replicated single channel (6, 6, 6).
TripletPlan separate_plan(int n, const std::vector<TripletIndex>& groups);

/// Candidate `a`, reference `b`; the same triplet always indexes both.
LossReport loss_nchannel_exact(const MaterialStack& a, const MaterialStack& b, const FeatureExtractor& extractor,
                               const ExactOptions& options = {});
LossReport loss_nchannel_stochastic(const MaterialStack& a, const MaterialStack& b,
                                    const FeatureExtractor& extractor, TripletSource& source, int k = 1);
LossReport loss_separate_baseline(const MaterialStack& a, const MaterialStack& b, const FeatureExtractor& extractor,
                                  const std::vector<TripletIndex>& groups);

}  // namespace mtex

#endif  // MTEX_TEXTURAL_LOSS_HPP_

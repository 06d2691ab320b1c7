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

#include <set>
#include <string>

#include "mtex/errors.hpp"

namespace mtex {

TripletIndex sample_triplet(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_triplet: channel count must be >= 1");
  TripletIndex t;
  for (int& c : t.channels) c = uniform_index(rng, n);
  return t;
}

std::vector<TripletIndex> all_triplets(int n) {
  std::vector<TripletIndex> out;
  out.reserve(static_cast<std::size_t>(n) * n * n);
  for (int r = 0; r < n * n * n; ++r) out.push_back(TripletIndex::from_rank(r, n));
  return out;
}

TripletIndex EnumeratedTriplets::next(int n) {
  const TripletIndex t = TripletIndex::from_rank(position_ % (n * n * n), n);
  position_ = (position_ + 1) % (n * n * n);
  return t;
}

// ---------------------------------------------------------------------------

GramCache::GramCache(std::size_t capacity) : capacity_(capacity) {}

std::size_t GramCache::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = k.exemplar_id;
  for (int c : k.triplet.channels) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  return static_cast<std::size_t>(h);
}

std::shared_ptr<const GramStatistics> GramCache::get_or_compute(std::uint64_t exemplar_id,
                                                                const TripletIndex& triplet,
                                                                const std::function<GramStatistics()>& compute) {
  const Key key{exemplar_id, triplet};
  {
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      ++hits_;
      return it->second->second;
    }
    ++misses_;
  }
  auto value = std::make_shared<const GramStatistics>(compute());
  if (capacity_ == 0) return value;
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(key); it != index_.end()) return it->second->second;
  order_.emplace_front(key, value);
  index_[key] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return value;
}

std::size_t GramCache::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

std::size_t GramCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t GramCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

TexturalReference::TexturalReference(const FeatureExtractor& extractor, Tensor planes,
                                     std::shared_ptr<GramCache> cache)
    : extractor_(&extractor), planes_(std::move(planes)), cache_(std::move(cache)) {
  if (planes_.rank() != 3 || planes_.dim(0) < 1) {
    throw ShapeError("reference must be (n, H, W), got " + shape_string(planes_.shape()));
  }
  id_ = fingerprint(planes_) ^ std::hash<std::string>{}(extractor.fingerprint());
}

std::shared_ptr<const GramStatistics> TexturalReference::grams(const TripletIndex& triplet) const {
  auto compute = [&] { return extractor_->grams(apply_triplet(planes_, triplet)); };
  if (!cache_) return std::make_shared<const GramStatistics>(compute());
  return cache_->get_or_compute(id_, triplet, compute);
}

// ---------------------------------------------------------------------------

LossGraph loss_3channel_graph(const ag::Var& image, const GramStatistics& ref, const FeatureExtractor& extractor) {
  if (ref.layers() != extractor.tap_count() || ref.feature_counts != extractor.feature_counts()) {
    throw ConfigError("reference Gram statistics do not match the extractor's taps (" +
                      std::to_string(ref.layers()) + " vs " + std::to_string(extractor.tap_count()) + " layers)");
  }
  const std::vector<ag::Var> taps = extractor.forward(image);
  LossGraph out;
  for (std::size_t l = 0; l < taps.size(); ++l) {
    const double n = ref.feature_counts[l];
    out.layers.push_back(ag::weighted_squared_distance(ag::gram(taps[l]), ref.grams[l], 1.0 / (n * n)));
  }
  out.total = ag::add_n(out.layers);
  return out;
}

LossGraph triplet_loss_graph(const ag::Var& candidate, const TripletIndex& triplet, const TexturalReference& ref) {
  if (candidate.value().dim(0) != ref.channels()) {
    throw ShapeError("candidate has " + std::to_string(candidate.value().dim(0)) + " channels, reference has " +
                     std::to_string(ref.channels()));
  }
  const auto grams = ref.grams(triplet);
  return loss_3channel_graph(ag::gather_channels(candidate, triplet.channels), *grams, ref.extractor());
}

LossReport loss_3channel(const Tensor& image, const GramStatistics& ref, const FeatureExtractor& extractor) {
  ag::NoGradGuard no_grad;
  const LossGraph graph = loss_3channel_graph(ag::constant(image), ref, extractor);
  LossReport report;
  report.total = graph.total.item();
  for (const ag::Var& term : graph.layers) report.layer_terms.push_back(term.item());
  return report;
}

LossEvaluation evaluate_plan(const Tensor& candidate, const TexturalReference& ref, const TripletPlan& plan,
                             bool with_gradient) {
  if (candidate.rank() != 3 || candidate.dim(0) != ref.channels()) {
    throw ShapeError("candidate " + shape_string(candidate.shape()) + " does not match a " +
                     std::to_string(ref.channels()) + "-channel reference");
  }
  LossEvaluation out;
  out.report.layer_terms.assign(ref.extractor().tap_count(), 0.0);
  ag::Var x = with_gradient ? ag::leaf(candidate) : ag::constant(candidate);
  for (const TripletIndex& t : plan.triplets) {
    LossGraph graph = triplet_loss_graph(x, t, ref);
    out.report.total += plan.weight * graph.total.item();
    for (std::size_t l = 0; l < graph.layers.size(); ++l) {
      out.report.layer_terms[l] += plan.weight * graph.layers[l].item();
    }
    out.report.triplets.push_back(t);
    if (with_gradient) ag::backward(ag::scale(graph.total, plan.weight));
  }
  if (with_gradient) out.gradient = x.grad().empty() ? Tensor(candidate.shape()) : x.grad();
  return out;
}

TripletPlan exact_plan(int n, const ExactOptions& options) {
  if (n < 1) throw std::invalid_argument("exact_plan: channel count must be >= 1");
  if (n > options.enumeration_cap && !options.force) {
    throw ConfigError("exact n-channel loss needs " + std::to_string(n * n * n) + " evaluations for n = " +
                      std::to_string(n) + ", above the enumeration cap n <= " +
                      std::to_string(options.enumeration_cap));
  }
  return {all_triplets(n), 1.0 / (static_cast<double>(n) * n * n)};
}

TripletPlan stochastic_plan(int n, TripletSource& source, int k) {
  if (k < 1) throw std::invalid_argument("stochastic_plan: k must be >= 1");
  TripletPlan plan{{}, 1.0 / k};
  for (int i = 0; i < k; ++i) plan.triplets.push_back(source.next(n));
  return plan;
}

TripletPlan separate_plan(int n, const std::vector<TripletIndex>& groups) {
  if (groups.empty()) throw ConfigError("separate baseline needs at least one group");
  std::set<int> used;
  for (const TripletIndex& g : groups) {
    if (!g.within(n)) {
      throw std::out_of_range("group (" + g.to_string() + ") outside [0, " + std::to_string(n) + ")");
    }
    const std::set<int> members(g.channels.begin(), g.channels.end());
    for (int c : members) {
      if (!used.insert(c).second) throw ConfigError("separate baseline groups overlap on channel " + std::to_string(c));
    }
  }
  return {groups, 1.0};
}

namespace {

void check_pair(const MaterialStack& a, const MaterialStack& b) {
  if (a.channels() != b.channels()) {
    throw ShapeError("channel-count mismatch: " + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.channels()));
  }
}

}  // namespace

LossReport loss_nchannel_exact(const MaterialStack& a, const MaterialStack& b, const FeatureExtractor& extractor,
                               const ExactOptions& options) {
  check_pair(a, b);
  const TexturalReference ref(extractor, b.data());
  return evaluate_plan(a.data(), ref, exact_plan(a.channels(), options), false).report;
}

LossReport loss_nchannel_stochastic(const MaterialStack& a, const MaterialStack& b,
                                    const FeatureExtractor& extractor, TripletSource& source, int k) {
  check_pair(a, b);
  const TexturalReference ref(extractor, b.data());
  return evaluate_plan(a.data(), ref, stochastic_plan(a.channels(), source, k), false).report;
}

LossReport loss_separate_baseline(const MaterialStack& a, const MaterialStack& b, const FeatureExtractor& extractor,
                                  const std::vector<TripletIndex>& groups) {
  check_pair(a, b);
  const TexturalReference ref(extractor, b.data());
  return evaluate_plan(a.data(), ref, separate_plan(a.channels(), groups), false).report;
}

}  // namespace mtex

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtex/errors.hpp"
#include "mtex/rng.hpp"

namespace mtex {
namespace {

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string optional_csv(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

Tensor plane_of(const MaterialStack& s, int c) {
  Tensor p({s.height(), s.width()});
  const auto src = s.data().plane(c);
  std::copy(src.begin(), src.end(), p.data());
  return p;
}

}  // namespace

nlohmann::ordered_json AlignmentReport::to_json() const {
  nlohmann::ordered_json out;
  out["metric"] = "edge-magnitude Pearson correlation (proxy for cross-channel alignment)";
  out["error"] = error;
  out["raw_error"] = raw_error;
  out["compared_pairs"] = compared_pairs;
  out["pairs"] = nlohmann::ordered_json::array();
  for (const PairCorrelation& p : pairs) {
    out["pairs"].push_back({{"i", p.i},
                            {"j", p.j},
                            {"edge_a", optional_json(p.edge_a)},
                            {"edge_b", optional_json(p.edge_b)},
                            {"raw_a", optional_json(p.raw_a)},
                            {"raw_b", optional_json(p.raw_b)}});
  }
  out["flags"] = flags;
  return out;
}

std::string AlignmentReport::to_csv() const {
  std::string out = "i,j,edge_a,edge_b,raw_a,raw_b\n";
  for (const PairCorrelation& p : pairs) {
    out += std::to_string(p.i) + ',' + std::to_string(p.j) + ',' + optional_csv(p.edge_a) + ',' +
           optional_csv(p.edge_b) + ',' + optional_csv(p.raw_a) + ',' + optional_csv(p.raw_b) + '\n';
  }
  return out;
}

Tensor edge_magnitude(const Tensor& plane) {
  if (plane.rank() != 2 || plane.dim(0) < 3 || plane.dim(1) < 3) {
    throw ShapeError("edge_magnitude needs an (H, W) plane with H, W >= 3, got " + shape_string(plane.shape()));
  }
  const int h = plane.dim(0), w = plane.dim(1);
  Tensor out({h - 2, w - 2});
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double gx = 0.5 * (plane[static_cast<std::size_t>(y) * w + x + 1] - plane[static_cast<std::size_t>(y) * w + x - 1]);
      const double gy = 0.5 * (plane[static_cast<std::size_t>(y + 1) * w + x] - plane[static_cast<std::size_t>(y - 1) * w + x]);
      out[static_cast<std::size_t>(y - 1) * (w - 2) + (x - 1)] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  if (x.empty()) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AlignmentReport alignment_metric(const MaterialStack& a, const MaterialStack& b) {
  if (a.channels() != b.channels()) {
    throw ShapeError("alignment_metric: channel-count mismatch " + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.channels()));
  }
  const int n = a.channels();
  std::vector<Tensor> raw_a, raw_b, edge_a, edge_b;
  for (int c = 0; c < n; ++c) {
    raw_a.push_back(plane_of(a, c));
    raw_b.push_back(plane_of(b, c));
    edge_a.push_back(edge_magnitude(raw_a.back()));
    edge_b.push_back(edge_magnitude(raw_b.back()));
  }
  AlignmentReport report;
  double edge_sum = 0.0, raw_sum = 0.0;
  int raw_pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      PairCorrelation p{i, j, pearson(edge_a[i].values(), edge_a[j].values()),
                        pearson(edge_b[i].values(), edge_b[j].values()), pearson(raw_a[i].values(), raw_a[j].values()),
                        pearson(raw_b[i].values(), raw_b[j].values())};
      if (p.edge_a && p.edge_b) {
        edge_sum += std::abs(*p.edge_a - *p.edge_b);
        ++report.compared_pairs;
      } else {
        report.flags.push_back("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") skipped: constant edge map in " +
                               (!p.edge_a && !p.edge_b ? "both stacks" : (!p.edge_a ? "a" : "b")));
      }
      if (p.raw_a && p.raw_b) {
        raw_sum += std::abs(*p.raw_a - *p.raw_b);
        ++raw_pairs;
      }
      report.pairs.push_back(p);
    }
  }
  report.error = report.compared_pairs > 0 ? edge_sum / report.compared_pairs : 0.0;
  report.raw_error = raw_pairs > 0 ? raw_sum / raw_pairs : 0.0;
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json UnbiasednessReport::to_json() const {
  return {{"channels", channels}, {"exact", exact}, {"stochastic_mean", stochastic_mean},
          {"relative_gap", relative_gap}};
}

UnbiasednessReport unbiasedness_check(const MaterialStack& a, const MaterialStack& b,
                                      const FeatureExtractor& extractor, const ExactOptions& options) {
  UnbiasednessReport report;
  report.channels = a.channels();
  report.exact = loss_nchannel_exact(a, b, extractor, options).total;
  const int count = a.channels() * a.channels() * a.channels();
  EnumeratedTriplets source;
  double sum = 0.0;
  for (int i = 0; i < count; ++i) sum += loss_nchannel_stochastic(a, b, extractor, source).total;
  report.stochastic_mean = sum / count;
  const double gap = std::abs(report.exact - report.stochastic_mean);
  report.relative_gap = gap == 0.0 ? 0.0 : gap / std::abs(report.exact);
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json GradcheckReport::to_json() const {
  return {{"coordinates", coordinates},
          {"max_relative_error", max_relative_error},
          {"max_scaled_error", max_scaled_error},
          {"gradient_scale", gradient_scale},
          {"nonsmooth_coordinates", nonsmooth_coordinates}};
}

GradcheckReport gradcheck(const DifferentiableFn& f, const Tensor& point, int coordinates, std::uint64_t seed,
                          double step) {
  if (point.size() == 0) throw std::invalid_argument("gradcheck: empty point");
  if (!(step > 0.0)) throw std::invalid_argument("gradcheck: step must be > 0");
  Tensor analytic;
  f(point, &analytic);
  if (analytic.shape() != point.shape()) throw std::invalid_argument("gradcheck: gradient shape mismatch");
  double scale = 0.0;
  for (double v : analytic.values()) scale = std::max(scale, std::abs(v));

  std::vector<std::size_t> order(point.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, SeedStream::kEvaluation));
  const std::size_t wanted = std::min<std::size_t>(static_cast<std::size_t>(std::max(coordinates, 1)), order.size());

  constexpr double kStencilTolerance = 1e-5;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  std::vector<std::pair<std::size_t, double>> checked;
  Tensor probe = point;
  auto at = [&](std::size_t idx, double x) {
    probe[idx] = x;
    return f(probe, nullptr);
  };
  int nonsmooth = 0;
  for (std::size_t drawn = 0; drawn < order.size() && checked.size() < wanted; ++drawn) {
    const std::size_t j = drawn + static_cast<std::size_t>(uniform_index(rng, static_cast<int>(order.size() - drawn)));
    std::swap(order[drawn], order[j]);
    const std::size_t idx = order[drawn];
    const double x0 = point[idx];
    const double up = at(idx, x0 + step), down = at(idx, x0 - step);
    const double up_half = at(idx, x0 + 0.5 * step), down_half = at(idx, x0 - 0.5 * step);
    probe[idx] = x0;
    const double full = (up - down) / (2.0 * step);
    const double half = (up_half - down_half) / step;
    // A non-smooth point inside the stencil makes the two step sizes disagree.
    const double noise = 8.0 * kEps * std::max({std::abs(up), std::abs(down), std::abs(up_half), std::abs(down_half)}) / step;
    const double spread = kStencilTolerance * std::max({std::abs(full), std::abs(half), 1e-6 * scale}) + noise;
    if (std::abs(full - half) > spread) {
      ++nonsmooth;
      continue;
    }
    checked.emplace_back(idx, full);
  }

  GradcheckReport report;
  report.coordinates = static_cast<int>(checked.size());
  report.nonsmooth_coordinates = nonsmooth;
  for (const auto& [idx, n] : checked) report.gradient_scale = std::max(report.gradient_scale, std::abs(analytic[idx]));
  const double floor = 1e-6 * report.gradient_scale;
  for (const auto& [idx, n] : checked) {
    const double a = analytic[idx];
    const double diff = std::abs(a - n);
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    if (denom > 0.0) report.max_relative_error = std::max(report.max_relative_error, diff / denom);
    if (report.gradient_scale > 0.0) {
      report.max_scaled_error = std::max(report.max_scaled_error, diff / report.gradient_scale);
    } else if (diff > 0.0) {
      report.max_scaled_error = INFINITY;
    }
  }
  return report;
}

DifferentiableFn quadratic_loss() {
  return [](const Tensor& x, Tensor* gradient) {
    if (gradient) {
      *gradient = x;
      *gradient *= 2.0;
    }
    return x.squared_norm();
  };
}

DifferentiableFn loss_3channel_fn(const FeatureExtractor& extractor, const Tensor& reference) {
  auto target = std::make_shared<const GramStatistics>(extractor.grams(reference));
  return [&extractor, target](const Tensor& x, Tensor* gradient) {
    if (!gradient) return loss_3channel(x, *target, extractor).total;
    ag::Var leaf = ag::leaf(x);
    const LossGraph graph = loss_3channel_graph(leaf, *target, extractor);
    ag::backward(graph.total);
    *gradient = leaf.grad();
    return graph.total.item();
  };
}

DifferentiableFn loss_stochastic_fn(const FeatureExtractor& extractor, const Tensor& reference, std::uint64_t seed,
                                    int k) {
  auto ref = std::make_shared<const TexturalReference>(extractor, reference, std::make_shared<GramCache>());
  RandomTriplets source(seed);
  auto plan = std::make_shared<const TripletPlan>(stochastic_plan(reference.dim(0), source, k));
  return [ref, plan](const Tensor& x, Tensor* gradient) {
    LossEvaluation eval = evaluate_plan(x, *ref, *plan, gradient != nullptr);
    if (gradient) *gradient = std::move(eval.gradient);
    return eval.report.total;
  };
}

}  // namespace mtex

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

#include "mtex/experiment.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mtex/errors.hpp"

namespace mtex {
namespace {

using Json = nlohmann::ordered_json;

// Reads known keys of one object and rejects the rest.
class Reader {
 public:
  Reader(const Json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& dst) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      dst = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type (" + obj_.at(key).dump() + ")");
    }
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const Json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename E>
E enum_from(const std::string& where, const std::string& text,
            const std::vector<std::pair<std::string, E>>& table) {
  std::string options;
  for (const auto& [name, value] : table) {
    if (name == text) return value;
    options += (options.empty() ? "" : ", ") + name;
  }
  throw ConfigError(where + ": unknown value '" + text + "' (expected one of " + options + ")");
}

template <typename E>
std::string enum_to(E value, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

const std::vector<std::pair<std::string, LossMode>> kLossModes{
    {"stochastic", LossMode::kStochastic}, {"exact", LossMode::kExact}, {"separate", LossMode::kSeparate}};
const std::vector<std::pair<std::string, InitMode>> kInitModes{
    {"mean-plus-noise", InitMode::kMeanPlusNoise}, {"uniform-noise", InitMode::kUniformNoise}};
const std::vector<std::pair<std::string, Parameterization>> kParams{
    {"sigmoid", Parameterization::kSigmoid}, {"clamped", Parameterization::kClamped}};
const std::vector<std::pair<std::string, PoolingMode>> kPooling{{"average", PoolingMode::kAverage},
                                                                {"max", PoolingMode::kMax}};
const std::vector<std::pair<std::string, TripletSharing>> kSharing{{"batch", TripletSharing::kPerBatch},
                                                                   {"element", TripletSharing::kPerElement}};
const std::vector<std::pair<std::string, Command>> kCommands{{"synthesize", Command::kSynthesize},
                                                             {"train", Command::kTrain},
                                                             {"generate", Command::kGenerate},
                                                             {"eval", Command::kEval}};

Json adam_json(const AdamConfig& a) {
  return {{"learning_rate", a.learning_rate}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"epsilon", a.epsilon}};
}

void read_adam(const Json& j, const std::string& where, AdamConfig& a) {
  Reader r(j, where);
  r.get("learning_rate", a.learning_rate);
  r.get("beta1", a.beta1);
  r.get("beta2", a.beta2);
  r.get("epsilon", a.epsilon);
  r.finish();
}

void read_size(Reader& r, const std::string& key, int& h, int& w) {
  std::vector<int> size;
  r.get(key, size);
  if (const Json* j = r.child(key); j != nullptr) {
    if (size.size() != 2) throw ConfigError(r.where() + "." + key + ": expected [height, width]");
    h = size[0];
    w = size[1];
  }
}

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::kSynthesize: return "synthesize";
    case Command::kTrain: return "train";
    case Command::kGenerate: return "generate";
    case Command::kEval: return "eval";
  }
  return "?";
}

std::pair<int, int> parse_size(const std::string& text) {
  int h = 0, w = 0;
  char sep = 0;
  std::istringstream in(text);
  if (text.find_first_of("xX") == std::string::npos) {
    if (!(in >> h) || !in.eof()) throw ConfigError("bad size '" + text + "' (expected HxW or N)");
    w = h;
  } else if (!(in >> h >> sep >> w) || (sep != 'x' && sep != 'X') || !in.eof()) {
    throw ConfigError("bad size '" + text + "' (expected HxW or N)");
  }
  if (h <= 0 || w <= 0) throw ConfigError("size must be positive, got '" + text + "'");
  return {h, w};
}

void ExperimentConfig::propagate() {
  synthesis.seed = seed;
  synthesis.loss = loss;
  training.seed = seed;
  training.k = loss.k;
}

std::filesystem::path ExperimentConfig::model_path() const {
  return model.empty() ? output_dir / "model.mtxa" : model;
}

Json ExperimentConfig::to_json() const {
  Json groups = Json::array();
  for (const TripletIndex& g : loss.groups) groups.push_back({g[0], g[1], g[2]});
  Json j;
  j["command"] = command_name(command);
  j["exemplar"] = exemplar.string();
  j["output_dir"] = output_dir.string();
  j["seed"] = seed;
  j["bit_depth"] = bit_depth;
  j["extractor"] = {{"weights", extractor.weights_source},
                    {"taps", extractor.taps},
                    {"pooling", enum_to(extractor.pooling, kPooling)},
                    {"mean", extractor.mean},
                    {"std", extractor.stddev}};
  j["loss"] = {{"mode", enum_to(loss.mode, kLossModes)},
               {"k", loss.k},
               {"groups", groups},
               {"enumeration_cap", loss.exact.enumeration_cap},
               {"force_exact", loss.exact.force}};
  j["synthesis"] = {{"size", {synthesis.height, synthesis.width}},
                    {"steps", synthesis.steps},
                    {"adam", adam_json(synthesis.adam)},
                    {"init", enum_to(synthesis.init, kInitModes)},
                    {"noise_amplitude", synthesis.noise_amplitude},
                    {"parameterization", enum_to(synthesis.parameterization, kParams)},
                    {"exact_every", synthesis.exact_every},
                    {"checkpoint_every", synthesis.checkpoint_every}};
  Json t = training.to_json();
  t.erase("seed");
  t.erase("k");
  j["training"] = t;
  j["model"] = model.string();
  j["generate"] = {{"size", {generate_height, generate_width}}};
  j["eval"] = {{"unbiasedness", eval.unbiasedness},
               {"gradcheck", eval.gradcheck},
               {"alignment", eval.alignment},
               {"candidate", eval.candidate.string()},
               {"baseline", eval.baseline.string()},
               {"gradcheck_coordinates", eval.gradcheck_coordinates},
               {"gradcheck_tolerance", eval.gradcheck_tolerance},
               {"unbiasedness_tolerance", eval.unbiasedness_tolerance}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& doc, const std::filesystem::path& base_dir,
                                             Command command) {
  if (doc.is_object() && doc.contains("config") && doc.value("tool", "") == "mtex") {
    return from_json(doc.at("config"), base_dir, command);
  }
  ExperimentConfig c;
  c.command = command;
  Reader r(doc, "config");
  std::string text;
  r.get("command", text);
  if (!text.empty() && enum_from("config.command", text, kCommands) != command) {
    throw ConfigError("config file is for '" + text + "' but the command is '" + command_name(command) + "'");
  }
  std::string path;
  r.get("exemplar", path);
  c.exemplar = resolve(base_dir, path);
  path.clear();
  r.get("output_dir", path);
  if (!path.empty()) c.output_dir = resolve(base_dir, path);
  path.clear();
  r.get("model", path);
  c.model = resolve(base_dir, path);
  r.get("seed", c.seed);
  r.get("bit_depth", c.bit_depth);

  if (const Json* j = r.child("extractor")) {
    Reader e(*j, "config.extractor");
    std::string weights = c.extractor.weights_source;
    e.get("weights", weights);
    c.extractor.weights_source = weights == "mock" ? weights : resolve(base_dir, weights).string();
    e.get("taps", c.extractor.taps);
    std::string pooling = enum_to(c.extractor.pooling, kPooling);
    e.get("pooling", pooling);
    c.extractor.pooling = enum_from("config.extractor.pooling", pooling, kPooling);
    e.get("mean", c.extractor.mean);
    e.get("std", c.extractor.stddev);
    e.finish();
  }
  if (const Json* j = r.child("loss")) {
    Reader l(*j, "config.loss");
    std::string mode = enum_to(c.loss.mode, kLossModes);
    l.get("mode", mode);
    c.loss.mode = enum_from("config.loss.mode", mode, kLossModes);
    l.get("k", c.loss.k);
    std::vector<std::array<int, 3>> groups;
    l.get("groups", groups);
    for (const auto& g : groups) c.loss.groups.push_back(TripletIndex{g});
    l.get("enumeration_cap", c.loss.exact.enumeration_cap);
    l.get("force_exact", c.loss.exact.force);
    l.finish();
  }
  if (const Json* j = r.child("synthesis")) {
    Reader s(*j, "config.synthesis");
    read_size(s, "size", c.synthesis.height, c.synthesis.width);
    s.get("steps", c.synthesis.steps);
    if (const Json* a = s.child("adam")) read_adam(*a, "config.synthesis.adam", c.synthesis.adam);
    std::string init = enum_to(c.synthesis.init, kInitModes);
    s.get("init", init);
    c.synthesis.init = enum_from("config.synthesis.init", init, kInitModes);
    s.get("noise_amplitude", c.synthesis.noise_amplitude);
    std::string param = enum_to(c.synthesis.parameterization, kParams);
    s.get("parameterization", param);
    c.synthesis.parameterization = enum_from("config.synthesis.parameterization", param, kParams);
    s.get("exact_every", c.synthesis.exact_every);
    s.get("checkpoint_every", c.synthesis.checkpoint_every);
    s.finish();
  }
  if (const Json* j = r.child("training")) {
    Reader t(*j, "config.training");
    TrainConfig& tc = c.training;
    if (const Json* a = t.child("architecture")) {
      Reader ar(*a, "config.training.architecture");
      ar.get("scales", tc.architecture.scales);
      ar.get("noise_channels", tc.architecture.noise_channels);
      ar.get("block_width", tc.architecture.block_width);
      ar.get("leaky_slope", tc.architecture.leaky_slope);
      ar.get("norm_epsilon", tc.architecture.norm_epsilon);
      ar.finish();
    }
    t.get("batch_size", tc.batch_size);
    t.get("steps", tc.steps);
    if (const Json* a = t.child("adam")) read_adam(*a, "config.training.adam", tc.adam);
    std::string sharing = enum_to(tc.sharing, kSharing);
    t.get("triplet_sharing", sharing);
    tc.sharing = enum_from("config.training.triplet_sharing", sharing, kSharing);
    t.get("crop_size", tc.crop_size);
    t.get("checkpoint_every", tc.checkpoint_every);
    t.get("running_mean_window", tc.running_mean_window);
    t.get("divergence_factor", tc.divergence_factor);
    t.get("divergence_patience", tc.divergence_patience);
    t.finish();
  }
  if (const Json* j = r.child("generate")) {
    Reader g(*j, "config.generate");
    read_size(g, "size", c.generate_height, c.generate_width);
    g.finish();
  }
  if (const Json* j = r.child("eval")) {
    Reader e(*j, "config.eval");
    e.get("unbiasedness", c.eval.unbiasedness);
    e.get("gradcheck", c.eval.gradcheck);
    e.get("alignment", c.eval.alignment);
    path.clear();
    e.get("candidate", path);
    c.eval.candidate = resolve(base_dir, path);
    path.clear();
    e.get("baseline", path);
    c.eval.baseline = resolve(base_dir, path);
    e.get("gradcheck_coordinates", c.eval.gradcheck_coordinates);
    e.get("gradcheck_tolerance", c.eval.gradcheck_tolerance);
    e.get("unbiasedness_tolerance", c.eval.unbiasedness_tolerance);
    e.finish();
  }
  r.finish();
  c.propagate();
  return c;
}

ExperimentConfig ExperimentConfig::read(const std::filesystem::path& path, Command command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return from_json(doc, std::filesystem::absolute(path).parent_path(), command);
}

}  // namespace mtex

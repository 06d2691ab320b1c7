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

#ifndef MTEX_EXPERIMENT_HPP_
#define MTEX_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mtex/feature_extractor.hpp"
#include "mtex/generator.hpp"
#include "mtex/synthesis.hpp"

namespace mtex {

enum class Command { kSynthesize, kTrain, kGenerate, kEval };

const char* command_name(Command c);

struct EvalOptions {
  bool unbiasedness = true;
  bool gradcheck = true;
  bool alignment = false;
  // Alignment inputs: synthesized stack and, optionally, a baseline stack.
  std::filesystem::path candidate;
  std::filesystem::path baseline;
  int gradcheck_coordinates = 100;
  double gradcheck_tolerance = 1e-4;
  double unbiasedness_tolerance = 1e-6;
};

/// Everything one CLI run needs. Relative paths in a config file resolve
/// against that file's directory; the resolved form written to run.json uses
/// absolute paths and reproduces the run when passed back as --config.
struct ExperimentConfig {
  Command command = Command::kSynthesize;
  // Exemplar material manifest.
  std::filesystem::path exemplar;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  ExtractorConfig extractor;
  LossConfig loss;
  SynthesisConfig synthesis;
  TrainConfig training;
  // train: where the model is written (empty: <output_dir>/model.mtxa); generate: model to load.
  std::filesystem::path model;
  int generate_height = 256;
  int generate_width = 256;
  int bit_depth = 8;
  EvalOptions eval;

  // Copies `seed` and `loss` into the synthesis and training blocks.
  void propagate();
  std::filesystem::path model_path() const;

  nlohmann::ordered_json to_json() const;
  /// ConfigError on unknown keys, wrong types, or a "command" that differs
  /// from `command`. Accepts a run.json, whose "config" block is used.
  static ExperimentConfig from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir,
                                    Command command);
  static ExperimentConfig read(const std::filesystem::path& path, Command command);
};

// "HxW" or "N" (square); ConfigError otherwise.
std::pair<int, int> parse_size(const std::string& text);

}  // namespace mtex

#endif  // MTEX_EXPERIMENT_HPP_

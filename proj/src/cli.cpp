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

#include "mtex/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mtex/errors.hpp"
#include "mtex/evaluation.hpp"
#include "mtex/experiment.hpp"
#include "mtex/generator.hpp"
#include "mtex/synthesis.hpp"

namespace mtex {
namespace {

using Json = nlohmann::ordered_json;

constexpr int kRunManifestVersion = 1;

// Flag values; unset options leave the config untouched.
struct Flags {
  std::string config;
  std::optional<std::string> exemplar, out, size, loss, weights, init, parameterization, sharing, model, candidate,
      baseline, checks;
  std::optional<int> steps, k, exact_every, checkpoint_every, bit_depth, batch, crop, scales, coordinates;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename E>
E parse_choice(const std::string& flag, const std::string& value, const std::vector<std::pair<std::string, E>>& t) {
  for (const auto& [name, e] : t) {
    if (name == value) return e;
  }
  throw ConfigError("--" + flag + ": unknown value '" + value + "'");
}

ExperimentConfig resolve_config(Command command, const Flags& f) {
  ExperimentConfig c;
  c.command = command;
  if (!f.config.empty()) c = ExperimentConfig::read(f.config, command);
  auto absolute = [](const std::string& p) { return std::filesystem::absolute(p).lexically_normal(); };
  if (f.exemplar) c.exemplar = absolute(*f.exemplar);
  if (f.out) c.output_dir = *f.out;
  c.output_dir = std::filesystem::absolute(c.output_dir).lexically_normal();
  if (f.seed) c.seed = *f.seed;
  if (f.weights) c.extractor.weights_source = *f.weights == "mock" ? "mock" : absolute(*f.weights).string();
  if (f.loss) {
    c.loss.mode = parse_choice<LossMode>("loss", *f.loss,
                                         {{"stochastic", LossMode::kStochastic},
                                          {"exact", LossMode::kExact},
                                          {"separate", LossMode::kSeparate}});
  }
  if (f.k) c.loss.k = *f.k;
  if (f.bit_depth) c.bit_depth = *f.bit_depth;
  if (f.model) c.model = absolute(*f.model);
  switch (command) {
    case Command::kSynthesize:
      if (f.steps) c.synthesis.steps = *f.steps;
      if (f.lr) c.synthesis.adam.learning_rate = *f.lr;
      if (f.size) std::tie(c.synthesis.height, c.synthesis.width) = parse_size(*f.size);
      if (f.exact_every) c.synthesis.exact_every = *f.exact_every;
      if (f.checkpoint_every) c.synthesis.checkpoint_every = *f.checkpoint_every;
      if (f.init) {
        c.synthesis.init = parse_choice<InitMode>(
            "init", *f.init, {{"mean-plus-noise", InitMode::kMeanPlusNoise}, {"uniform-noise", InitMode::kUniformNoise}});
      }
      if (f.parameterization) {
        c.synthesis.parameterization = parse_choice<Parameterization>(
            "parameterization", *f.parameterization,
            {{"sigmoid", Parameterization::kSigmoid}, {"clamped", Parameterization::kClamped}});
      }
      break;
    case Command::kTrain:
      if (f.steps) c.training.steps = *f.steps;
      if (f.lr) c.training.adam.learning_rate = *f.lr;
      if (f.batch) c.training.batch_size = *f.batch;
      if (f.crop) c.training.crop_size = *f.crop;
      if (f.scales) c.training.architecture.scales = *f.scales;
      if (f.checkpoint_every) c.training.checkpoint_every = *f.checkpoint_every;
      if (f.sharing) {
        c.training.sharing = parse_choice<TripletSharing>(
            "sharing", *f.sharing, {{"batch", TripletSharing::kPerBatch}, {"element", TripletSharing::kPerElement}});
      }
      break;
    case Command::kGenerate:
      if (f.size) std::tie(c.generate_height, c.generate_width) = parse_size(*f.size);
      break;
    case Command::kEval:
      if (f.candidate) c.eval.candidate = absolute(*f.candidate);
      if (f.baseline) c.eval.baseline = absolute(*f.baseline);
      if (f.coordinates) c.eval.gradcheck_coordinates = *f.coordinates;
      if (f.checks) {
        c.eval.unbiasedness = c.eval.gradcheck = c.eval.alignment = false;
        std::stringstream list(*f.checks);
        std::string item;
        while (std::getline(list, item, ',')) {
          if (item == "unbiasedness") {
            c.eval.unbiasedness = true;
          } else if (item == "gradcheck") {
            c.eval.gradcheck = true;
          } else if (item == "alignment") {
            c.eval.alignment = true;
          } else {
            throw ConfigError("--checks: unknown check '" + item + "' (unbiasedness, gradcheck, alignment)");
          }
        }
      }
      break;
  }
  c.propagate();
  if (c.bit_depth != 8 && c.bit_depth != 16) throw ConfigError("bit depth must be 8 or 16");
  if (command == Command::kTrain && c.loss.mode != LossMode::kStochastic) {
    throw ConfigError("generator training uses the stochastic loss; got loss mode other than 'stochastic'");
  }
  return c;
}

MaterialStack load_exemplar(const std::filesystem::path& manifest, const std::string& what, Json& warnings) {
  if (manifest.empty()) throw ConfigError("no " + what + " given (--exemplar or \"exemplar\" in --config)");
  std::vector<std::string> w;
  MaterialStack s = load_material(MaterialManifest::read(manifest), &w);
  for (const std::string& msg : w) warnings.push_back(what + ": " + msg);
  return s;
}

Json trace_summary(const LossTrace& trace) {
  Json s = Json::object();
  s["trace_rows"] = trace.size();
  for (auto it = trace.entries.rbegin(); it != trace.entries.rend(); ++it) {
    if (it->estimate) {
      s["final_estimate"] = *it->estimate;
      break;
    }
  }
  for (auto it = trace.entries.rbegin(); it != trace.entries.rend(); ++it) {
    if (it->exact) {
      s["final_exact"] = *it->exact;
      break;
    }
  }
  return s;
}

std::string step_tag(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d", step);
  return buf;
}

class Run {
 public:
  Run(Command command, ExperimentConfig config, std::ostream& out)
      : command_(command), config_(std::move(config)), out_(out) {
    manifest_["tool"] = "mtex";
    manifest_["format_version"] = kRunManifestVersion;
    manifest_["command"] = command_name(command);
    manifest_["status"] = "running";
    manifest_["config"] = config_.to_json();
    manifest_["outputs"] = Json::object();
    manifest_["warnings"] = Json::array();
  }

  // Loads inputs; every failure here maps to kExitConfig.
  void prepare() {
    std::filesystem::create_directories(config_.output_dir);
    if (command_ != Command::kGenerate || extractor_requested_) {
      extractor_ = std::make_unique<FeatureExtractor>(FeatureExtractor::load(config_.extractor));
      manifest_["extractor_fingerprint"] = extractor_->fingerprint();
    }
    switch (command_) {
      case Command::kSynthesize:
        exemplar_ = load_exemplar(config_.exemplar, "exemplar", manifest_["warnings"]);
        validate(config_.synthesis, exemplar_, *extractor_);
        break;
      case Command::kTrain:
        exemplar_ = load_exemplar(config_.exemplar, "exemplar", manifest_["warnings"]);
        config_.training.validate();
        break;
      case Command::kGenerate: {
        if (config_.model.empty()) throw ConfigError("no model given (--model)");
        std::vector<std::string> w;
        model_ = load_model(config_.model, &w, extractor_ ? extractor_->fingerprint() : "");
        for (const std::string& msg : w) manifest_["warnings"].push_back(msg);
        model_.check_size(config_.generate_height, config_.generate_width);
        break;
      }
      case Command::kEval:
        if (!config_.exemplar.empty()) exemplar_ = load_exemplar(config_.exemplar, "exemplar", manifest_["warnings"]);
        if (config_.eval.alignment && (config_.exemplar.empty() || config_.eval.candidate.empty())) {
          throw ConfigError("alignment needs --exemplar and --candidate");
        }
        if (!config_.eval.candidate.empty()) {
          candidate_ = load_exemplar(config_.eval.candidate, "candidate", manifest_["warnings"]);
        }
        if (!config_.eval.baseline.empty()) {
          baseline_ = load_exemplar(config_.eval.baseline, "baseline", manifest_["warnings"]);
        }
        break;
    }
  }

  void set_extractor_requested(bool v) { extractor_requested_ = v; }

  int execute() {
    int code = kExitOk;
    switch (command_) {
      case Command::kSynthesize: synthesize_run(); break;
      case Command::kTrain: train_run(); break;
      case Command::kGenerate: generate_run(); break;
      case Command::kEval: code = eval_run(); break;
    }
    manifest_["status"] = code == kExitOk ? "ok" : "checks_failed";
    finish();
    return code;
  }

  // Records a failure in run.json when the output directory exists.
  void fail(const std::string& message) {
    manifest_["status"] = "failed";
    manifest_["error"] = message;
    std::error_code ec;
    if (std::filesystem::is_directory(config_.output_dir, ec)) {
      try {
        finish();
      } catch (const std::exception&) {
      }
    }
  }

 private:
  std::filesystem::path out(const std::string& name) const { return config_.output_dir / name; }

  void finish() { write_text(out("run.json"), manifest_.dump(2) + "\n"); }

  void write_maps(const MaterialStack& stack, const std::filesystem::path& dir, Json& record) {
    const MaterialManifest written =
        save_material(stack, MaterialManifest::for_output(stack.layout(), dir, config_.bit_depth));
    record["manifest"] = (dir / "manifest.json").string();
    record["maps"] = Json::array();
    for (const RoleSource& r : written.roles) record["maps"].push_back(r.path.string());
  }

  void synthesize_run() {
    auto checkpoint = [&](int step, const MaterialStack& s) {
      Json record;
      write_maps(s, out("checkpoints") / step_tag(step), record);
    };
    const SynthesisResult r = synthesize(exemplar_, config_.synthesis, *extractor_, nullptr, checkpoint);
    Json outputs = Json::object();
    write_maps(r.stack, config_.output_dir, outputs);
    r.trace.write_csv(out("trace.csv"));
    outputs["trace"] = out("trace.csv").string();
    const std::size_t maps = outputs["maps"].size();
    manifest_["outputs"] = std::move(outputs);
    manifest_["summary"] = trace_summary(r.trace);
    out_ << "wrote " << maps << " maps, " << r.trace.size() << " trace rows to "
         << config_.output_dir.string() << "\n";
  }

  void train_run() {
    std::filesystem::create_directories(config_.model_path().parent_path());
    auto checkpoint = [&](int step, const GeneratorModel& m) {
      std::filesystem::create_directories(out("checkpoints"));
      save_model(m, out("checkpoints") / ("model_" + step_tag(step) + ".mtxa"));
    };
    const TrainResult r = train_generator(exemplar_, config_.training, *extractor_, nullptr, checkpoint);
    save_model(r.model, config_.model_path());
    r.trace.write_csv(out("trace.csv"));
    manifest_["outputs"]["model"] = config_.model_path().string();
    manifest_["outputs"]["trace"] = out("trace.csv").string();
    manifest_["summary"] = trace_summary(r.trace);
    manifest_["summary"]["training_size"] = {r.training_height, r.training_width};
    manifest_["summary"]["parameter_count"] = r.model.parameter_count();
    out_ << "trained " << r.trace.size() << " steps at " << r.training_height << "x" << r.training_width
         << ", model written to " << config_.model_path().string() << "\n";
  }

  void generate_run() {
    const MaterialStack s = generate(model_, config_.generate_height, config_.generate_width, config_.seed);
    write_maps(s, config_.output_dir, manifest_["outputs"]);
    out_ << "generated " << config_.generate_height << "x" << config_.generate_width << " into "
         << config_.output_dir.string() << "\n";
  }

  int eval_run() {
    Json report;
    report["tool"] = "mtex";
    bool pass = true;
    const EvalOptions& e = config_.eval;
    if (e.unbiasedness) {
      Json rows = Json::array();
      auto record = [&](const UnbiasednessReport& u) {
        Json row = u.to_json();
        row["pass"] = u.relative_gap < e.unbiasedness_tolerance;
        pass = pass && row["pass"].get<bool>();
        rows.push_back(row);
      };
      if (!config_.exemplar.empty() && !e.candidate.empty() &&
          candidate_.channels() <= config_.loss.exact.enumeration_cap) {
        record(unbiasedness_check(candidate_, exemplar_, *extractor_, config_.loss.exact));
      } else {
        // Seeded random 16x16 stacks for n = 1..4.
        Rng rng(derive_seed(config_.seed, SeedStream::kEvaluation));
        for (int n = 1; n <= 4; ++n) {
          auto stack = [&] {
            Tensor t({n, 16, 16});
            for (double& v : t.values()) v = uniform01(rng);
            return MaterialStack(t, ChannelLayout::anonymous(n));
          };
          const MaterialStack a = stack(), b = stack();
          record(unbiasedness_check(a, b, *extractor_));
        }
      }
      report["unbiasedness"] = {{"tolerance", e.unbiasedness_tolerance}, {"results", rows}};
    }
    if (e.gradcheck) {
      Rng rng(derive_seed(config_.seed, SeedStream::kEvaluation) ^ 1);
      auto random = [&](int c) {
        Tensor t({c, 16, 16});
        for (double& v : t.values()) v = uniform01(rng);
        return t;
      };
      const Tensor x3 = random(3), r3 = random(3), x5 = random(5), r5 = random(5);
      const GradcheckReport g3 =
          gradcheck(loss_3channel_fn(*extractor_, r3), x3, e.gradcheck_coordinates, config_.seed);
      const GradcheckReport gs =
          gradcheck(loss_stochastic_fn(*extractor_, r5, config_.seed), x5, e.gradcheck_coordinates, config_.seed);
      Json j3 = g3.to_json(), js = gs.to_json();
      j3["pass"] = g3.max_relative_error < e.gradcheck_tolerance;
      js["pass"] = gs.max_relative_error < e.gradcheck_tolerance;
      pass = pass && j3["pass"].get<bool>() && js["pass"].get<bool>();
      report["gradcheck"] = {{"tolerance", e.gradcheck_tolerance}, {"loss_3channel", j3}, {"loss_stochastic", js}};
    }
    if (e.alignment) {
      const AlignmentReport a = alignment_metric(candidate_, exemplar_);
      Json aj = a.to_json();
      write_text(out("alignment.csv"), a.to_csv());
      manifest_["outputs"]["alignment_csv"] = out("alignment.csv").string();
      if (!e.baseline.empty()) {
        const AlignmentReport b = alignment_metric(baseline_, exemplar_);
        write_text(out("alignment_baseline.csv"), b.to_csv());
        aj["baseline_error"] = b.error;
        aj["pass"] = a.error <= b.error;
        pass = pass && aj["pass"].get<bool>();
      }
      report["alignment"] = aj;
    }
    report["pass"] = pass;
    write_text(out("report.json"), report.dump(2) + "\n");
    manifest_["outputs"]["report"] = out("report.json").string();
    out_ << (pass ? "all enabled checks passed" : "some checks failed") << "; report in "
         << out("report.json").string() << "\n";
    return pass ? kExitOk : kExitRuntime;
  }

  Command command_;
  ExperimentConfig config_;
  std::ostream& out_;
  Json manifest_;
  bool extractor_requested_ = false;
  std::unique_ptr<FeatureExtractor> extractor_;
  MaterialStack exemplar_, candidate_, baseline_;
  GeneratorModel model_;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its values");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--seed", f.seed, "Seed for every random choice");
  app->add_option("--weights", f.weights, "\"mock\" or a VGG-19 weight archive (.mtxa)");
  app->add_option("--bit-depth", f.bit_depth, "8 or 16");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Material texture synthesis with a multi-channel Gram loss", "mtex");
  app.require_subcommand(1);
  Flags f;

  CLI::App* syn = app.add_subcommand("synthesize", "Optimize a material stack against an exemplar");
  add_common(syn, f);
  syn->add_option("--exemplar", f.exemplar, "Exemplar material manifest");
  syn->add_option("--steps", f.steps, "Optimization steps");
  syn->add_option("--lr", f.lr, "Adam learning rate");
  syn->add_option("--size", f.size, "Output size HxW (default: exemplar size)");
  syn->add_option("--loss", f.loss, "stochastic, exact or separate");
  syn->add_option("--k", f.k, "Triplets per step (stochastic)");
  syn->add_option("--exact-every", f.exact_every, "Record the exact loss every N steps");
  syn->add_option("--checkpoint-every", f.checkpoint_every, "Write maps every N steps");
  syn->add_option("--init", f.init, "mean-plus-noise or uniform-noise");
  syn->add_option("--parameterization", f.parameterization, "sigmoid or clamped");

  CLI::App* train = app.add_subcommand("train", "Train a feedforward generator on an exemplar");
  add_common(train, f);
  train->add_option("--exemplar", f.exemplar, "Exemplar material manifest");
  train->add_option("--steps", f.steps, "Training steps");
  train->add_option("--lr", f.lr, "Adam learning rate");
  train->add_option("--batch", f.batch, "Batch size");
  train->add_option("--k", f.k, "Triplets per batch element");
  train->add_option("--crop", f.crop, "Exemplar crop size");
  train->add_option("--sharing", f.sharing, "batch or element");
  train->add_option("--scales", f.scales, "Generator pyramid scales");
  train->add_option("--model", f.model, "Model output path (default <out>/model.mtxa)");
  train->add_option("--checkpoint-every", f.checkpoint_every, "Save the model every N steps");

  CLI::App* gen = app.add_subcommand("generate", "Sample a trained generator");
  add_common(gen, f);
  gen->add_option("--model", f.model, "Trained model (.mtxa)");
  gen->add_option("--size", f.size, "Output size HxW");

  CLI::App* ev = app.add_subcommand("eval", "Estimator, gradient and alignment checks");
  add_common(ev, f);
  ev->add_option("--exemplar", f.exemplar, "Exemplar material manifest");
  ev->add_option("--candidate", f.candidate, "Synthesized material manifest (alignment)");
  ev->add_option("--baseline", f.baseline, "Baseline material manifest (alignment)");
  ev->add_option("--checks", f.checks, "Comma list of unbiasedness, gradcheck, alignment");
  ev->add_option("--coordinates", f.coordinates, "Gradient-check coordinates");

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  Command command = Command::kSynthesize;
  if (train->parsed()) command = Command::kTrain;
  if (gen->parsed()) command = Command::kGenerate;
  if (ev->parsed()) command = Command::kEval;
  const std::string prefix = std::string("mtex ") + command_name(command) + ": error: ";

  std::unique_ptr<Run> run;
  try {
    ExperimentConfig config = resolve_config(command, f);
    run = std::make_unique<Run>(command, std::move(config), out);
    run->set_extractor_requested(f.weights.has_value() || !f.config.empty());
    run->prepare();
  } catch (const std::exception& e) {
    err << prefix << e.what() << "\n";
    if (run) run->fail(e.what());
    return kExitConfig;
  }
  try {
    return run->execute();
  } catch (const ConfigError& e) {
    err << prefix << e.what() << "\n";
    run->fail(e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    err << prefix << e.what() << "\n";
    run->fail(e.what());
    return kExitRuntime;
  }
}

}  // namespace mtex

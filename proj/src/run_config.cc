/*
 * Copyright 2026 The Orthocast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "orthocast/run_config.h"

#include <fstream>

#include "orthocast/errors.h"

namespace orthocast {
namespace {

using Json = nlohmann::ordered_json;

LearnerSpec DeskMlp() {
  LearnerSpec s;
  s.kind = LearnerKind::kMlp;
  s.mlp_hidden = {32, 32};
  s.mlp_epochs = 30;
  s.mlp_batch = 64;
  s.mlp_lr = 0.01;
  s.mlp_momentum = 0.9;
  return s;
}

LearnerSpec DeskRidge() {
  LearnerSpec s;
  s.kind = LearnerKind::kRidge;
  s.ridge_lambda = 1.0;
  return s;
}

template <typename T>
void Read(const Json& j, const char* key, T* out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

}  // namespace

RunConfig RunConfig::Defaults() {
  RunConfig cfg;
  cfg.m_spec = DeskMlp();
  cfg.e_spec = DeskMlp();
  cfg.theta_spec = DeskRidge();
  cfg.direct_spec = DeskRidge();
  cfg.rdd = RddConfig::RailDefaults();
  return cfg;
}

void RunConfig::Validate() const {
  synth.Validate();
  featurizer.Validate();
  OutcomeSpec(m_spec).Validate();
  TreatmentSpec(e_spec, synth.encoding, synth.d).Validate();
  EffectSpec(theta_spec, synth.encoding, synth.d).Validate();
  direct_spec.Validate();
  rdd.Validate();
  if (eval.n_contexts < 1) throw ConfigError("eval.n_contexts must be >= 1");
  if (eval.n_test_series < 1) throw ConfigError("eval.n_test_series must be >= 1");
  if (eval.seeds < 1) throw ConfigError("eval.seeds must be >= 1");
  if (eval.sweep_seeds < 1) throw ConfigError("eval.sweep_seeds must be >= 1");
  if (eval.sweep_ns.empty()) throw ConfigError("eval.sweep_ns must not be empty");
  for (size_t i = 0; i < eval.sweep_ns.size(); ++i) {
    if (eval.sweep_ns[i] < 2 || (i > 0 && eval.sweep_ns[i] <= eval.sweep_ns[i - 1])) {
      throw ConfigError("eval.sweep_ns must be increasing and >= 2");
    }
  }
  if (eval.orthogonality_samples < 2) {
    throw ConfigError("eval.orthogonality_samples must be >= 2");
  }
  if (eval.orthogonality_pairs < 1) {
    throw ConfigError("eval.orthogonality_pairs must be >= 1");
  }
  if (eval.hessian_cases < 1) throw ConfigError("eval.hessian_cases must be >= 1");
  for (double step : {eval.orthogonality_fd_step, eval.hessian_fd_step,
                      eval.gradient_fd_step}) {
    if (!(step > 0.0)) throw ConfigError("eval fd steps must be > 0");
  }
}

PipelineConfig RunConfig::Pipeline(uint64_t s) const {
  PipelineConfig p;
  p.featurizer = featurizer;
  p.m_spec = m_spec;
  p.e_spec = e_spec;
  p.theta_spec = theta_spec;
  p.m_spec.seed = s * 3 + 1;
  p.e_spec.seed = s * 3 + 2;
  p.theta_spec.seed = s * 3 + 3;
  p.cross_fit = cross_fit;
  p.split_seed = s;
  return p;
}

LearnerSpec RunConfig::DirectSpec(uint64_t s) const {
  LearnerSpec d = direct_spec;
  d.seed = s * 3 + 4;
  return d;
}

ExperimentSettings RunConfig::Experiment() const {
  ExperimentSettings e;
  e.pipeline = Pipeline(seed);
  e.direct_spec = direct_spec;
  e.direct_interactions = direct_interactions;
  e.n_contexts = eval.n_contexts;
  e.n_test_series = eval.n_test_series;
  return e;
}

Json RunConfigToJson(const RunConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["synth"] = SynthConfigToJson(cfg.synth);
  j["featurizer"] = FeaturizerConfigToJson(cfg.featurizer);
  Json learners;
  learners["m"] = SpecToJson(cfg.m_spec);
  learners["e"] = SpecToJson(cfg.e_spec);
  learners["theta"] = SpecToJson(cfg.theta_spec);
  learners["direct"] = SpecToJson(cfg.direct_spec);
  learners["direct_interactions"] = cfg.direct_interactions;
  learners["cross_fit"] = cfg.cross_fit;
  j["learners"] = std::move(learners);
  j["rdd"] = RddConfigToJson(cfg.rdd);
  Json ev;
  ev["n_contexts"] = cfg.eval.n_contexts;
  ev["n_test_series"] = cfg.eval.n_test_series;
  ev["per_unit"] = cfg.eval.per_unit;
  ev["seeds"] = cfg.eval.seeds;
  ev["sweep_ns"] = cfg.eval.sweep_ns;
  ev["sweep_seeds"] = cfg.eval.sweep_seeds;
  ev["orthogonality_samples"] = cfg.eval.orthogonality_samples;
  ev["orthogonality_pairs"] = cfg.eval.orthogonality_pairs;
  ev["orthogonality_fd_step"] = cfg.eval.orthogonality_fd_step;
  ev["hessian_cases"] = cfg.eval.hessian_cases;
  ev["hessian_fd_step"] = cfg.eval.hessian_fd_step;
  ev["gradient_fd_step"] = cfg.eval.gradient_fd_step;
  j["eval"] = std::move(ev);
  j["io"] = {{"data_dir", cfg.io.data_dir},
             {"model", cfg.io.model},
             {"testset", cfg.io.testset},
             {"out_dir", cfg.io.out_dir}};
  j["jobs"] = cfg.jobs;
  return j;
}

RunConfig RunConfigFromJson(const Json& j, const RunConfig& defaults) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const char* kSections[] = {"seed", "synth", "featurizer", "learners",
                                    "rdd", "eval", "io", "jobs"};
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* s : kSections) known = known || item.key() == s;
    if (!known) throw ConfigError("unknown config section '" + item.key() + "'");
  }
  RunConfig cfg = defaults;
  Read(j, "seed", &cfg.seed, "config");
  Read(j, "jobs", &cfg.jobs, "config");
  if (j.contains("synth")) cfg.synth = SynthConfigFromJson(j.at("synth"), cfg.synth);
  if (j.contains("featurizer")) {
    cfg.featurizer = FeaturizerConfigFromJson(j.at("featurizer"), cfg.featurizer);
  }
  if (j.contains("learners")) {
    const Json& l = j.at("learners");
    if (!l.is_object()) throw ConfigError("learners section must be an object");
    if (l.contains("m")) cfg.m_spec = SpecFromJson(l.at("m"), cfg.m_spec);
    if (l.contains("e")) cfg.e_spec = SpecFromJson(l.at("e"), cfg.e_spec);
    if (l.contains("theta")) cfg.theta_spec = SpecFromJson(l.at("theta"), cfg.theta_spec);
    if (l.contains("direct")) {
      cfg.direct_spec = SpecFromJson(l.at("direct"), cfg.direct_spec);
    }
    Read(l, "direct_interactions", &cfg.direct_interactions, "learners");
    Read(l, "cross_fit", &cfg.cross_fit, "learners");
  }
  if (j.contains("rdd")) cfg.rdd = RddConfigFromJson(j.at("rdd"), cfg.rdd);
  if (j.contains("eval")) {
    const Json& e = j.at("eval");
    if (!e.is_object()) throw ConfigError("eval section must be an object");
    Read(e, "n_contexts", &cfg.eval.n_contexts, "eval");
    Read(e, "n_test_series", &cfg.eval.n_test_series, "eval");
    Read(e, "per_unit", &cfg.eval.per_unit, "eval");
    Read(e, "seeds", &cfg.eval.seeds, "eval");
    Read(e, "sweep_ns", &cfg.eval.sweep_ns, "eval");
    Read(e, "sweep_seeds", &cfg.eval.sweep_seeds, "eval");
    Read(e, "orthogonality_samples", &cfg.eval.orthogonality_samples, "eval");
    Read(e, "orthogonality_pairs", &cfg.eval.orthogonality_pairs, "eval");
    Read(e, "orthogonality_fd_step", &cfg.eval.orthogonality_fd_step, "eval");
    Read(e, "hessian_cases", &cfg.eval.hessian_cases, "eval");
    Read(e, "hessian_fd_step", &cfg.eval.hessian_fd_step, "eval");
    Read(e, "gradient_fd_step", &cfg.eval.gradient_fd_step, "eval");
  }
  if (j.contains("io")) {
    const Json& io = j.at("io");
    if (!io.is_object()) throw ConfigError("io section must be an object");
    Read(io, "data_dir", &cfg.io.data_dir, "io");
    Read(io, "model", &cfg.io.model, "io");
    Read(io, "testset", &cfg.io.testset, "io");
    Read(io, "out_dir", &cfg.io.out_dir, "io");
  }
  return cfg;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return RunConfigFromJson(j);
}

}  // namespace orthocast

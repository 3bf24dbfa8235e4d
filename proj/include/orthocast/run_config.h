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

// The single structured configuration driving every CLI command. A JSON
// object with optional sections; absent keys keep their defaults:
//
//   {
//     "seed": 1,
//     "synth":      { SynthConfig fields },
//     "featurizer": { FeaturizerConfig fields },
//     "learners":   { "m": spec, "e": spec, "theta": spec, "direct": spec,
//                     "direct_interactions": true, "cross_fit": false },
//     "rdd":        { RddConfig fields, optional "preset": "rail"|"health" },
//     "eval":       { EvalSettings fields },
//     "io":         { "data_dir", "model", "testset", "out_dir" }
//   }

#ifndef ORTHOCAST_RUN_CONFIG_H_
#define ORTHOCAST_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "orthocast/eval.h"
#include "orthocast/featurizer.h"
#include "orthocast/learner.h"
#include "orthocast/orthogonal.h"
#include "orthocast/rdd.h"
#include "orthocast/synthetic.h"

namespace orthocast {

struct EvalSettings {
  int n_contexts = 500;
  int n_test_series = 500;
  bool per_unit = true;
  int seeds = 1;
  std::vector<int> sweep_ns = {500, 2000, 8000};
  int sweep_seeds = 3;
  int orthogonality_samples = 100000;
  int orthogonality_pairs = 20;
  double orthogonality_fd_step = 1e-4;
  int hessian_cases = 100;
  double hessian_fd_step = 1e-3;
  double gradient_fd_step = 1e-5;
};

struct IoPaths {
  std::string data_dir = "run/data";
  std::string model = "run/model.json";
  std::string testset = "run/testset.csv";
  std::string out_dir = "run/eval";
};

struct RunConfig {
  uint64_t seed = 1;
  SynthConfig synth;
  FeaturizerConfig featurizer;
  LearnerSpec m_spec;
  LearnerSpec e_spec;
  LearnerSpec theta_spec;
  LearnerSpec direct_spec;
  bool direct_interactions = true;
  bool cross_fit = false;
  RddConfig rdd;
  EvalSettings eval;
  IoPaths io;
  int jobs = 0;

  // Desk-scale defaults: network nuisances, ridge effect model and a ridge
  // direct baseline with treatment interactions.
  static RunConfig Defaults();

  // Throws ConfigError naming the offending field.
  void Validate() const;

  // Pipeline and experiment settings with learner seeds derived from `seed`.
  PipelineConfig Pipeline(uint64_t seed) const;
  LearnerSpec DirectSpec(uint64_t seed) const;
  ExperimentSettings Experiment() const;
};

nlohmann::ordered_json RunConfigToJson(const RunConfig& cfg);
RunConfig RunConfigFromJson(const nlohmann::ordered_json& j,
                            const RunConfig& defaults = RunConfig::Defaults());
// Reads a JSON config file; throws ConfigError on I/O or parse failures.
RunConfig LoadRunConfig(const std::string& path);

}  // namespace orthocast

#endif  // ORTHOCAST_RUN_CONFIG_H_

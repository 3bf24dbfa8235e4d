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

// Fixed-length featurization of the causal context
//   W_t = (S, X_{1:t}, T_{1:tau}, Y_{1:tau})
// for forecast steps t > tau. Layout, in order:
//
//   S                                  p_s values
//   X_t                                p_x values
//   X_{t-j}, mask_j        j=1..k-1    p_x + 1 values each
//   T_tau, Y_tau                       2 values
//   T_{tau-j}, Y_{tau-j}, mask   j=1..P-1   3 values each  (P = pre_tau_lags)
//   mean, min, max of Y_{1:tau}        3 values   (include_aggregates)
//   L - t  (days to end)               1 value    (include_time)
//   weekday one-hot                    7 values   (include_weekday)
//
// Positions before the start of the series carry the pad value 0 and mask 0.
// Post-tau treatments and post-tau outcomes are never read.

#ifndef ORTHOCAST_FEATURIZER_H_
#define ORTHOCAST_FEATURIZER_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "orthocast/timeseries.h"

namespace orthocast {

struct FeaturizerConfig {
  int lag_window = 8;
  int pre_tau_lags = 4;
  bool include_aggregates = true;
  bool normalize = true;
  bool include_time = true;
  bool include_weekday = false;

  void Validate() const;
  bool operator==(const FeaturizerConfig&) const = default;
};

// Column-wise z-score statistics. A zero scale marks a constant column, which
// normalizes to 0.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return mean.empty(); }
  size_t size() const { return mean.size(); }
  bool operator==(const FeatureStats&) const = default;
};

struct FeatureContext {
  std::vector<double> values;
  int t = 0;
  std::string series_id;
};

nlohmann::ordered_json FeaturizerConfigToJson(const FeaturizerConfig& cfg);
FeaturizerConfig FeaturizerConfigFromJson(const nlohmann::ordered_json& j,
                                          const FeaturizerConfig& defaults = {});
nlohmann::ordered_json FeatureStatsToJson(const FeatureStats& stats);
FeatureStats FeatureStatsFromJson(const nlohmann::ordered_json& j);

int FeatureDimension(const FeaturizerConfig& cfg, FeatureDims dims);
std::vector<std::string> FeatureNames(const FeaturizerConfig& cfg,
                                      FeatureDims dims);

// Raw (unnormalized) context. Throws ConfigError if t <= tau or t > L.
std::vector<double> RawFeatures(const TimeSeries& s, int t,
                                const FeaturizerConfig& cfg);

// Context for step t; applies `stats` when cfg.normalize is set.
FeatureContext Featurize(const TimeSeries& s, int t,
                         const FeaturizerConfig& cfg,
                         const FeatureStats& stats);

// Statistics over every forecast step of `ds` (the training fold).
FeatureStats ComputeFeatureStats(const Dataset& ds,
                                 const FeaturizerConfig& cfg);

void NormalizeInPlace(const FeatureStats& stats, std::vector<double>* values);

struct SampleRef {
  int series = 0;  // index into Dataset::series
  int t = 0;
};

// Every forecast step (series order, then t ascending) as one row.
struct FeatureMatrix {
  Eigen::MatrixXd x;
  std::vector<SampleRef> refs;
};

FeatureMatrix FeaturizeDataset(const Dataset& ds, const FeaturizerConfig& cfg,
                               const FeatureStats& stats);

}  // namespace orthocast

#endif  // ORTHOCAST_FEATURIZER_H_

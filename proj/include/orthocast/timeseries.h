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

// Panel time-series data model: one TimeSeries per unit, a Dataset holding
// the panel together with its declared treatment cardinality and feature
// dimensions. Time is integer indexed 1..L throughout.

#ifndef ORTHOCAST_TIMESERIES_H_
#define ORTHOCAST_TIMESERIES_H_

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace orthocast {

// A treatment value. Categorical treatments are 1-based integral indices in
// [1, d] stored as doubles; linear treatments are arbitrary finite reals.
using Treatment = double;

enum class EncodingKind { kOneHot, kCumulative, kLinear };

std::string_view EncodingName(EncodingKind kind);
// Accepts "one-hot", "cumulative", "linear" (and the underscore spellings).
EncodingKind ParseEncoding(std::string_view name);
inline bool IsCategorical(EncodingKind kind) {
  return kind != EncodingKind::kLinear;
}

struct TimeSeries {
  std::string id;
  // Optional key used to group comparable series (weekday correction).
  std::string group;
  std::vector<double> static_features;
  // L x p_x; row t-1 holds X_t.
  Eigen::MatrixXd temporal_features;
  std::vector<double> treatments;
  std::vector<double> outcomes;
  int tau = 1;
  // Either empty or L labels in [1, 7].
  std::vector<int> weekday;

  int length() const { return static_cast<int>(treatments.size()); }
  bool has_weekday() const { return !weekday.empty(); }

  // 1-based accessors.
  double y(int t) const { return outcomes[t - 1]; }
  Treatment treatment(int t) const { return treatments[t - 1]; }
  auto x(int t) const { return temporal_features.row(t - 1); }
  int weekday_at(int t) const { return weekday[t - 1]; }
};

struct FeatureDims {
  int p_s = 0;
  int p_x = 0;
  bool operator==(const FeatureDims&) const = default;
};

struct Dataset {
  std::vector<TimeSeries> series;
  int d = 2;
  EncodingKind encoding = EncodingKind::kOneHot;
  FeatureDims dims;

  size_t size() const { return series.size(); }
  bool empty() const { return series.empty(); }
  // Total number of forecast steps (series, t) with t > tau.
  size_t NumForecastSteps() const;
  // Index of the series with the given id, or -1.
  int FindSeries(std::string_view id) const;
  // A dataset with the same metadata holding the selected series.
  Dataset Subset(const std::vector<int>& indices) const;
};

// Lists every violated TimeSeries invariant; empty iff the series is valid.
// Categorical checks (integral, within [1, d]) apply when `categorical`.
std::vector<std::string> ValidateSeries(const TimeSeries& s, int d,
                                        FeatureDims dims,
                                        bool categorical = true);

// Throws DataError naming the first invalid series or a duplicated id.
void ValidateDataset(const Dataset& ds);

// Per-category observation counts (index 0 holds treatment 1) over forecast
// steps t > tau. Rarely seen categories make one-hot effects unreliable.
std::vector<long> TreatmentFrequencies(const Dataset& ds);

}  // namespace orthocast

#endif  // ORTHOCAST_TIMESERIES_H_

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

#include "orthocast/timeseries.h"

#include <cmath>
#include <set>

#include "orthocast/errors.h"

namespace orthocast {

std::string_view EncodingName(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kOneHot:
      return "one-hot";
    case EncodingKind::kCumulative:
      return "cumulative";
    case EncodingKind::kLinear:
      return "linear";
  }
  return "unknown";
}

EncodingKind ParseEncoding(std::string_view name) {
  if (name == "one-hot" || name == "one_hot" || name == "onehot") {
    return EncodingKind::kOneHot;
  }
  if (name == "cumulative") return EncodingKind::kCumulative;
  if (name == "linear") return EncodingKind::kLinear;
  throw ConfigError("unknown encoding '" + std::string(name) +
                    "' (expected one-hot, cumulative or linear)");
}

size_t Dataset::NumForecastSteps() const {
  size_t n = 0;
  for (const auto& s : series) {
    if (s.length() > s.tau) n += static_cast<size_t>(s.length() - s.tau);
  }
  return n;
}

int Dataset::FindSeries(std::string_view id) const {
  for (size_t i = 0; i < series.size(); ++i) {
    if (series[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

Dataset Dataset::Subset(const std::vector<int>& indices) const {
  Dataset out;
  out.d = d;
  out.encoding = encoding;
  out.dims = dims;
  out.series.reserve(indices.size());
  for (int i : indices) out.series.push_back(series.at(i));
  return out;
}

std::vector<std::string> ValidateSeries(const TimeSeries& s, int d,
                                        FeatureDims dims, bool categorical) {
  std::vector<std::string> violations;
  const int L = s.length();
  if (L < 2) violations.push_back("series shorter than 2 steps");
  if (static_cast<int>(s.static_features.size()) != dims.p_s) {
    violations.push_back("static feature count mismatch");
  }
  if (s.temporal_features.rows() != L) {
    violations.push_back("temporal_features row count mismatch");
  }
  if (s.temporal_features.cols() != dims.p_x) {
    violations.push_back("temporal feature column count mismatch");
  }
  if (static_cast<int>(s.outcomes.size()) != L) {
    violations.push_back("outcomes length mismatch");
  }
  if (!s.weekday.empty() && static_cast<int>(s.weekday.size()) != L) {
    violations.push_back("weekday length mismatch");
  }
  if (s.tau < 1 || s.tau >= L) violations.push_back("tau out of range");

  bool bad_outcome = false;
  for (double y : s.outcomes) bad_outcome |= !std::isfinite(y);
  if (bad_outcome) violations.push_back("non-finite outcome");

  bool bad_treatment = false;
  bool bad_index = false;
  for (double t : s.treatments) {
    if (!std::isfinite(t)) {
      bad_treatment = true;
    } else if (categorical &&
               (t != std::round(t) || t < 1.0 || t > static_cast<double>(d))) {
      bad_index = true;
    }
  }
  if (bad_treatment) violations.push_back("non-finite treatment");
  if (bad_index) violations.push_back("treatment index out of range");

  bool bad_weekday = false;
  for (int w : s.weekday) bad_weekday |= (w < 1 || w > 7);
  if (bad_weekday) violations.push_back("weekday out of range");

  if (!s.temporal_features.allFinite()) {
    violations.push_back("non-finite temporal feature");
  }
  for (double v : s.static_features) {
    if (!std::isfinite(v)) {
      violations.push_back("non-finite static feature");
      break;
    }
  }
  return violations;
}

void ValidateDataset(const Dataset& ds) {
  if (IsCategorical(ds.encoding) && ds.d < 2) {
    throw DataError("categorical encodings require d >= 2");
  }
  std::set<std::string> ids;
  for (const auto& s : ds.series) {
    auto violations = ValidateSeries(s, ds.d, ds.dims, IsCategorical(ds.encoding));
    if (!violations.empty()) {
      std::string msg = "series '" + s.id + "' invalid: " + violations[0];
      for (size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i];
      throw DataError(msg);
    }
    if (!ids.insert(s.id).second) {
      throw DataError("duplicate series id '" + s.id + "'");
    }
  }
}

std::vector<long> TreatmentFrequencies(const Dataset& ds) {
  std::vector<long> counts(static_cast<size_t>(std::max(ds.d, 0)), 0);
  for (const auto& s : ds.series) {
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      const long k = std::lround(s.treatment(t));
      if (k >= 1 && k <= ds.d) ++counts[static_cast<size_t>(k - 1)];
    }
  }
  return counts;
}

}  // namespace orthocast

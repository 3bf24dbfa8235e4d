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

#include "orthocast/featurizer.h"

#include <algorithm>
#include <cmath>

#include "orthocast/errors.h"

namespace orthocast {

void FeaturizerConfig::Validate() const {
  if (lag_window < 1) throw ConfigError("featurizer.lag_window must be >= 1");
  if (pre_tau_lags < 0) {
    throw ConfigError("featurizer.pre_tau_lags must be >= 0");
  }
}

nlohmann::ordered_json FeaturizerConfigToJson(const FeaturizerConfig& cfg) {
  nlohmann::ordered_json j;
  j["lag_window"] = cfg.lag_window;
  j["pre_tau_lags"] = cfg.pre_tau_lags;
  j["include_aggregates"] = cfg.include_aggregates;
  j["normalize"] = cfg.normalize;
  j["include_time"] = cfg.include_time;
  j["include_weekday"] = cfg.include_weekday;
  return j;
}

FeaturizerConfig FeaturizerConfigFromJson(const nlohmann::ordered_json& j,
                                          const FeaturizerConfig& defaults) {
  if (!j.is_object()) throw ConfigError("featurizer section must be an object");
  FeaturizerConfig cfg = defaults;
  try {
    if (j.contains("lag_window")) cfg.lag_window = j.at("lag_window").get<int>();
    if (j.contains("pre_tau_lags")) {
      cfg.pre_tau_lags = j.at("pre_tau_lags").get<int>();
    }
    if (j.contains("include_aggregates")) {
      cfg.include_aggregates = j.at("include_aggregates").get<bool>();
    }
    if (j.contains("normalize")) cfg.normalize = j.at("normalize").get<bool>();
    if (j.contains("include_time")) cfg.include_time = j.at("include_time").get<bool>();
    if (j.contains("include_weekday")) {
      cfg.include_weekday = j.at("include_weekday").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("featurizer: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

nlohmann::ordered_json FeatureStatsToJson(const FeatureStats& stats) {
  return {{"mean", stats.mean}, {"scale", stats.scale}};
}

FeatureStats FeatureStatsFromJson(const nlohmann::ordered_json& j) {
  FeatureStats stats;
  stats.mean = j.at("mean").get<std::vector<double>>();
  stats.scale = j.at("scale").get<std::vector<double>>();
  if (stats.mean.size() != stats.scale.size()) {
    throw DataError("feature statistics: mean and scale lengths differ");
  }
  return stats;
}

int FeatureDimension(const FeaturizerConfig& cfg, FeatureDims dims) {
  int n = dims.p_s + dims.p_x + (cfg.lag_window - 1) * (dims.p_x + 1);
  if (cfg.pre_tau_lags > 0) n += 2 + (cfg.pre_tau_lags - 1) * 3;
  if (cfg.include_aggregates) n += 3;
  if (cfg.include_time) n += 1;
  if (cfg.include_weekday) n += 7;
  return n;
}

std::vector<std::string> FeatureNames(const FeaturizerConfig& cfg,
                                      FeatureDims dims) {
  std::vector<std::string> names;
  for (int k = 1; k <= dims.p_s; ++k) names.push_back("s_" + std::to_string(k));
  for (int j = 0; j < cfg.lag_window; ++j) {
    const std::string lag = j == 0 ? "t" : "t-" + std::to_string(j);
    for (int k = 1; k <= dims.p_x; ++k) {
      names.push_back("x_" + std::to_string(k) + "[" + lag + "]");
    }
    if (j > 0) names.push_back("mask[" + lag + "]");
  }
  for (int j = 0; j < cfg.pre_tau_lags; ++j) {
    const std::string lag = j == 0 ? "tau" : "tau-" + std::to_string(j);
    names.push_back("T[" + lag + "]");
    names.push_back("Y[" + lag + "]");
    if (j > 0) names.push_back("mask[" + lag + "]");
  }
  if (cfg.include_aggregates) {
    names.insert(names.end(), {"mean_Y_pre", "min_Y_pre", "max_Y_pre"});
  }
  if (cfg.include_time) names.push_back("days_to_end");
  if (cfg.include_weekday) {
    for (int w = 1; w <= 7; ++w) names.push_back("weekday_" + std::to_string(w));
  }
  return names;
}

std::vector<double> RawFeatures(const TimeSeries& s, int t,
                                const FeaturizerConfig& cfg) {
  if (t <= s.tau || t > s.length()) {
    throw ConfigError("featurize: step " + std::to_string(t) +
                      " is not a forecast step of series '" + s.id +
                      "' (tau=" + std::to_string(s.tau) + ")");
  }
  const int p_x = static_cast<int>(s.temporal_features.cols());
  std::vector<double> v;
  v.reserve(static_cast<size_t>(
      FeatureDimension(cfg, {static_cast<int>(s.static_features.size()), p_x})));
  v.insert(v.end(), s.static_features.begin(), s.static_features.end());

  for (int j = 0; j < cfg.lag_window; ++j) {
    const int step = t - j;
    const bool present = step >= 1;
    for (int k = 0; k < p_x; ++k) {
      v.push_back(present ? s.temporal_features(step - 1, k) : 0.0);
    }
    if (j > 0) v.push_back(present ? 1.0 : 0.0);
  }

  for (int j = 0; j < cfg.pre_tau_lags; ++j) {
    const int step = s.tau - j;
    const bool present = step >= 1;
    v.push_back(present ? s.treatment(step) : 0.0);
    v.push_back(present ? s.y(step) : 0.0);
    if (j > 0) v.push_back(present ? 1.0 : 0.0);
  }

  if (cfg.include_aggregates) {
    double sum = 0.0;
    double lo = s.y(1);
    double hi = s.y(1);
    for (int step = 1; step <= s.tau; ++step) {
      sum += s.y(step);
      lo = std::min(lo, s.y(step));
      hi = std::max(hi, s.y(step));
    }
    v.push_back(sum / s.tau);
    v.push_back(lo);
    v.push_back(hi);
  }
  if (cfg.include_time) v.push_back(static_cast<double>(s.length() - t));
  if (cfg.include_weekday) {
    for (int w = 1; w <= 7; ++w) {
      v.push_back(s.has_weekday() && s.weekday_at(t) == w ? 1.0 : 0.0);
    }
  }
  return v;
}

void NormalizeInPlace(const FeatureStats& stats, std::vector<double>* values) {
  if (stats.size() != values->size()) {
    throw ConfigError("normalization statistics have " +
                      std::to_string(stats.size()) + " columns, context has " +
                      std::to_string(values->size()));
  }
  for (size_t k = 0; k < values->size(); ++k) {
    (*values)[k] = stats.scale[k] > 0.0
                       ? ((*values)[k] - stats.mean[k]) / stats.scale[k]
                       : 0.0;
  }
}

FeatureContext Featurize(const TimeSeries& s, int t,
                         const FeaturizerConfig& cfg,
                         const FeatureStats& stats) {
  FeatureContext ctx;
  ctx.values = RawFeatures(s, t, cfg);
  ctx.t = t;
  ctx.series_id = s.id;
  if (cfg.normalize) NormalizeInPlace(stats, &ctx.values);
  return ctx;
}

FeatureStats ComputeFeatureStats(const Dataset& ds,
                                 const FeaturizerConfig& cfg) {
  const int dim = FeatureDimension(cfg, ds.dims);
  FeatureStats stats;
  stats.mean.assign(static_cast<size_t>(dim), 0.0);
  stats.scale.assign(static_cast<size_t>(dim), 0.0);
  // Two passes for numerical stability of the variance.
  long n = 0;
  for (const auto& s : ds.series) {
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      const auto v = RawFeatures(s, t, cfg);
      for (int k = 0; k < dim; ++k) stats.mean[k] += v[k];
      ++n;
    }
  }
  if (n == 0) throw DataError("no forecast steps to compute feature statistics");
  for (auto& m : stats.mean) m /= static_cast<double>(n);
  std::vector<double> sq(static_cast<size_t>(dim), 0.0);
  for (const auto& s : ds.series) {
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      const auto v = RawFeatures(s, t, cfg);
      for (int k = 0; k < dim; ++k) {
        const double c = v[k] - stats.mean[k];
        sq[k] += c * c;
      }
    }
  }
  for (int k = 0; k < dim; ++k) {
    const double sd = std::sqrt(sq[k] / static_cast<double>(n));
    // Relative guard: columns that are constant up to rounding.
    stats.scale[k] = sd > 1e-12 * std::max(1.0, std::abs(stats.mean[k])) ? sd : 0.0;
  }
  return stats;
}

FeatureMatrix FeaturizeDataset(const Dataset& ds, const FeaturizerConfig& cfg,
                               const FeatureStats& stats) {
  const int dim = FeatureDimension(cfg, ds.dims);
  FeatureMatrix out;
  const auto n = static_cast<Eigen::Index>(ds.NumForecastSteps());
  out.x.resize(n, dim);
  out.refs.reserve(static_cast<size_t>(n));
  Eigen::Index row = 0;
  for (size_t i = 0; i < ds.series.size(); ++i) {
    const auto& s = ds.series[i];
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      auto v = RawFeatures(s, t, cfg);
      if (cfg.normalize) NormalizeInPlace(stats, &v);
      for (int k = 0; k < dim; ++k) out.x(row, k) = v[k];
      out.refs.push_back({static_cast<int>(i), t});
      ++row;
    }
  }
  return out;
}

}  // namespace orthocast

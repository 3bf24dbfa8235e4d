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

// Regression discontinuity estimates of point CATEs at treatment switches.
//
// A switch at t_i means T_{t_i} != T_{t_i + 1}. Around each eligible switch
// the outcome (optionally weekday-corrected) is fitted on the constant
// treatment runs to either side with the local-linear specification
//
//   Y_t = b0 + b1 (t - t_i) + b2 1{t > t_i} + b3 1{t > t_i} (t - t_i)
//
// by kernel-weighted ridge with a free intercept; b2 is the CATE estimate.
// Estimates are then trimmed to the central [q, 1 - q] quantile range.

#ifndef ORTHOCAST_RDD_H_
#define ORTHOCAST_RDD_H_

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "orthocast/timeseries.h"

namespace orthocast {

enum class KernelKind { kRectangular, kTriangular };

std::string KernelName(KernelKind kind);
KernelKind ParseKernel(const std::string& name);

// How the weekday model is removed from the outcome: only the active
// weekday's terms (default) or, literally, the sum over all seven weekdays.
enum class WeekdayResidual { kActiveWeekday, kAllWeekdays };

struct RddConfig {
  int h = 14;
  KernelKind kernel = KernelKind::kTriangular;
  // Ridge penalty of the local fit; unset means 1e-3 x (window points).
  std::optional<double> lambda;
  int min_side = 3;
  double trim_q = 0.025;
  bool weekday_correction = false;
  WeekdayResidual weekday_residual = WeekdayResidual::kActiveWeekday;
  // "all", "group_key" or "series".
  std::string comparable_grouping = "group_key";
  int jobs = 1;

  // h = 14 with the triangular kernel (long daily series).
  static RddConfig RailDefaults();
  // h = 5 with the rectangular kernel (short hourly series).
  static RddConfig HealthDefaults();

  void Validate() const;
};

nlohmann::ordered_json RddConfigToJson(const RddConfig& cfg);
RddConfig RddConfigFromJson(const nlohmann::ordered_json& j,
                            const RddConfig& defaults = {});

struct RddEntry {
  std::string series_id;
  int t_i = 0;
  Treatment t_before = 0;
  Treatment t_after = 0;
  double cate_hat = 0.0;
  int n_left = 0;
  int n_right = 0;
  std::array<double, 4> beta{};
  bool corrected = false;
};

struct RddStats {
  long n_switches = 0;
  long n_eligible = 0;
  long n_fitted = 0;
  long n_failed = 0;
  long n_retained = 0;
  double retention() const {
    return n_switches > 0 ? static_cast<double>(n_retained) / n_switches : 0.0;
  }
};

struct CausalTestSet {
  std::vector<RddEntry> entries;
  RddConfig config;
  double trim_low = 0.0;
  double trim_high = 0.0;
  RddStats stats;
  std::vector<std::string> diagnostics;
};

// All t with T_t != T_{t+1} (1-based); empty for constant or length < 2.
std::vector<int> FindSwitchingTimes(std::span<const double> treatments);

// Constant-treatment runs around switch t_i, excluding t_i itself and any
// other switch observation (the last step of a run that is followed by a
// different treatment).
struct RddWindow {
  std::vector<int> left;
  std::vector<int> right;

  std::vector<int> Indices() const;
};

RddWindow BuildWindow(std::span<const double> treatments, int t_i);

// Switches whose window has at least min_side steps on each side.
std::vector<int> EligibleSwitches(std::span<const double> treatments,
                                  int min_side);

std::vector<double> KernelWeights(std::span<const int> indices, int center,
                                  int h, KernelKind kernel);

struct WeekdayModel {
  std::array<double, 7> alpha1{};  // per-weekday level
  std::array<double, 7> alpha2{};  // per-weekday slope in t
  std::array<bool, 7> present{};
  std::vector<std::string> diagnostics;
};

// Per-weekday least squares of Y on (1, t) over every step of the group.
// Absent weekdays get zero coefficients and a diagnostic. Throws DataError
// for an empty group or series without weekday labels.
WeekdayModel FitWeekdayModel(const std::vector<const TimeSeries*>& group);

std::vector<double> ApplyWeekdayCorrection(
    const TimeSeries& s, const WeekdayModel& model,
    WeekdayResidual mode = WeekdayResidual::kActiveWeekday);

// Weighted ridge fit of the local-linear specification over the window.
// `y` holds the outcome path (y[t - 1] = Y_t), `weights` aligns with
// window.Indices(). The intercept is unpenalized. Throws NumericalError
// when a side has fewer than two positively weighted points or the system
// is singular.
RddEntry EstimateSwitchCate(std::span<const double> y, const RddWindow& window,
                            int t_i, std::span<const double> weights,
                            double lambda);

// Default penalty 1e-3 x n for a window of n points.
double DefaultRddLambda(int window_points);

using GroupingFn = std::function<std::string(const TimeSeries&)>;
GroupingFn GroupingByName(const std::string& name);

CausalTestSet BuildCausalTestSet(const Dataset& ds, const RddConfig& cfg);
CausalTestSet BuildCausalTestSet(const Dataset& ds, const RddConfig& cfg,
                                 const GroupingFn& grouping);

// Rank-based bounds: low is the (floor(q n) + 1)-th smallest value, high the
// (n - floor(q n))-th; entries with low <= cate_hat <= high are kept, so tied
// values at a bound are all retained.
std::pair<double, double> TrimBounds(std::vector<double> values, double q);
// Keeps entries within the set's stored bounds.
CausalTestSet ApplyTrim(const CausalTestSet& set);

struct RddScore {
  double rmse = 0.0;
  double mae = 0.0;
  long n_scored = 0;
  long n_skipped = 0;
};

using CatePredictor = std::function<double(
    const std::string& series_id, int t_i, Treatment from, Treatment to)>;

// Entries on which the predictor throws or returns a non-finite value are
// skipped and counted.
RddScore ScorePredictions(const CausalTestSet& set,
                          const CatePredictor& predictor);

void WriteTestSetCsv(const CausalTestSet& set, std::ostream& out);
std::vector<RddEntry> ReadTestSetCsv(std::istream& in);
nlohmann::ordered_json TestSetMetadata(const CausalTestSet& set);
// "<dir>/<stem>.meta.json" for "<dir>/<stem>.csv".
std::string TestSetMetaPath(const std::string& csv_path);
void SaveTestSet(const CausalTestSet& set, const std::string& csv_path);
// Reads the CSV and, when present, the sidecar bounds and configuration.
CausalTestSet LoadTestSet(const std::string& csv_path);

}  // namespace orthocast

#endif  // ORTHOCAST_RDD_H_

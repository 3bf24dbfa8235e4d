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

#include "orthocast/rdd.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "orthocast/dataset_io.h"
#include "orthocast/errors.h"
#include "orthocast/learner.h"
#include "orthocast/parallel.h"

namespace orthocast {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kCsvHeader[] =
    "series_id,t_i,T_before,T_after,cate_hat,n_left,n_right,beta0,beta1,beta2,"
    "beta3,corrected";

bool IsSwitch(std::span<const double> T, int t) {
  return t >= 1 && t < static_cast<int>(T.size()) && T[t - 1] != T[t];
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseNumber(const std::string& s, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line) + ": malformed number '" + s +
                    "'");
  }
}

}  // namespace

std::string KernelName(KernelKind kind) {
  return kind == KernelKind::kRectangular ? "rectangular" : "triangular";
}

KernelKind ParseKernel(const std::string& name) {
  if (name == "rectangular") return KernelKind::kRectangular;
  if (name == "triangular") return KernelKind::kTriangular;
  throw ConfigError("rdd.kernel: unknown value '" + name + "'");
}

RddConfig RddConfig::RailDefaults() {
  RddConfig cfg;
  cfg.h = 14;
  cfg.kernel = KernelKind::kTriangular;
  return cfg;
}

RddConfig RddConfig::HealthDefaults() {
  RddConfig cfg;
  cfg.h = 5;
  cfg.kernel = KernelKind::kRectangular;
  return cfg;
}

void RddConfig::Validate() const {
  if (h < 1) throw ConfigError("rdd.h must be >= 1");
  if (lambda && !(*lambda >= 0.0)) throw ConfigError("rdd.lambda must be >= 0");
  if (min_side < 1) throw ConfigError("rdd.min_side must be >= 1");
  if (!(trim_q >= 0.0 && trim_q < 0.5)) {
    throw ConfigError("rdd.trim_q must lie in [0, 0.5)");
  }
  (void)GroupingByName(comparable_grouping);
}

Json RddConfigToJson(const RddConfig& cfg) {
  Json j;
  j["h"] = cfg.h;
  j["kernel"] = KernelName(cfg.kernel);
  j["lambda"] = cfg.lambda ? Json(*cfg.lambda) : Json(nullptr);
  j["min_side"] = cfg.min_side;
  j["trim_q"] = cfg.trim_q;
  j["weekday_correction"] = cfg.weekday_correction;
  j["weekday_residual"] = cfg.weekday_residual == WeekdayResidual::kActiveWeekday
                              ? "active"
                              : "all";
  j["comparable_grouping"] = cfg.comparable_grouping;
  return j;
}

RddConfig RddConfigFromJson(const Json& j, const RddConfig& defaults) {
  if (!j.is_object()) throw ConfigError("rdd section must be an object");
  RddConfig cfg = defaults;
  try {
    if (j.contains("preset")) {
      const std::string preset = j.at("preset").get<std::string>();
      if (preset == "rail") {
        cfg = RddConfig::RailDefaults();
      } else if (preset == "health") {
        cfg = RddConfig::HealthDefaults();
      } else {
        throw ConfigError("rdd.preset: unknown value '" + preset + "'");
      }
    }
    if (j.contains("h")) cfg.h = j.at("h").get<int>();
    if (j.contains("kernel")) cfg.kernel = ParseKernel(j.at("kernel").get<std::string>());
    if (j.contains("lambda")) {
      if (j.at("lambda").is_null()) {
        cfg.lambda.reset();
      } else {
        cfg.lambda = j.at("lambda").get<double>();
      }
    }
    if (j.contains("min_side")) cfg.min_side = j.at("min_side").get<int>();
    if (j.contains("trim_q")) cfg.trim_q = j.at("trim_q").get<double>();
    if (j.contains("weekday_correction")) {
      cfg.weekday_correction = j.at("weekday_correction").get<bool>();
    }
    if (j.contains("weekday_residual")) {
      const std::string mode = j.at("weekday_residual").get<std::string>();
      if (mode == "active") {
        cfg.weekday_residual = WeekdayResidual::kActiveWeekday;
      } else if (mode == "all") {
        cfg.weekday_residual = WeekdayResidual::kAllWeekdays;
      } else {
        throw ConfigError("rdd.weekday_residual: unknown value '" + mode + "'");
      }
    }
    if (j.contains("comparable_grouping")) {
      cfg.comparable_grouping = j.at("comparable_grouping").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("rdd: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

std::vector<int> FindSwitchingTimes(std::span<const double> treatments) {
  std::vector<int> out;
  const int L = static_cast<int>(treatments.size());
  for (int t = 1; t < L; ++t) {
    if (treatments[t - 1] != treatments[t]) out.push_back(t);
  }
  return out;
}

std::vector<int> RddWindow::Indices() const {
  std::vector<int> all(left);
  all.insert(all.end(), right.begin(), right.end());
  return all;
}

RddWindow BuildWindow(std::span<const double> T, int t_i) {
  RddWindow w;
  const int L = static_cast<int>(T.size());
  if (t_i < 1 || t_i >= L) return w;
  // The left run shares T_{t_i}; it is empty when t_i - 1 is itself a switch.
  const double before = T[t_i - 1];
  int start = t_i;
  while (start > 1 && T[start - 2] == before) --start;
  for (int t = start; t <= t_i - 1; ++t) w.left.push_back(t);
  const double v = T[t_i];
  int stop = t_i + 1;
  while (stop < L && T[stop] == v) ++stop;
  for (int t = t_i + 1; t <= stop; ++t) {
    if (!IsSwitch(T, t)) w.right.push_back(t);
  }
  return w;
}

std::vector<int> EligibleSwitches(std::span<const double> treatments,
                                  int min_side) {
  std::vector<int> out;
  for (int t : FindSwitchingTimes(treatments)) {
    const RddWindow w = BuildWindow(treatments, t);
    if (static_cast<int>(w.left.size()) >= min_side &&
        static_cast<int>(w.right.size()) >= min_side) {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<double> KernelWeights(std::span<const int> indices, int center,
                                  int h, KernelKind kernel) {
  if (h < 1) throw ConfigError("kernel bandwidth h must be >= 1");
  std::vector<double> w;
  w.reserve(indices.size());
  for (int t : indices) {
    const double dist = std::abs(t - center);
    if (kernel == KernelKind::kRectangular) {
      w.push_back(dist <= h ? 1.0 : 0.0);
    } else {
      w.push_back(std::max(0.0, 1.0 - dist / h));
    }
  }
  return w;
}

WeekdayModel FitWeekdayModel(const std::vector<const TimeSeries*>& group) {
  if (group.empty()) throw DataError("fit_weekday_model: empty group");
  std::array<double, 7> n{}, st{}, sy{};
  for (const TimeSeries* s : group) {
    if (!s->has_weekday()) {
      throw DataError("fit_weekday_model: series '" + s->id +
                      "' has no weekday labels");
    }
    for (int t = 1; t <= s->length(); ++t) {
      const int j = s->weekday_at(t) - 1;
      n[j] += 1;
      st[j] += t;
      sy[j] += s->y(t);
    }
  }
  WeekdayModel model;
  std::array<double, 7> stt{}, sty{};
  for (int j = 0; j < 7; ++j) {
    if (n[j] > 0) {
      st[j] /= n[j];
      sy[j] /= n[j];
    }
  }
  for (const TimeSeries* s : group) {
    for (int t = 1; t <= s->length(); ++t) {
      const int j = s->weekday_at(t) - 1;
      const double dt = t - st[j];
      stt[j] += dt * dt;
      sty[j] += dt * (s->y(t) - sy[j]);
    }
  }
  for (int j = 0; j < 7; ++j) {
    if (n[j] == 0) {
      model.diagnostics.push_back("weekday " + std::to_string(j + 1) +
                                  " absent from group; coefficients set to 0");
      continue;
    }
    model.present[j] = true;
    if (stt[j] > 0.0) {
      model.alpha2[j] = sty[j] / stt[j];
    } else {
      model.diagnostics.push_back("weekday " + std::to_string(j + 1) +
                                  " observed at a single time; slope set to 0");
    }
    model.alpha1[j] = sy[j] - model.alpha2[j] * st[j];
  }
  return model;
}

std::vector<double> ApplyWeekdayCorrection(const TimeSeries& s,
                                           const WeekdayModel& model,
                                           WeekdayResidual mode) {
  std::vector<double> out(s.outcomes);
  for (int t = 1; t <= s.length(); ++t) {
    if (mode == WeekdayResidual::kActiveWeekday) {
      if (!s.has_weekday()) continue;
      const int j = s.weekday_at(t) - 1;
      out[t - 1] -= model.alpha1[j] + t * model.alpha2[j];
    } else {
      for (int j = 0; j < 7; ++j) out[t - 1] -= model.alpha1[j] + t * model.alpha2[j];
    }
  }
  return out;
}

double DefaultRddLambda(int window_points) { return 1e-3 * window_points; }

RddEntry EstimateSwitchCate(std::span<const double> y, const RddWindow& window,
                            int t_i, std::span<const double> weights,
                            double lambda) {
  const std::vector<int> idx = window.Indices();
  if (weights.size() != idx.size()) {
    throw ConfigError("estimate_switch_cate: weights do not match the window");
  }
  int pos_left = 0, pos_right = 0;
  for (size_t k = 0; k < idx.size(); ++k) {
    if (weights[k] > 0.0) (idx[k] > t_i ? pos_right : pos_left) += 1;
  }
  if (pos_left < 2 || pos_right < 2) {
    throw NumericalError("estimate_switch_cate: insufficient side points at t=" +
                         std::to_string(t_i) + " (left " +
                         std::to_string(pos_left) + ", right " +
                         std::to_string(pos_right) + ")");
  }
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::MatrixXd yy(n, 1);
  Eigen::VectorXd w(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const int t = idx[k];
    if (t < 1 || t > static_cast<int>(y.size())) {
      throw ConfigError("estimate_switch_cate: window index out of range");
    }
    const double dt = t - t_i;
    const double after = t > t_i ? 1.0 : 0.0;
    x(k, 0) = dt;
    x(k, 1) = after;
    x(k, 2) = after * dt;
    yy(k, 0) = y[t - 1];
    w[k] = weights[k];
  }
  const FittedModel fit = FitRidge(x, yy, w, lambda, false);
  RddEntry e;
  e.t_i = t_i;
  e.beta = {fit.intercept()[0], fit.coefficients()(0, 0),
            fit.coefficients()(0, 1), fit.coefficients()(0, 2)};
  e.cate_hat = e.beta[2];
  e.n_left = static_cast<int>(window.left.size());
  e.n_right = static_cast<int>(window.right.size());
  return e;
}

GroupingFn GroupingByName(const std::string& name) {
  if (name == "all") return [](const TimeSeries&) { return std::string(); };
  if (name == "group_key") return [](const TimeSeries& s) { return s.group; };
  if (name == "series") return [](const TimeSeries& s) { return s.id; };
  throw ConfigError("rdd.comparable_grouping: unknown rule '" + name +
                    "' (expected all, group_key or series)");
}

std::pair<double, double> TrimBounds(std::vector<double> values, double q) {
  if (values.empty()) return {0.0, 0.0};
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  const auto k = static_cast<size_t>(std::floor(q * static_cast<double>(n)));
  const size_t lo = std::min(k, n - 1);
  const size_t hi = n - 1 - std::min(k, n - 1);
  return {values[std::min(lo, hi)], values[std::max(lo, hi)]};
}

CausalTestSet ApplyTrim(const CausalTestSet& set) {
  CausalTestSet out = set;
  out.entries.clear();
  for (const RddEntry& e : set.entries) {
    if (e.cate_hat >= set.trim_low && e.cate_hat <= set.trim_high) {
      out.entries.push_back(e);
    }
  }
  out.stats.n_retained = static_cast<long>(out.entries.size());
  return out;
}

CausalTestSet BuildCausalTestSet(const Dataset& ds, const RddConfig& cfg) {
  return BuildCausalTestSet(ds, cfg, GroupingByName(cfg.comparable_grouping));
}

CausalTestSet BuildCausalTestSet(const Dataset& ds, const RddConfig& cfg,
                                 const GroupingFn& grouping) {
  cfg.Validate();
  CausalTestSet out;
  out.config = cfg;

  std::map<std::string, WeekdayModel> weekday_models;
  if (cfg.weekday_correction) {
    std::map<std::string, std::vector<const TimeSeries*>> groups;
    for (const TimeSeries& s : ds.series) groups[grouping(s)].push_back(&s);
    for (const auto& [key, members] : groups) {
      WeekdayModel model = FitWeekdayModel(members);
      for (const auto& msg : model.diagnostics) {
        out.diagnostics.push_back("group '" + key + "': " + msg);
      }
      weekday_models.emplace(key, std::move(model));
    }
  }

  struct SeriesResult {
    std::vector<RddEntry> entries;
    long n_switches = 0;
    long n_eligible = 0;
    long n_failed = 0;
    std::vector<std::string> diagnostics;
  };
  std::vector<SeriesResult> results(ds.size());
  ParallelFor(static_cast<int>(ds.size()), cfg.jobs, [&](int i) {
    const TimeSeries& s = ds.series[i];
    SeriesResult& r = results[i];
    const std::span<const double> T(s.treatments);
    r.n_switches = static_cast<long>(FindSwitchingTimes(T).size());
    const std::vector<int> eligible = EligibleSwitches(T, cfg.min_side);
    r.n_eligible = static_cast<long>(eligible.size());
    if (eligible.empty()) return;
    std::vector<double> y = s.outcomes;
    if (cfg.weekday_correction) {
      y = ApplyWeekdayCorrection(s, weekday_models.at(grouping(s)),
                                 cfg.weekday_residual);
    }
    for (int t_i : eligible) {
      const RddWindow window = BuildWindow(T, t_i);
      const std::vector<int> idx = window.Indices();
      const std::vector<double> w = KernelWeights(idx, t_i, cfg.h, cfg.kernel);
      int positive = 0;
      for (double v : w) positive += v > 0.0;
      const double lambda = cfg.lambda ? *cfg.lambda : DefaultRddLambda(positive);
      try {
        RddEntry e = EstimateSwitchCate(y, window, t_i, w, lambda);
        e.series_id = s.id;
        e.t_before = s.treatment(t_i);
        e.t_after = s.treatment(t_i + 1);
        e.corrected = cfg.weekday_correction;
        r.entries.push_back(std::move(e));
      } catch (const std::exception& ex) {
        ++r.n_failed;
        r.diagnostics.push_back("series '" + s.id + "': " + ex.what());
      }
    }
  });

  std::vector<RddEntry> all;
  for (SeriesResult& r : results) {
    out.stats.n_switches += r.n_switches;
    out.stats.n_eligible += r.n_eligible;
    out.stats.n_failed += r.n_failed;
    for (auto& msg : r.diagnostics) out.diagnostics.push_back(std::move(msg));
    for (auto& e : r.entries) all.push_back(std::move(e));
  }
  out.stats.n_fitted = static_cast<long>(all.size());
  if (all.empty()) {
    out.diagnostics.push_back("no eligible switches; causal test set is empty");
    return out;
  }
  std::vector<double> values;
  values.reserve(all.size());
  for (const auto& e : all) values.push_back(e.cate_hat);
  std::tie(out.trim_low, out.trim_high) = TrimBounds(values, cfg.trim_q);
  out.entries = std::move(all);
  return ApplyTrim(out);
}

RddScore ScorePredictions(const CausalTestSet& set,
                          const CatePredictor& predictor) {
  RddScore score;
  std::vector<double> se, ae;
  for (const RddEntry& e : set.entries) {
    double pred = 0.0;
    try {
      pred = predictor(e.series_id, e.t_i, e.t_before, e.t_after);
    } catch (const std::exception&) {
      ++score.n_skipped;
      continue;
    }
    if (!std::isfinite(pred)) {
      ++score.n_skipped;
      continue;
    }
    const double err = pred - e.cate_hat;
    se.push_back(err * err);
    ae.push_back(std::abs(err));
    ++score.n_scored;
  }
  if (score.n_scored > 0) {
    score.rmse = std::sqrt(OrderFreeSum(std::move(se)) / score.n_scored);
    score.mae = OrderFreeSum(std::move(ae)) / score.n_scored;
  }
  return score;
}

void WriteTestSetCsv(const CausalTestSet& set, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const RddEntry& e : set.entries) {
    out << e.series_id << ',' << e.t_i << ',' << FormatDouble(e.t_before) << ','
        << FormatDouble(e.t_after) << ',' << FormatDouble(e.cate_hat) << ','
        << e.n_left << ',' << e.n_right;
    for (double b : e.beta) out << ',' << FormatDouble(b);
    out << ',' << (e.corrected ? 1 : 0) << '\n';
  }
}

std::vector<RddEntry> ReadTestSetCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("test set: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw DataError("test set: line 1: unexpected header");
  std::vector<RddEntry> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != 12) {
      throw DataError("test set: line " + std::to_string(lineno) +
                      ": expected 12 columns");
    }
    RddEntry e;
    e.series_id = cells[0];
    e.t_i = static_cast<int>(ParseNumber(cells[1], lineno));
    e.t_before = ParseNumber(cells[2], lineno);
    e.t_after = ParseNumber(cells[3], lineno);
    e.cate_hat = ParseNumber(cells[4], lineno);
    e.n_left = static_cast<int>(ParseNumber(cells[5], lineno));
    e.n_right = static_cast<int>(ParseNumber(cells[6], lineno));
    for (int k = 0; k < 4; ++k) e.beta[k] = ParseNumber(cells[7 + k], lineno);
    e.corrected = ParseNumber(cells[11], lineno) != 0.0;
    out.push_back(std::move(e));
  }
  return out;
}

Json TestSetMetadata(const CausalTestSet& set) {
  Json j;
  j["trim_low"] = set.trim_low;
  j["trim_high"] = set.trim_high;
  j["config"] = RddConfigToJson(set.config);
  j["n_switches"] = set.stats.n_switches;
  j["n_eligible"] = set.stats.n_eligible;
  j["n_fitted"] = set.stats.n_fitted;
  j["n_failed"] = set.stats.n_failed;
  j["n_retained"] = set.stats.n_retained;
  j["retention"] = set.stats.retention();
  return j;
}

std::string TestSetMetaPath(const std::string& csv_path) {
  const std::string ext = ".csv";
  if (csv_path.size() >= ext.size() &&
      csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0) {
    return csv_path.substr(0, csv_path.size() - ext.size()) + ".meta.json";
  }
  return csv_path + ".meta.json";
}

void SaveTestSet(const CausalTestSet& set, const std::string& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + csv_path + "'");
  WriteTestSetCsv(set, out);
  std::ofstream meta(TestSetMetaPath(csv_path), std::ios::binary);
  if (!meta) throw DataError("cannot write '" + TestSetMetaPath(csv_path) + "'");
  meta << TestSetMetadata(set).dump(2) << '\n';
}

CausalTestSet LoadTestSet(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DataError("cannot open test set '" + csv_path + "'");
  CausalTestSet set;
  set.entries = ReadTestSetCsv(in);
  set.stats.n_retained = static_cast<long>(set.entries.size());
  std::ifstream meta(TestSetMetaPath(csv_path), std::ios::binary);
  if (meta) {
    try {
      const Json j = Json::parse(meta);
      set.trim_low = j.at("trim_low").get<double>();
      set.trim_high = j.at("trim_high").get<double>();
      set.config = RddConfigFromJson(j.at("config"));
      set.stats.n_switches = j.value("n_switches", 0L);
      set.stats.n_eligible = j.value("n_eligible", 0L);
      set.stats.n_fitted = j.value("n_fitted", 0L);
      set.stats.n_failed = j.value("n_failed", 0L);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("test set metadata: ") + e.what());
    }
  }
  return set;
}

}  // namespace orthocast

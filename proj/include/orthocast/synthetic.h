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

// Confounded synthetic panels with known structural functions.
//
// For every series: S ~ N(0, I), X follows a stationary AR(1), and at each
// step t the context W_t determines
//
//   f0(W_t)    = 1 + a_s.S + a_x.X_t + a_lag.X_{t-1}
//                + nonlinearity * tanh(2 u.[S, X_t]) + weekday terms
//   demand z_t = (f0(W_t) - 1) / f0_scale
//   P(T_t = i | W_t) = softmax_i(2 * confounding_strength * z_t * c_i),
//                c_i = (i - (d+1)/2) / ((d-1)/2)
//   Y_t        = enc(T_t) . theta0(W_t) + f0(W_t) + N(0, noise_y^2)
//
// so high demand raises both the outcome and the treatment index. theta0 is
// derived from per-level effects mu_i(W) (mu_1 = 0) so one-hot and cumulative
// data sets generated from the same seed are identical; the linear encoding
// uses the slope beta(W) with treatment values equal to the index.

#ifndef ORTHOCAST_SYNTHETIC_H_
#define ORTHOCAST_SYNTHETIC_H_

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "json.hpp"
#include "orthocast/timeseries.h"

namespace orthocast {

enum class ThetaForm { kConstantVector, kSmoothOfW, kMonotoneDecreasing };

std::string ThetaFormName(ThetaForm form);
ThetaForm ParseThetaForm(const std::string& name);

struct SynthConfig {
  int n_series = 2000;
  int L = 24;
  int tau = 8;
  int d = 5;
  int p_s = 3;
  int p_x = 2;
  EncodingKind encoding = EncodingKind::kOneHot;
  ThetaForm theta_form = ThetaForm::kMonotoneDecreasing;
  double confounding_strength = 1.0;
  double noise_y = 0.3;
  double ar_coeff = 0.7;
  double effect_scale = 0.3;
  double nonlinearity = 1.25;
  // Additive per-weekday level (and level * t / L trend) amplitudes; 0 = off.
  double weekday_effect = 0.0;
  double weekday_trend = 0.0;
  // Piecewise-constant treatment paths: runs of length min_side + 1 + k with
  // k ~ Geometric(switch_prob); each new run draws a treatment different from
  // the previous one from the (renormalized) propensity.
  bool rdd_step_mode = false;
  int min_side = 3;
  double switch_prob = 0.3;
  // Replace the propensity by a point mass on its mode.
  bool deterministic_treatment = false;
  int n_groups = 1;
  uint64_t structural_seed = 7;
  uint64_t seed = 1;

  void Validate() const;
};

nlohmann::ordered_json SynthConfigToJson(const SynthConfig& cfg);
SynthConfig SynthConfigFromJson(const nlohmann::ordered_json& j,
                                const SynthConfig& defaults = {});

// Coefficients drawn from the structural seed. Shared by every sample drawn
// from the same structural configuration.
struct StructuralParams {
  Eigen::VectorXd a_s, a_x, a_lag;
  // Unit-norm projections over [S, X_t] for the f0 nonlinearity and theta0.
  Eigen::VectorXd u, v;
  double f0_scale = 1.0;
  // Per-level constants for ThetaForm::kConstantVector (mu_1 = 0).
  Eigen::VectorXd mu_const;
  Eigen::VectorXd weekday_level;  // 7 values, mean zero
};

StructuralParams DrawStructuralParams(const SynthConfig& cfg);

// The structural functions evaluated at one context. `x_prev` is X_{t-1}
// (zeros at t = 1), `weekday` is 0 when absent.
struct ContextView {
  Eigen::VectorXd s;
  Eigen::VectorXd x;
  Eigen::VectorXd x_prev;
  int weekday = 0;
  int t = 1;
  int L = 1;
};

class Oracle {
 public:
  Oracle(SynthConfig cfg, StructuralParams params,
         std::shared_ptr<const Dataset> data);

  const SynthConfig& config() const { return cfg_; }
  const StructuralParams& params() const { return params_; }
  const Dataset& data() const { return *data_; }
  int d() const { return cfg_.d; }
  EncodingKind encoding() const { return cfg_.encoding; }

  ContextView Context(int series, int t) const;

  // Per-level effects mu_i(W), i = 1..d (mu_1 = 0 except linear).
  Eigen::VectorXd LevelEffects(const ContextView& w) const;
  // theta0(W) in the configured encoding.
  Eigen::VectorXd Theta0(const ContextView& w) const;
  double F0(const ContextView& w) const;
  // P(T = i | W) for i = 1..d.
  Eigen::VectorXd Propensity(const ContextView& w) const;
  // E[enc(T) | W].
  Eigen::VectorXd E0(const ContextView& w) const;
  // E[Y | W] = f0 + e0 . theta0.
  double M0(const ContextView& w) const;

  Eigen::VectorXd Theta0(int series, int t) const { return Theta0(Context(series, t)); }
  double F0(int series, int t) const { return F0(Context(series, t)); }

  // Throws ConfigError on out-of-range series, step, or treatment.
  double Cate(int series, int t, Treatment from, Treatment to) const;
  double Cate(const std::string& series_id, int t, Treatment from,
              Treatment to) const;
  // (m0, e0) at (series, t). In rdd_step_mode, e0 is the propensity used when
  // a new run starts, not E[enc(T_t) | W_t].
  std::pair<double, Eigen::VectorXd> Nuisance(int series, int t) const;

  // A fresh draw of (T, Y) at the fixed context of (series, t).
  std::pair<Treatment, double> Draw(int series, int t,
                                    std::mt19937_64& rng) const;
  std::pair<Treatment, double> Draw(const ContextView& w,
                                    std::mt19937_64& rng) const;

 private:
  void CheckIndex(int series, int t) const;

  SynthConfig cfg_;
  StructuralParams params_;
  std::shared_ptr<const Dataset> data_;
};

struct SyntheticData {
  Dataset dataset;
  Oracle oracle;
};

SyntheticData Generate(const SynthConfig& cfg);

// Single series with two treatment levels switching after step t_i (T = 1
// for t <= t_i, 2 after) and outcome slope * t + jump * 1{t > t_i} + noise.
TimeSeries InjectStepSeries(double jump, int t_i, int L, double slope,
                            double sigma, uint64_t seed);

}  // namespace orthocast

#endif  // ORTHOCAST_SYNTHETIC_H_

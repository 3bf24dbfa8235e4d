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

// Orthogonal learning with sample splitting:
//
//   1. split the panel into series-level folds S1, S2;
//   2. fit the nuisances m(W) ~ E[Y | W] and e(W) ~ E[enc(T) | W] on S1;
//   3. residualize S2: y~ = Y - m(W), t~ = enc(T) - e(W);
//   4. fit theta on S2 by minimizing the R-loss mean (y~ - t~ . theta(W))^2.
//
// The forecaster combines the three models as
//   Y^(W, T) = m(W) + (enc(T) - e(W)) . theta(W)
// and its CATEs are read from theta alone.

#ifndef ORTHOCAST_ORTHOGONAL_H_
#define ORTHOCAST_ORTHOGONAL_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "orthocast/featurizer.h"
#include "orthocast/learner.h"
#include "orthocast/timeseries.h"

namespace orthocast {

// Series-level split after a seeded shuffle; |S1| = floor(N / 2). Throws
// ConfigError for fewer than two series.
std::pair<Dataset, Dataset> SplitSample(const Dataset& ds, uint64_t seed);

// Loss expected of the treatment model under `kind`: softmax cross entropy
// (one-hot), per-dimension binary cross entropy (cumulative), mse (linear).
LossKind TreatmentLoss(EncodingKind kind);

// `base` with output_dim and loss set for the outcome model (mse, 1 output),
// the treatment model, and the effect model (rloss).
LearnerSpec OutcomeSpec(LearnerSpec base);
LearnerSpec TreatmentSpec(LearnerSpec base, EncodingKind kind, int d);
LearnerSpec EffectSpec(LearnerSpec base, EncodingKind kind, int d);

struct NuisancePair {
  FeaturizerConfig featurizer;
  FeatureStats stats;  // computed on the nuisance fold
  FittedModel m;
  FittedModel e;
};

// Fits m with mse on (W_t, Y_t) and e on (W_t, enc(T_t)) over every forecast
// step of S1. Ridge treatment models regress the encoded treatment directly
// (mse); network treatment models must use TreatmentLoss(encoding).
NuisancePair FitNuisance(const Dataset& s1, EncodingKind encoding,
                         const LearnerSpec& m_spec, const LearnerSpec& e_spec,
                         const FeaturizerConfig& featurizer);

struct ResidualizedSample {
  FeatureContext features;
  double y_tilde = 0.0;
  Eigen::VectorXd t_tilde;
};

// Residualized steps stored column-wise; row i describes refs[i].
struct ResidualizedSamples {
  Eigen::MatrixXd x;  // normalized features
  Eigen::VectorXd y_tilde;
  Eigen::MatrixXd t_tilde;
  std::vector<SampleRef> refs;
  std::vector<std::string> series_ids;

  Eigen::Index size() const { return y_tilde.size(); }
  ResidualizedSample Sample(Eigen::Index i) const;
};

// One sample per (series, t > tau) of S2. Throws ConfigError when the
// nuisance models were fitted on a different feature dimension or encoding.
ResidualizedSamples Residualize(const Dataset& s2, const NuisancePair& nuisance,
                                EncodingKind encoding);

// R-loss minimizer over the spec's model class. Ridge effect models are
// solved in closed form; network effect models by momentum descent on the
// R-loss, after which the output layer is rescaled by the best scalar if the
// result would otherwise lose to theta = 0. Throws NumericalError("no
// identification") when every t~ is zero.
FittedModel FitTheta(const ResidualizedSamples& samples,
                     const LearnerSpec& theta_spec);

// Mean of (y~ - t~ . theta(W))^2.
double EmpiricalRLoss(const FittedModel& theta,
                      const ResidualizedSamples& samples);

struct PipelineConfig {
  FeaturizerConfig featurizer;
  LearnerSpec m_spec;
  LearnerSpec e_spec;
  LearnerSpec theta_spec;
  // Also fit with the folds swapped and average the two forecasters.
  bool cross_fit = false;
  uint64_t split_seed = 0;
};

struct ForecasterFold {
  NuisancePair nuisance;
  FittedModel theta;
  // Series used for the nuisances and for theta, respectively.
  std::vector<std::string> nuisance_ids;
  std::vector<std::string> theta_ids;
  double rloss = 0.0;       // empirical R-loss of theta on its fold
  double rloss_zero = 0.0;  // same for theta = 0
};

// Model outputs averaged over folds for one context.
struct ForecastComponents {
  double m = 0.0;
  Eigen::VectorXd e;
  Eigen::VectorXd theta;
};

class CausalForecaster {
 public:
  CausalForecaster() = default;
  CausalForecaster(EncodingKind encoding, int d, FeatureDims dims,
                   FeaturizerConfig featurizer, std::vector<ForecasterFold> folds);

  EncodingKind encoding() const { return encoding_; }
  int d() const { return d_; }
  FeatureDims dims() const { return dims_; }
  const FeaturizerConfig& featurizer() const { return featurizer_; }
  const std::vector<ForecasterFold>& folds() const { return folds_; }

  // `raw` is the unnormalized context (RawFeatures); each fold applies its
  // own statistics.
  double PredictOutcome(std::span<const double> raw, Treatment treatment) const;
  double PredictCate(std::span<const double> raw, Treatment from,
                     Treatment to) const;
  double PredictOutcome(const TimeSeries& s, int t, Treatment treatment) const;
  double PredictCate(const TimeSeries& s, int t, Treatment from,
                     Treatment to) const;

  // Per-fold components for a block of raw contexts (rows). Entry k holds
  // m (n), e (n x enc) and theta (n x enc) of fold k.
  struct BatchComponents {
    Eigen::VectorXd m;
    Eigen::MatrixXd e;
    Eigen::MatrixXd theta;
  };
  std::vector<BatchComponents> PredictBatch(const Eigen::MatrixXd& raw) const;

  // theta(W) averaged over folds, for every row of `raw`.
  Eigen::MatrixXd PredictTheta(const Eigen::MatrixXd& raw) const;

  ForecastComponents Components(std::span<const double> raw) const;

 private:
  EncodingKind encoding_ = EncodingKind::kOneHot;
  int d_ = 2;
  FeatureDims dims_;
  FeaturizerConfig featurizer_;
  std::vector<ForecasterFold> folds_;
};

// Algorithm: split, fit nuisances on S1, residualize S2, fit theta on S2.
CausalForecaster TrainForecaster(const Dataset& ds, const PipelineConfig& cfg);

nlohmann::ordered_json ForecasterToJson(const CausalForecaster& f);
CausalForecaster ForecasterFromJson(const nlohmann::ordered_json& j);

}  // namespace orthocast

#endif  // ORTHOCAST_ORTHOGONAL_H_

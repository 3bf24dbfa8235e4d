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

// Metrics, the non-causal direct baseline, and numerical checks of the
// properties the orthogonal pipeline relies on.

#ifndef ORTHOCAST_EVAL_H_
#define ORTHOCAST_EVAL_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "orthocast/featurizer.h"
#include "orthocast/learner.h"
#include "orthocast/orthogonal.h"
#include "orthocast/synthetic.h"
#include "orthocast/timeseries.h"

namespace orthocast {

struct ForecastMetrics {
  double rmse = 0.0;
  double mae = 0.0;
};

// Throws ConfigError on empty or mismatched inputs.
ForecastMetrics ComputeForecastMetrics(std::span<const double> predictions,
                                       std::span<const double> truth);

// A single outcome regressor on (W_t, enc(T_t)) trained with mse. With
// `interactions` the features also include enc(T_t) (x) W_t so a linear
// model can express effects that vary with W.
struct DirectBaseline {
  FeaturizerConfig featurizer;
  FeatureStats stats;
  EncodingKind encoding = EncodingKind::kOneHot;
  int d = 2;
  bool interactions = false;
  FittedModel model;

  // Prediction for raw (unnormalized) contexts, one per row.
  Eigen::VectorXd Predict(const Eigen::MatrixXd& raw,
                          std::span<const Treatment> treatments) const;
  double Predict(std::span<const double> raw, Treatment treatment) const;
};

DirectBaseline FitDirectBaseline(const Dataset& ds, const LearnerSpec& spec,
                                 const FeaturizerConfig& featurizer,
                                 bool interactions);

// Plug-in difference f(W, to) - f(W, from).
double DirectCate(const DirectBaseline& model, std::span<const double> raw,
                  Treatment from, Treatment to);

nlohmann::ordered_json DirectBaselineToJson(const DirectBaseline& b);
DirectBaseline DirectBaselineFromJson(const nlohmann::ordered_json& j);

// Bounded perturbation directions over the context w = [S, X_t]:
//   dm(w)     = m_offset + 0.5 tanh(m_proj . w)
//   de_k(w)   = e_offset_k + 0.5 tanh(e_proj_k . w)
//   dtheta_k(w) = theta_offset_k + 0.5 tanh(theta_proj_k . w)
// all multiplied by `scale`.
struct DirectionPair {
  double scale = 1.0;
  double m_offset = 0.0;
  Eigen::VectorXd m_proj;
  Eigen::VectorXd e_offset;
  Eigen::MatrixXd e_proj;  // k x (p_s + p_x)
  Eigen::VectorXd theta_offset;
  Eigen::MatrixXd theta_proj;

  double Dm(const ContextView& w) const;
  Eigen::VectorXd De(const ContextView& w) const;
  Eigen::VectorXd Dtheta(const ContextView& w) const;
};

// Random directions for `oracle`; the constant offsets of dm and dtheta share
// a sign.
DirectionPair RandomDirections(const Oracle& oracle, std::mt19937_64& rng);
DirectionPair ZeroDirections(const Oracle& oracle);

enum class CheckedLoss {
  // (Y - m - (enc(T) - e) . theta)^2 at (theta0, m0, e0), perturbing
  // theta and (m, e).
  kRLoss,
  // (Y - f - enc(T) . theta)^2 at (theta0, f0), perturbing theta and f.
  kNaive,
};

struct OrthogonalityResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  bool richardson = false;
};

// Monte-Carlo estimate of the cross directional derivative
// d^2/ds dr L(theta0 + s dtheta, g0 + r dg) at s = r = 0, using central
// finite differences with step fd_step in both scalars. Contexts are drawn
// uniformly over forecast steps of the oracle's data and (T, Y) freshly
// sampled at each. Falls back to a Richardson combination of fd_step and
// fd_step / 2 when the two estimates disagree beyond rounding.
OrthogonalityResult OrthogonalityCheck(const Oracle& oracle, int n_samples,
                                       const DirectionPair& directions,
                                       double fd_step, uint64_t seed,
                                       CheckedLoss loss = CheckedLoss::kRLoss);

struct HessianCheckResult {
  double analytic = 0.0;
  double fd_top = 0.0;
  double second_abs = 0.0;
};

// Finite-difference Hessian of l(gamma) = (Y - gamma_1 - (T - gamma_2) . zeta)^2
// in gamma = (m-output, e-output) at a seeded base point, compared with the
// analytic non-zero eigenvalue 2 (1 + |zeta|^2).
HessianCheckResult RLossHessianCheck(const Eigen::VectorXd& zeta,
                                     double fd_step = 1e-3, uint64_t seed = 0);

// (series index, t, from, to) -> CATE.
using ContextCatePredictor =
    std::function<double(int series, int t, Treatment from, Treatment to)>;

// RMSE against the oracle over `n_contexts` seeded random forecast steps and
// every adjacent treatment pair (i -> i + 1).
double OracleCateRmse(const Oracle& oracle, const ContextCatePredictor& predictor,
                      int n_contexts = 500, uint64_t seed = 12345);

struct CateHistogram {
  std::vector<double> edges;
  std::vector<long> counts;
  double positive_fraction = 0.0;
  long n_values = 0;
  long n_skipped = 0;
};

// CATE of moving each forecast step's observed treatment to the next index,
// divided by the treatment-value difference when `per_unit`. Steps already at
// the top index are skipped. Empty `edges` selects 40 equal bins over the
// observed range.
CateHistogram ComputeCateHistogram(const ContextCatePredictor& predictor,
                                   const Dataset& ds, bool per_unit,
                                   std::vector<double> edges = {});

void WriteHistogramCsv(const CateHistogram& h, std::ostream& out);
void WriteHistogramSvg(const CateHistogram& h, const std::string& title,
                       std::ostream& out);

struct MetricsReport {
  std::string model_tag;
  double rmse = 0.0;
  double mae = 0.0;
  double rdd_rmse = 0.0;
  double rdd_mae = 0.0;
  std::optional<double> oracle_cate_rmse;
  long n_points = 0;
  long n_entries = 0;
};

std::string MetricsCsvHeader();
std::string MetricsCsvRow(const MetricsReport& r);
std::string MetricsText(const MetricsReport& r);

// Settings shared by the synthetic experiments.
struct ExperimentSettings {
  PipelineConfig pipeline;
  LearnerSpec direct_spec;
  bool direct_interactions = true;
  int n_contexts = 500;
  int n_test_series = 500;
};

struct ExperimentResult {
  double orthogonal_rmse = 0.0;
  double direct_rmse = 0.0;
  double orthogonal_positive = 0.0;
  double direct_positive = 0.0;
  double oracle_positive = 0.0;
};

// Held-out data from the same structure as `cfg` with a different sample seed.
SynthConfig HeldOutConfig(const SynthConfig& cfg, int n_series);

// Generates training data with sample seed `seed`, trains the orthogonal
// forecaster and the direct baseline (learner seeds derived from `seed`) and
// scores both against the oracle on held-out data.
ExperimentResult RunSyntheticExperiment(const SynthConfig& cfg,
                                        const ExperimentSettings& settings,
                                        uint64_t seed);

struct SweepRow {
  int n_series = 0;
  double orthogonal_rmse = 0.0;
  double direct_rmse = 0.0;
  double orthogonal_se = 0.0;
  double direct_se = 0.0;
  std::vector<double> orthogonal_runs;
  std::vector<double> direct_runs;
  bool failed = false;
  std::string error;
};

// For each N, regenerate with the same structural seed and average the
// oracle-CATE RMSE over `seeds`. A failing N stops the sweep; the partial
// table is returned with the failing row flagged.
std::vector<SweepRow> ConvergenceSweep(const SynthConfig& cfg,
                                       const std::vector<int>& ns,
                                       const ExperimentSettings& settings,
                                       const std::vector<uint64_t>& seeds);

}  // namespace orthocast

#endif  // ORTHOCAST_EVAL_H_

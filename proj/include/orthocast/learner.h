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

// Supervised learners shared by the nuisance, effect and baseline models:
// closed-form weighted ridge regression and a small feedforward network
// trained with momentum descent. Both are stored as a stack of dense layers
// (ridge is the zero-hidden-layer case) so prediction, gradient checks and
// serialization share one code path.

#ifndef ORTHOCAST_LEARNER_H_
#define ORTHOCAST_LEARNER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace orthocast {

enum class LearnerKind { kRidge, kMlp };

enum class LossKind {
  kMse,
  kSoftmaxCrossEntropy,
  kBinaryCrossEntropyPerDim,
  kRLoss,
};

std::string LearnerKindName(LearnerKind kind);
LearnerKind ParseLearnerKind(const std::string& name);
std::string LossName(LossKind loss);
LossKind ParseLoss(const std::string& name);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kRidge;
  double ridge_lambda = 1e-3;
  // Only consulted when ridge_lambda == 0: singular systems fall back to the
  // minimum-norm least-squares solution instead of failing.
  bool allow_pinv = false;
  std::vector<int> mlp_hidden = {64, 64};
  int mlp_epochs = 200;
  int mlp_batch = 256;
  double mlp_lr = 1e-3;
  double mlp_momentum = 0.9;
  // Start from all-zero parameters instead of Glorot initialization.
  bool zero_init = false;
  uint64_t seed = 0;
  int output_dim = 1;
  LossKind loss = LossKind::kMse;
  // When > 0, identity-head outputs are clipped to [-clip, clip].
  double output_clip = 0.0;

  void Validate() const;
};

nlohmann::ordered_json SpecToJson(const LearnerSpec& spec);
// Fields absent from `j` keep the values of `defaults`.
LearnerSpec SpecFromJson(const nlohmann::ordered_json& j,
                         const LearnerSpec& defaults = {});

// Supervised targets (n x output_dim), or the residualized bundle consumed by
// the R-loss: y = y_tilde (n x 1) and t_tilde (n x output_dim).
struct TrainingTargets {
  Eigen::MatrixXd y;
  Eigen::MatrixXd t_tilde;

  static TrainingTargets Supervised(Eigen::MatrixXd y);
  static TrainingTargets Residualized(const Eigen::VectorXd& y_tilde,
                                      Eigen::MatrixXd t_tilde);
  Eigen::Index rows() const { return y.rows(); }
  TrainingTargets Rows(const std::vector<Eigen::Index>& idx) const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

class FittedModel {
 public:
  FittedModel() = default;
  FittedModel(LearnerSpec spec, int input_dim, std::vector<DenseLayer> layers);

  const LearnerSpec& spec() const { return spec_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return spec_.output_dim; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  // Post-head predictions: probabilities for the softmax head, per-dimension
  // probabilities for the binary head, raw values otherwise. Throws
  // ConfigError when the column count differs from training.
  Eigen::MatrixXd Predict(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd PredictRow(std::span<const double> x) const;
  // Outputs before the head nonlinearity.
  Eigen::MatrixXd PredictRaw(const Eigen::MatrixXd& x) const;

  int NumParameters() const;
  Eigen::VectorXd FlatParameters() const;
  void SetFlatParameters(const Eigen::VectorXd& flat);

  const std::vector<double>& loss_trace() const { return loss_trace_; }
  std::vector<double>& mutable_loss_trace() { return loss_trace_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  void AddDiagnostic(std::string msg) { diagnostics_.push_back(std::move(msg)); }

  // Bias of the last layer for ridge models (intercept beta_0).
  const Eigen::VectorXd& intercept() const { return layers_.back().bias; }
  // Coefficient matrix of ridge models (output_dim x input_dim).
  const Eigen::MatrixXd& coefficients() const { return layers_.back().weight; }

 private:
  LearnerSpec spec_;
  int input_dim_ = 0;
  std::vector<DenseLayer> layers_;
  std::vector<double> loss_trace_;
  std::vector<std::string> diagnostics_;
};

nlohmann::ordered_json ModelToJson(const FittedModel& model);
FittedModel ModelFromJson(const nlohmann::ordered_json& j);

// Applies the head of `loss` to raw outputs.
Eigen::MatrixXd ApplyHead(LossKind loss, const Eigen::MatrixXd& raw);

// Mean per-sample loss of raw outputs `z`. When `grad` is non-null it
// receives dLoss/dz. Per-sample losses:
//   mse      sum_k (z_k - y_k)^2
//   softmax  -sum_k y_k log softmax(z)_k
//   binary   sum_k softplus(z_k) - y_k z_k
//   rloss    (y - t_tilde . z)^2
double LossAndGradient(LossKind loss, const Eigen::MatrixXd& z,
                       const TrainingTargets& targets, Eigen::MatrixXd* grad);

double EvaluateLoss(const FittedModel& model, LossKind loss,
                    const Eigen::MatrixXd& x, const TrainingTargets& targets);

// Closed-form weighted ridge with an unpenalized intercept:
//   minimize sum_i w_i ||y_i - b0 - B x_i||^2 + lambda ||B||_F^2
// where the weights are first rescaled to mean 1, which makes fitted values
// invariant to uniform rescaling of `weights`. Zero weights drop rows.
// Throws NumericalError on a singular system when lambda == 0 and pinv is
// not allowed, and ConfigError on all-zero or negative weights.
FittedModel FitRidge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const Eigen::VectorXd& weights, double lambda,
                     bool allow_pinv = false);
FittedModel FitRidge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const LearnerSpec& spec);

// Ridge solution without intercept, penalizing every coefficient:
//   minimize sum_i (y_i - z_i . beta)^2 + lambda ||beta||^2
Eigen::VectorXd SolveRidgeNoIntercept(const Eigen::MatrixXd& z,
                                      const Eigen::VectorXd& y, double lambda,
                                      bool allow_pinv);

// Effect model linear in the features, theta_k(x) = b_k + B_k x, fitted in
// closed form by minimizing the R-loss plus lambda (||b||^2 + ||B||^2). The
// induced design has columns t_tilde_k * [1, x].
FittedModel FitRidgeRLoss(const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y_tilde,
                          const Eigen::MatrixXd& t_tilde,
                          const LearnerSpec& spec);

// Mini-batch momentum descent on the mean loss of spec.loss. Throws
// NumericalError (with the epoch index) when the loss becomes non-finite.
FittedModel FitMlp(const Eigen::MatrixXd& x, const TrainingTargets& targets,
                   const LearnerSpec& spec);

// Dispatches on spec.kind and spec.loss.
FittedModel Fit(const Eigen::MatrixXd& x, const TrainingTargets& targets,
                const LearnerSpec& spec);

// Analytic parameter gradient of the mean loss (backpropagation).
Eigen::VectorXd ParameterGradient(const FittedModel& model, LossKind loss,
                                  const Eigen::MatrixXd& x,
                                  const TrainingTargets& targets);

// Max relative discrepancy between backpropagated gradients and central
// finite differences with the given step. Relative errors use the
// denominator max(|analytic|, |numeric|, 1e-6).
double GradientCheck(const FittedModel& model, LossKind loss,
                     const Eigen::MatrixXd& x, const TrainingTargets& targets,
                     double step = 1e-5);

// A randomly initialized network (Glorot uniform) without training.
FittedModel InitializeMlp(int input_dim, const LearnerSpec& spec);

}  // namespace orthocast

#endif  // ORTHOCAST_LEARNER_H_

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "orthocast/errors.h"
#include "orthocast/learner.h"

namespace orthocast {
namespace {

struct ForwardCache {
  // activations[0] is the input batch; activations[l+1] the output of layer l
  // (tanh for hidden layers, raw for the last).
  std::vector<Eigen::MatrixXd> activations;
};

void Forward(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x,
             ForwardCache* cache) {
  cache->activations.resize(layers.size() + 1);
  cache->activations[0] = x;
  for (size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = cache->activations[l] * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    if (l + 1 < layers.size()) z = z.array().tanh().matrix();
    cache->activations[l + 1] = std::move(z);
  }
}

// Gradients per layer given dLoss/d(raw output).
void Backward(const std::vector<DenseLayer>& layers, const ForwardCache& cache,
              Eigen::MatrixXd delta, std::vector<DenseLayer>* grads) {
  grads->resize(layers.size());
  for (size_t l = layers.size(); l-- > 0;) {
    (*grads)[l].weight = delta.transpose() * cache.activations[l];
    (*grads)[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd da = delta * layers[l].weight;
      const auto& a = cache.activations[l];
      delta = (da.array() * (1.0 - a.array().square())).matrix();
    }
  }
}

std::vector<DenseLayer> InitialLayers(int input_dim, const LearnerSpec& spec,
                                      std::mt19937_64& rng) {
  std::vector<int> widths;
  widths.push_back(input_dim);
  if (spec.kind == LearnerKind::kMlp) {
    widths.insert(widths.end(), spec.mlp_hidden.begin(), spec.mlp_hidden.end());
  }
  widths.push_back(spec.output_dim);
  std::vector<DenseLayer> layers;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.weight = Eigen::MatrixXd::Zero(widths[l + 1], widths[l]);
    layer.bias = Eigen::VectorXd::Zero(widths[l + 1]);
    if (!spec.zero_init) {
      const double limit = std::sqrt(6.0 / (widths[l] + widths[l + 1]));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = u(rng);
      }
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

void CheckTargets(const Eigen::MatrixXd& x, const TrainingTargets& targets,
                  const LearnerSpec& spec) {
  if (targets.rows() != x.rows()) {
    throw ConfigError("fit: feature and target row counts differ");
  }
  if (spec.loss == LossKind::kRLoss) {
    if (targets.y.cols() != 1 || targets.t_tilde.cols() != spec.output_dim) {
      throw ConfigError("fit: rloss targets need y_tilde (n x 1) and t_tilde (n x output_dim)");
    }
  } else if (targets.y.cols() != spec.output_dim) {
    throw ConfigError("fit: target has " + std::to_string(targets.y.cols()) +
                      " columns, spec.output_dim is " + std::to_string(spec.output_dim));
  }
  if (!targets.y.allFinite() || !targets.t_tilde.allFinite()) {
    throw ConfigError("fit: targets must be finite");
  }
}

}  // namespace

FittedModel InitializeMlp(int input_dim, const LearnerSpec& spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  return FittedModel(spec, input_dim, InitialLayers(input_dim, spec, rng));
}

FittedModel FitMlp(const Eigen::MatrixXd& x, const TrainingTargets& targets,
                   const LearnerSpec& spec) {
  spec.Validate();
  CheckTargets(x, targets, spec);
  std::mt19937_64 rng(spec.seed);
  std::vector<DenseLayer> layers = InitialLayers(static_cast<int>(x.cols()), spec, rng);
  FittedModel model(spec, static_cast<int>(x.cols()), {});

  if (spec.mlp_lr == 0.0) model.AddDiagnostic("no progress: learning rate is 0");
  if (spec.mlp_epochs == 0) model.AddDiagnostic("no training: 0 epochs");

  std::vector<DenseLayer> velocity = layers;
  for (auto& v : velocity) {
    v.weight.setZero();
    v.bias.setZero();
  }
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  ForwardCache cache;
  std::vector<DenseLayer> grads;
  Eigen::MatrixXd delta;

  for (int epoch = 0; epoch < spec.mlp_epochs && n > 0; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += spec.mlp_batch) {
      const Eigen::Index stop = std::min<Eigen::Index>(n, start + spec.mlp_batch);
      std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + stop);
      const Eigen::MatrixXd xb = x(idx, Eigen::all);
      const TrainingTargets tb = targets.Rows(idx);
      Forward(layers, xb, &cache);
      const double loss = LossAndGradient(spec.loss, cache.activations.back(), tb, &delta);
      if (!std::isfinite(loss)) {
        throw NumericalError("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch + 1));
      }
      epoch_loss += loss * static_cast<double>(stop - start);
      Backward(layers, cache, delta, &grads);
      for (size_t l = 0; l < layers.size(); ++l) {
        velocity[l].weight = spec.mlp_momentum * velocity[l].weight - spec.mlp_lr * grads[l].weight;
        velocity[l].bias = spec.mlp_momentum * velocity[l].bias - spec.mlp_lr * grads[l].bias;
        layers[l].weight += velocity[l].weight;
        layers[l].bias += velocity[l].bias;
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw NumericalError("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch + 1));
    }
    model.mutable_loss_trace().push_back(epoch_loss);
  }
  model.mutable_layers() = std::move(layers);
  return model;
}

Eigen::VectorXd ParameterGradient(const FittedModel& model, LossKind loss,
                                  const Eigen::MatrixXd& x,
                                  const TrainingTargets& targets) {
  if (model.NumParameters() == 0) return Eigen::VectorXd();
  ForwardCache cache;
  Forward(model.layers(), x, &cache);
  Eigen::MatrixXd delta;
  LossAndGradient(loss, cache.activations.back(), targets, &delta);
  std::vector<DenseLayer> grads;
  Backward(model.layers(), cache, delta, &grads);
  FittedModel holder(model.spec(), model.input_dim(), std::move(grads));
  return holder.FlatParameters();
}

double GradientCheck(const FittedModel& model, LossKind loss,
                     const Eigen::MatrixXd& x, const TrainingTargets& targets,
                     double step) {
  if (model.NumParameters() == 0) return 0.0;
  const Eigen::VectorXd analytic = ParameterGradient(model, loss, x, targets);
  FittedModel probe = model;
  const Eigen::VectorXd base = model.FlatParameters();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Eigen::VectorXd p = base;
    p[k] = base[k] + step;
    probe.SetFlatParameters(p);
    const double up = EvaluateLoss(probe, loss, x, targets);
    p[k] = base[k] - step;
    probe.SetFlatParameters(p);
    const double down = EvaluateLoss(probe, loss, x, targets);
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

}  // namespace orthocast

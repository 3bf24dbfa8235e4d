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

#include "orthocast/learner.h"

#include <cmath>

#include "orthocast/errors.h"

namespace orthocast {

using Json = nlohmann::ordered_json;

std::string LearnerKindName(LearnerKind kind) {
  return kind == LearnerKind::kRidge ? "ridge" : "mlp";
}

LearnerKind ParseLearnerKind(const std::string& name) {
  if (name == "ridge") return LearnerKind::kRidge;
  if (name == "mlp") return LearnerKind::kMlp;
  throw ConfigError("unknown learner kind '" + name + "' (expected ridge or mlp)");
}

std::string LossName(LossKind loss) {
  switch (loss) {
    case LossKind::kMse:
      return "mse";
    case LossKind::kSoftmaxCrossEntropy:
      return "softmax_cross_entropy";
    case LossKind::kBinaryCrossEntropyPerDim:
      return "binary_cross_entropy_per_dim";
    case LossKind::kRLoss:
      return "rloss";
  }
  return "unknown";
}

LossKind ParseLoss(const std::string& name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "softmax_cross_entropy") return LossKind::kSoftmaxCrossEntropy;
  if (name == "binary_cross_entropy_per_dim") {
    return LossKind::kBinaryCrossEntropyPerDim;
  }
  if (name == "rloss") return LossKind::kRLoss;
  throw ConfigError("unknown loss '" + name + "'");
}

void LearnerSpec::Validate() const {
  if (output_dim < 1) throw ConfigError("learner output_dim must be >= 1");
  if (!(ridge_lambda >= 0.0)) throw ConfigError("ridge_lambda must be >= 0");
  if (kind == LearnerKind::kRidge && loss != LossKind::kMse &&
      loss != LossKind::kRLoss) {
    throw ConfigError("ridge learners support the mse and rloss losses only");
  }
  if (loss == LossKind::kSoftmaxCrossEntropy && output_dim < 2) {
    throw ConfigError("softmax head requires output_dim = d >= 2");
  }
  if (kind == LearnerKind::kMlp) {
    if (mlp_epochs < 0) throw ConfigError("mlp_epochs must be >= 0");
    if (mlp_batch < 1) throw ConfigError("mlp_batch must be >= 1");
    if (!(mlp_lr >= 0.0)) throw ConfigError("mlp_lr must be >= 0");
    if (!(mlp_momentum >= 0.0 && mlp_momentum < 1.0)) {
      throw ConfigError("mlp_momentum must lie in [0, 1)");
    }
    for (int w : mlp_hidden) {
      if (w < 1) throw ConfigError("mlp_hidden widths must be >= 1");
    }
  }
  if (!(output_clip >= 0.0)) throw ConfigError("output_clip must be >= 0");
}

Json SpecToJson(const LearnerSpec& spec) {
  Json j;
  j["kind"] = LearnerKindName(spec.kind);
  j["ridge_lambda"] = spec.ridge_lambda;
  j["allow_pinv"] = spec.allow_pinv;
  j["mlp_hidden"] = spec.mlp_hidden;
  j["mlp_epochs"] = spec.mlp_epochs;
  j["mlp_batch"] = spec.mlp_batch;
  j["mlp_lr"] = spec.mlp_lr;
  j["mlp_momentum"] = spec.mlp_momentum;
  j["zero_init"] = spec.zero_init;
  j["seed"] = spec.seed;
  j["output_dim"] = spec.output_dim;
  j["loss"] = LossName(spec.loss);
  j["output_clip"] = spec.output_clip;
  return j;
}

LearnerSpec SpecFromJson(const Json& j, const LearnerSpec& defaults) {
  LearnerSpec s = defaults;
  try {
    if (j.contains("kind")) s.kind = ParseLearnerKind(j["kind"].get<std::string>());
    if (j.contains("ridge_lambda")) s.ridge_lambda = j["ridge_lambda"].get<double>();
    if (j.contains("allow_pinv")) s.allow_pinv = j["allow_pinv"].get<bool>();
    if (j.contains("mlp_hidden")) s.mlp_hidden = j["mlp_hidden"].get<std::vector<int>>();
    if (j.contains("mlp_epochs")) s.mlp_epochs = j["mlp_epochs"].get<int>();
    if (j.contains("mlp_batch")) s.mlp_batch = j["mlp_batch"].get<int>();
    if (j.contains("mlp_lr")) s.mlp_lr = j["mlp_lr"].get<double>();
    if (j.contains("mlp_momentum")) s.mlp_momentum = j["mlp_momentum"].get<double>();
    if (j.contains("zero_init")) s.zero_init = j["zero_init"].get<bool>();
    if (j.contains("seed")) s.seed = j["seed"].get<uint64_t>();
    if (j.contains("output_dim")) s.output_dim = j["output_dim"].get<int>();
    if (j.contains("loss")) s.loss = ParseLoss(j["loss"].get<std::string>());
    if (j.contains("output_clip")) s.output_clip = j["output_clip"].get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid learner spec: ") + e.what());
  }
  return s;
}

TrainingTargets TrainingTargets::Supervised(Eigen::MatrixXd y) {
  TrainingTargets t;
  t.y = std::move(y);
  return t;
}

TrainingTargets TrainingTargets::Residualized(const Eigen::VectorXd& y_tilde,
                                              Eigen::MatrixXd t_tilde) {
  if (t_tilde.rows() != y_tilde.size()) {
    throw ConfigError("residualized targets: row count mismatch");
  }
  TrainingTargets t;
  t.y = y_tilde;
  t.t_tilde = std::move(t_tilde);
  return t;
}

TrainingTargets TrainingTargets::Rows(
    const std::vector<Eigen::Index>& idx) const {
  TrainingTargets out;
  out.y = y(idx, Eigen::all);
  if (t_tilde.size() > 0) out.t_tilde = t_tilde(idx, Eigen::all);
  return out;
}

FittedModel::FittedModel(LearnerSpec spec, int input_dim,
                         std::vector<DenseLayer> layers)
    : spec_(std::move(spec)), input_dim_(input_dim), layers_(std::move(layers)) {}

Eigen::MatrixXd FittedModel::PredictRaw(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim_) {
    throw ConfigError("predict: expected " + std::to_string(input_dim_) +
                      " feature columns, got " + std::to_string(x.cols()));
  }
  if (layers_.empty()) return Eigen::MatrixXd::Zero(x.rows(), output_dim());
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = a * layers_[l].weight.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::MatrixXd FittedModel::Predict(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = ApplyHead(spec_.loss, PredictRaw(x));
  if (spec_.output_clip > 0.0 && (spec_.loss == LossKind::kMse ||
                                  spec_.loss == LossKind::kRLoss)) {
    out = out.cwiseMax(-spec_.output_clip).cwiseMin(spec_.output_clip);
  }
  return out;
}

Eigen::VectorXd FittedModel::PredictRow(std::span<const double> x) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (size_t k = 0; k < x.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = x[k];
  return Predict(row).row(0).transpose();
}

int FittedModel::NumParameters() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return static_cast<int>(n);
}

Eigen::VectorXd FittedModel::FlatParameters() const {
  Eigen::VectorXd flat(NumParameters());
  Eigen::Index pos = 0;
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        flat[pos++] = layer.weight(r, c);
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat[pos++] = layer.bias[r];
  }
  return flat;
}

void FittedModel::SetFlatParameters(const Eigen::VectorXd& flat) {
  if (flat.size() != NumParameters()) {
    throw ConfigError("SetFlatParameters: size mismatch");
  }
  Eigen::Index pos = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = flat[pos++];
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = flat[pos++];
  }
}

Json ModelToJson(const FittedModel& model) {
  Json j;
  j["format"] = "orthocast-model";
  j["version"] = 1;
  j["spec"] = SpecToJson(model.spec());
  j["input_dim"] = model.input_dim();
  Json layers = Json::array();
  for (const auto& layer : model.layers()) {
    Json l;
    l["in"] = layer.weight.cols();
    l["out"] = layer.weight.rows();
    std::vector<double> w;
    w.reserve(static_cast<size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    }
    l["weight"] = std::move(w);
    l["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  j["loss_trace"] = model.loss_trace();
  return j;
}

FittedModel ModelFromJson(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "orthocast-model") {
      throw DataError("not an orthocast model record");
    }
    if (j.at("version").get<int>() != 1) {
      throw DataError("unsupported model version");
    }
    LearnerSpec spec = SpecFromJson(j.at("spec"));
    std::vector<DenseLayer> layers;
    for (const auto& l : j.at("layers")) {
      const auto in = l.at("in").get<Eigen::Index>();
      const auto out = l.at("out").get<Eigen::Index>();
      const auto w = l.at("weight").get<std::vector<double>>();
      const auto b = l.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != in * out ||
          static_cast<Eigen::Index>(b.size()) != out) {
        throw DataError("model layer size mismatch");
      }
      DenseLayer layer;
      layer.weight.resize(out, in);
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = w[static_cast<size_t>(r * in + c)];
      }
      layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
      layers.push_back(std::move(layer));
    }
    FittedModel model(spec, j.at("input_dim").get<int>(), std::move(layers));
    if (j.contains("loss_trace")) {
      model.mutable_loss_trace() = j["loss_trace"].get<std::vector<double>>();
    }
    return model;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed model record: ") + e.what());
  }
}

Eigen::MatrixXd ApplyHead(LossKind loss, const Eigen::MatrixXd& raw) {
  switch (loss) {
    case LossKind::kSoftmaxCrossEntropy: {
      Eigen::MatrixXd p(raw.rows(), raw.cols());
      for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const double mx = raw.row(i).maxCoeff();
        Eigen::RowVectorXd e = (raw.row(i).array() - mx).exp().matrix();
        p.row(i) = e / e.sum();
      }
      return p;
    }
    case LossKind::kBinaryCrossEntropyPerDim:
      return (1.0 / (1.0 + (-raw.array()).exp())).matrix();
    case LossKind::kMse:
    case LossKind::kRLoss:
      return raw;
  }
  return raw;
}

double LossAndGradient(LossKind loss, const Eigen::MatrixXd& z,
                       const TrainingTargets& targets, Eigen::MatrixXd* grad) {
  const Eigen::Index n = z.rows();
  if (n == 0) {
    if (grad) grad->resize(0, z.cols());
    return 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto& y = targets.y;
  double total = 0.0;
  switch (loss) {
    case LossKind::kMse: {
      Eigen::MatrixXd r = z - y;
      total = r.squaredNorm();
      if (grad) *grad = (2.0 * inv_n) * r;
      break;
    }
    case LossKind::kSoftmaxCrossEntropy: {
      if (grad) grad->resize(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = z.row(i).maxCoeff();
        Eigen::RowVectorXd e = (z.row(i).array() - mx).exp().matrix();
        const double s = e.sum();
        const double lse = mx + std::log(s);
        total += y.row(i).sum() * lse - y.row(i).dot(z.row(i));
        if (grad) grad->row(i) = inv_n * (y.row(i).sum() * e / s - y.row(i));
      }
      break;
    }
    case LossKind::kBinaryCrossEntropyPerDim: {
      if (grad) grad->resize(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < z.cols(); ++k) {
          const double v = z(i, k);
          // softplus(v) = log(1 + e^v), computed stably.
          const double softplus = v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
          total += softplus - y(i, k) * v;
          if (grad) (*grad)(i, k) = inv_n * (1.0 / (1.0 + std::exp(-v)) - y(i, k));
        }
      }
      break;
    }
    case LossKind::kRLoss: {
      if (targets.t_tilde.rows() != n || targets.t_tilde.cols() != z.cols()) {
        throw ConfigError("rloss: t_tilde shape does not match outputs");
      }
      Eigen::VectorXd r = y.col(0) - (targets.t_tilde.cwiseProduct(z)).rowwise().sum();
      total = r.squaredNorm();
      if (grad) *grad = (-2.0 * inv_n) * (targets.t_tilde.array().colwise() * r.array()).matrix();
      break;
    }
  }
  return total * inv_n;
}

double EvaluateLoss(const FittedModel& model, LossKind loss,
                    const Eigen::MatrixXd& x, const TrainingTargets& targets) {
  return LossAndGradient(loss, model.PredictRaw(x), targets, nullptr);
}

FittedModel Fit(const Eigen::MatrixXd& x, const TrainingTargets& targets,
                const LearnerSpec& spec) {
  spec.Validate();
  if (spec.kind == LearnerKind::kMlp) return FitMlp(x, targets, spec);
  if (spec.loss == LossKind::kRLoss) {
    return FitRidgeRLoss(x, targets.y.col(0), targets.t_tilde, spec);
  }
  return FitRidge(x, targets.y, spec);
}

}  // namespace orthocast

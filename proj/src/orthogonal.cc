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

#include "orthocast/orthogonal.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "orthocast/encoding.h"
#include "orthocast/errors.h"

namespace orthocast {
namespace {

using Json = nlohmann::ordered_json;

constexpr int kForecasterVersion = 1;

Eigen::MatrixXd EncodedTreatments(const Dataset& ds,
                                  const std::vector<SampleRef>& refs) {
  const int k = EncodedDimension(ds.encoding, ds.d);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(refs.size()), k);
  Eigen::VectorXd row(k);
  for (size_t i = 0; i < refs.size(); ++i) {
    const TimeSeries& s = ds.series[refs[i].series];
    EncodeTreatmentInto(s.treatment(refs[i].t), ds.d, ds.encoding, row);
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

Eigen::MatrixXd NormalizeRows(const Eigen::MatrixXd& raw,
                              const FeaturizerConfig& cfg,
                              const FeatureStats& stats) {
  if (!cfg.normalize) return raw;
  if (static_cast<Eigen::Index>(stats.size()) != raw.cols()) {
    throw ConfigError("normalization statistics have " +
                      std::to_string(stats.size()) + " columns, context has " +
                      std::to_string(raw.cols()));
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    const double scale = stats.scale[k];
    if (scale > 0.0) {
      out.col(k) = (raw.col(k).array() - stats.mean[k]) / scale;
    } else {
      out.col(k).setZero();
    }
  }
  return out;
}

std::vector<std::string> SeriesIds(const Dataset& ds) {
  std::vector<std::string> ids;
  ids.reserve(ds.size());
  for (const auto& s : ds.series) ids.push_back(s.id);
  return ids;
}

void CheckTreatment(Treatment treatment, EncodingKind kind, int d) {
  // Encoding validates the index range and finiteness.
  (void)EncodeTreatment(treatment, d, kind);
}

}  // namespace

std::pair<Dataset, Dataset> SplitSample(const Dataset& ds, uint64_t seed) {
  if (ds.size() < 2) {
    throw ConfigError("split_sample requires at least 2 series, got " +
                      std::to_string(ds.size()));
  }
  std::vector<int> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (size_t i = order.size() - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const size_t half = ds.size() / 2;
  std::vector<int> a(order.begin(), order.begin() + half);
  std::vector<int> b(order.begin() + half, order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {ds.Subset(a), ds.Subset(b)};
}

LossKind TreatmentLoss(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kOneHot:
      return LossKind::kSoftmaxCrossEntropy;
    case EncodingKind::kCumulative:
      return LossKind::kBinaryCrossEntropyPerDim;
    case EncodingKind::kLinear:
      return LossKind::kMse;
  }
  return LossKind::kMse;
}

LearnerSpec OutcomeSpec(LearnerSpec base) {
  base.output_dim = 1;
  base.loss = LossKind::kMse;
  return base;
}

LearnerSpec TreatmentSpec(LearnerSpec base, EncodingKind kind, int d) {
  base.output_dim = EncodedDimension(kind, d);
  base.loss = base.kind == LearnerKind::kRidge ? LossKind::kMse
                                               : TreatmentLoss(kind);
  return base;
}

LearnerSpec EffectSpec(LearnerSpec base, EncodingKind kind, int d) {
  base.output_dim = EncodedDimension(kind, d);
  base.loss = LossKind::kRLoss;
  return base;
}

NuisancePair FitNuisance(const Dataset& s1, EncodingKind encoding,
                         const LearnerSpec& m_spec, const LearnerSpec& e_spec,
                         const FeaturizerConfig& featurizer) {
  featurizer.Validate();
  if (s1.empty()) throw ConfigError("fit_nuisance: empty nuisance fold");
  if (encoding != s1.encoding) {
    throw ConfigError("fit_nuisance: encoding does not match the dataset");
  }
  const int k = EncodedDimension(encoding, s1.d);
  if (m_spec.output_dim != 1 || m_spec.loss != LossKind::kMse) {
    throw ConfigError("fit_nuisance: outcome model must use mse with 1 output");
  }
  if (e_spec.output_dim != k) {
    throw ConfigError("fit_nuisance: treatment model output_dim " +
                      std::to_string(e_spec.output_dim) + " != " +
                      std::to_string(k));
  }
  const LossKind expected = e_spec.kind == LearnerKind::kRidge
                                ? LossKind::kMse
                                : TreatmentLoss(encoding);
  if (e_spec.loss != expected) {
    throw ConfigError("fit_nuisance: treatment model loss '" +
                      LossName(e_spec.loss) + "' does not match encoding '" +
                      std::string(EncodingName(encoding)) + "'");
  }

  NuisancePair out;
  out.featurizer = featurizer;
  out.stats = ComputeFeatureStats(s1, featurizer);
  const FeatureMatrix fm = FeaturizeDataset(s1, featurizer, out.stats);
  if (fm.x.rows() == 0) throw ConfigError("fit_nuisance: no forecast steps");
  Eigen::MatrixXd y(fm.x.rows(), 1);
  for (size_t i = 0; i < fm.refs.size(); ++i) {
    y(static_cast<Eigen::Index>(i), 0) =
        s1.series[fm.refs[i].series].y(fm.refs[i].t);
  }
  out.m = Fit(fm.x, TrainingTargets::Supervised(std::move(y)), m_spec);
  out.e = Fit(fm.x, TrainingTargets::Supervised(EncodedTreatments(s1, fm.refs)),
              e_spec);
  return out;
}

ResidualizedSample ResidualizedSamples::Sample(Eigen::Index i) const {
  ResidualizedSample s;
  s.features.values.resize(static_cast<size_t>(x.cols()));
  for (Eigen::Index k = 0; k < x.cols(); ++k) s.features.values[k] = x(i, k);
  s.features.t = refs[i].t;
  s.features.series_id = series_ids[i];
  s.y_tilde = y_tilde[i];
  s.t_tilde = t_tilde.row(i).transpose();
  return s;
}

ResidualizedSamples Residualize(const Dataset& s2, const NuisancePair& nuisance,
                                EncodingKind encoding) {
  if (encoding != s2.encoding) {
    throw ConfigError("residualize: encoding does not match the dataset");
  }
  const int dim = FeatureDimension(nuisance.featurizer, s2.dims);
  if (nuisance.m.input_dim() != dim || nuisance.e.input_dim() != dim ||
      (nuisance.featurizer.normalize &&
       static_cast<int>(nuisance.stats.size()) != dim)) {
    throw ConfigError("residualize: featurizer mismatch (nuisance models expect " +
                      std::to_string(nuisance.m.input_dim()) +
                      " features, data yields " + std::to_string(dim) + ")");
  }
  const int k = EncodedDimension(encoding, s2.d);
  if (nuisance.e.output_dim() != k) {
    throw ConfigError("residualize: treatment model has " +
                      std::to_string(nuisance.e.output_dim()) +
                      " outputs, encoding needs " + std::to_string(k));
  }
  FeatureMatrix fm = FeaturizeDataset(s2, nuisance.featurizer, nuisance.stats);
  ResidualizedSamples out;
  const Eigen::Index n = fm.x.rows();
  out.y_tilde.resize(n);
  const Eigen::MatrixXd m = nuisance.m.Predict(fm.x);
  const Eigen::MatrixXd e = nuisance.e.Predict(fm.x);
  out.t_tilde = EncodedTreatments(s2, fm.refs) - e;
  out.series_ids.reserve(fm.refs.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const SampleRef& r = fm.refs[i];
    out.y_tilde[i] = s2.series[r.series].y(r.t) - m(i, 0);
    out.series_ids.push_back(s2.series[r.series].id);
  }
  out.x = std::move(fm.x);
  out.refs = std::move(fm.refs);
  return out;
}

FittedModel FitTheta(const ResidualizedSamples& samples,
                     const LearnerSpec& theta_spec) {
  theta_spec.Validate();
  if (samples.size() == 0) throw ConfigError("fit_theta: no samples");
  if (theta_spec.loss != LossKind::kRLoss) {
    throw ConfigError("fit_theta: effect model must use the rloss loss");
  }
  if (theta_spec.output_dim != samples.t_tilde.cols()) {
    throw ConfigError("fit_theta: output_dim " +
                      std::to_string(theta_spec.output_dim) +
                      " does not match the encoded treatment dimension " +
                      std::to_string(samples.t_tilde.cols()));
  }
  if (!samples.t_tilde.allFinite() || !samples.y_tilde.allFinite()) {
    throw NumericalError("fit_theta: non-finite residuals");
  }
  if (samples.t_tilde.cwiseAbs().maxCoeff() == 0.0) {
    throw NumericalError(
        "no identification: treatment residuals are zero for every sample");
  }
  FittedModel theta = Fit(
      samples.x, TrainingTargets::Residualized(samples.y_tilde, samples.t_tilde),
      theta_spec);
  if (theta_spec.kind == LearnerKind::kMlp) {
    const double loss = EmpiricalRLoss(theta, samples);
    const double zero = samples.y_tilde.squaredNorm() / samples.size();
    if (!(loss <= zero)) {
      const Eigen::VectorXd fitted =
          (samples.t_tilde.array() * theta.PredictRaw(samples.x).array())
              .rowwise()
              .sum();
      const double denom = fitted.squaredNorm();
      const double c = denom > 0.0 ? fitted.dot(samples.y_tilde) / denom : 0.0;
      DenseLayer& last = theta.mutable_layers().back();
      last.weight *= c;
      last.bias *= c;
      theta.AddDiagnostic("output layer rescaled by " + std::to_string(c) +
                          " to improve on theta = 0");
    }
  }
  return theta;
}

double EmpiricalRLoss(const FittedModel& theta,
                      const ResidualizedSamples& samples) {
  if (samples.size() == 0) throw ConfigError("empirical_rloss: no samples");
  const Eigen::MatrixXd out = theta.Predict(samples.x);
  const Eigen::VectorXd fitted =
      (samples.t_tilde.array() * out.array()).rowwise().sum();
  return (samples.y_tilde - fitted).squaredNorm() /
         static_cast<double>(samples.size());
}

CausalForecaster::CausalForecaster(EncodingKind encoding, int d,
                                   FeatureDims dims, FeaturizerConfig featurizer,
                                   std::vector<ForecasterFold> folds)
    : encoding_(encoding),
      d_(d),
      dims_(dims),
      featurizer_(featurizer),
      folds_(std::move(folds)) {}

std::vector<CausalForecaster::BatchComponents> CausalForecaster::PredictBatch(
    const Eigen::MatrixXd& raw) const {
  std::vector<BatchComponents> out;
  out.reserve(folds_.size());
  for (const ForecasterFold& fold : folds_) {
    const Eigen::MatrixXd x =
        NormalizeRows(raw, featurizer_, fold.nuisance.stats);
    BatchComponents c;
    c.m = fold.nuisance.m.Predict(x).col(0);
    c.e = fold.nuisance.e.Predict(x);
    c.theta = fold.theta.Predict(x);
    out.push_back(std::move(c));
  }
  return out;
}

Eigen::MatrixXd CausalForecaster::PredictTheta(const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd sum;
  for (const ForecasterFold& fold : folds_) {
    const Eigen::MatrixXd x =
        NormalizeRows(raw, featurizer_, fold.nuisance.stats);
    const Eigen::MatrixXd theta = fold.theta.Predict(x);
    if (sum.size() == 0) {
      sum = theta;
    } else {
      sum += theta;
    }
  }
  return sum / static_cast<double>(folds_.size());
}

ForecastComponents CausalForecaster::Components(
    std::span<const double> raw) const {
  if (folds_.empty()) throw ConfigError("forecaster has no fitted folds");
  const Eigen::MatrixXd row = Eigen::Map<const Eigen::MatrixXd>(
      raw.data(), 1, static_cast<Eigen::Index>(raw.size()));
  ForecastComponents c;
  const auto parts = PredictBatch(row);
  const int k = EncodedDimension(encoding_, d_);
  c.e = Eigen::VectorXd::Zero(k);
  c.theta = Eigen::VectorXd::Zero(k);
  for (const auto& p : parts) {
    c.m += p.m[0];
    c.e += p.e.row(0).transpose();
    c.theta += p.theta.row(0).transpose();
  }
  const double n = static_cast<double>(parts.size());
  c.m /= n;
  c.e /= n;
  c.theta /= n;
  return c;
}

double CausalForecaster::PredictOutcome(std::span<const double> raw,
                                        Treatment treatment) const {
  if (folds_.empty()) throw ConfigError("forecaster has no fitted folds");
  CheckTreatment(treatment, encoding_, d_);
  const Eigen::VectorXd enc = EncodeTreatment(treatment, d_, encoding_);
  const Eigen::MatrixXd row = Eigen::Map<const Eigen::MatrixXd>(
      raw.data(), 1, static_cast<Eigen::Index>(raw.size()));
  double total = 0.0;
  for (const auto& p : PredictBatch(row)) {
    total += p.m[0] + (enc - p.e.row(0).transpose()).dot(p.theta.row(0));
  }
  return total / static_cast<double>(folds_.size());
}

double CausalForecaster::PredictCate(std::span<const double> raw,
                                     Treatment from, Treatment to) const {
  CheckTreatment(from, encoding_, d_);
  CheckTreatment(to, encoding_, d_);
  const Eigen::VectorXd theta = Components(raw).theta;
  return CateFromTheta(AsSpan(theta), from, to, encoding_);
}

double CausalForecaster::PredictOutcome(const TimeSeries& s, int t,
                                        Treatment treatment) const {
  const std::vector<double> raw = RawFeatures(s, t, featurizer_);
  return PredictOutcome(raw, treatment);
}

double CausalForecaster::PredictCate(const TimeSeries& s, int t, Treatment from,
                                     Treatment to) const {
  const std::vector<double> raw = RawFeatures(s, t, featurizer_);
  return PredictCate(raw, from, to);
}

CausalForecaster TrainForecaster(const Dataset& ds, const PipelineConfig& cfg) {
  cfg.featurizer.Validate();
  if (ds.empty()) throw ConfigError("train: empty dataset");
  auto [s1, s2] = SplitSample(ds, cfg.split_seed);
  const LearnerSpec m_spec = OutcomeSpec(cfg.m_spec);
  const LearnerSpec e_spec = TreatmentSpec(cfg.e_spec, ds.encoding, ds.d);
  const LearnerSpec theta_spec = EffectSpec(cfg.theta_spec, ds.encoding, ds.d);

  std::vector<ForecasterFold> folds;
  const int n_folds = cfg.cross_fit ? 2 : 1;
  for (int k = 0; k < n_folds; ++k) {
    const Dataset& nuis = k == 0 ? s1 : s2;
    const Dataset& eff = k == 0 ? s2 : s1;
    ForecasterFold fold;
    fold.nuisance = FitNuisance(nuis, ds.encoding, m_spec, e_spec, cfg.featurizer);
    const ResidualizedSamples samples =
        Residualize(eff, fold.nuisance, ds.encoding);
    fold.theta = FitTheta(samples, theta_spec);
    fold.rloss = EmpiricalRLoss(fold.theta, samples);
    fold.rloss_zero =
        samples.y_tilde.squaredNorm() / static_cast<double>(samples.size());
    fold.nuisance_ids = SeriesIds(nuis);
    fold.theta_ids = SeriesIds(eff);
    folds.push_back(std::move(fold));
  }
  return CausalForecaster(ds.encoding, ds.d, ds.dims, cfg.featurizer,
                          std::move(folds));
}

Json ForecasterToJson(const CausalForecaster& f) {
  Json j;
  j["format"] = "orthocast-forecaster";
  j["version"] = kForecasterVersion;
  j["encoding"] = std::string(EncodingName(f.encoding()));
  j["d"] = f.d();
  j["p_s"] = f.dims().p_s;
  j["p_x"] = f.dims().p_x;
  j["featurizer"] = FeaturizerConfigToJson(f.featurizer());
  Json folds = Json::array();
  for (const ForecasterFold& fold : f.folds()) {
    Json fj;
    fj["stats"] = FeatureStatsToJson(fold.nuisance.stats);
    fj["m"] = ModelToJson(fold.nuisance.m);
    fj["e"] = ModelToJson(fold.nuisance.e);
    fj["theta"] = ModelToJson(fold.theta);
    fj["rloss"] = fold.rloss;
    fj["rloss_zero"] = fold.rloss_zero;
    fj["nuisance_ids"] = fold.nuisance_ids;
    fj["theta_ids"] = fold.theta_ids;
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  return j;
}

CausalForecaster ForecasterFromJson(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "orthocast-forecaster") {
      throw DataError("not a forecaster artifact");
    }
    const int version = j.at("version").get<int>();
    if (version != kForecasterVersion) {
      throw DataError("unsupported forecaster version " + std::to_string(version));
    }
    const EncodingKind encoding = ParseEncoding(j.at("encoding").get<std::string>());
    const int d = j.at("d").get<int>();
    const FeatureDims dims{j.at("p_s").get<int>(), j.at("p_x").get<int>()};
    const FeaturizerConfig featurizer = FeaturizerConfigFromJson(j.at("featurizer"));
    std::vector<ForecasterFold> folds;
    for (const Json& fj : j.at("folds")) {
      ForecasterFold fold;
      fold.nuisance.featurizer = featurizer;
      fold.nuisance.stats = FeatureStatsFromJson(fj.at("stats"));
      fold.nuisance.m = ModelFromJson(fj.at("m"));
      fold.nuisance.e = ModelFromJson(fj.at("e"));
      fold.theta = ModelFromJson(fj.at("theta"));
      fold.rloss = fj.value("rloss", 0.0);
      fold.rloss_zero = fj.value("rloss_zero", 0.0);
      fold.nuisance_ids =
          fj.value("nuisance_ids", std::vector<std::string>{});
      fold.theta_ids = fj.value("theta_ids", std::vector<std::string>{});
      folds.push_back(std::move(fold));
    }
    if (folds.empty()) throw DataError("forecaster artifact has no folds");
    return CausalForecaster(encoding, d, dims, featurizer, std::move(folds));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("forecaster artifact: ") + e.what());
  }
}

}  // namespace orthocast

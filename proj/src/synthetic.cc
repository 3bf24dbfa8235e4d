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

#include "orthocast/synthetic.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orthocast/encoding.h"
#include "orthocast/errors.h"

namespace orthocast {
namespace {

using Json = nlohmann::ordered_json;

std::mt19937_64 SeriesRng(uint64_t seed, uint64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index),
                    static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd Normals(int n, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Eigen::VectorXd UnitDirection(int n, std::mt19937_64& rng) {
  Eigen::VectorXd v = Normals(n, 1.0, rng);
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

double Projection(const Eigen::VectorXd& dir, const ContextView& w) {
  double p = 0.0;
  const Eigen::Index ps = w.s.size();
  for (Eigen::Index i = 0; i < ps; ++i) p += dir[i] * w.s[i];
  for (Eigen::Index i = 0; i < w.x.size(); ++i) p += dir[ps + i] * w.x[i];
  return p;
}

// Index in [0, p.size()) drawn from probabilities p.
int SampleCategory(const Eigen::VectorXd& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng) * p.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (Eigen::Index i = p.size() - 1; i >= 0; --i) {
    if (p[i] > 0) return static_cast<int>(i);
  }
  return 0;
}

template <typename T>
void Read(const Json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace

std::string ThetaFormName(ThetaForm form) {
  switch (form) {
    case ThetaForm::kConstantVector:
      return "constant_vector";
    case ThetaForm::kSmoothOfW:
      return "smooth_of_W";
    case ThetaForm::kMonotoneDecreasing:
      return "monotone_decreasing";
  }
  return "";
}

ThetaForm ParseThetaForm(const std::string& name) {
  if (name == "constant_vector") return ThetaForm::kConstantVector;
  if (name == "smooth_of_W" || name == "smooth_of_w") return ThetaForm::kSmoothOfW;
  if (name == "monotone_decreasing") return ThetaForm::kMonotoneDecreasing;
  throw ConfigError("synth.theta_form: unknown value '" + name + "'");
}

void SynthConfig::Validate() const {
  if (n_series < 1) throw ConfigError("synth.n_series must be >= 1");
  if (L < 2) throw ConfigError("synth.L must be >= 2");
  if (tau < 1 || tau >= L) {
    throw ConfigError("synth.tau must satisfy 1 <= tau < L (tau=" +
                      std::to_string(tau) + ", L=" + std::to_string(L) + ")");
  }
  if (d < 2) throw ConfigError("synth.d must be >= 2");
  if (p_s < 0 || p_x < 0) throw ConfigError("synth.p_s and synth.p_x must be >= 0");
  if (!(confounding_strength >= 0.0) || !std::isfinite(confounding_strength)) {
    throw ConfigError("synth.confounding_strength must be finite and >= 0");
  }
  if (!(noise_y >= 0.0)) throw ConfigError("synth.noise_y must be >= 0");
  if (!(ar_coeff > -1.0 && ar_coeff < 1.0)) {
    throw ConfigError("synth.ar_coeff must lie in (-1, 1)");
  }
  if (min_side < 1) throw ConfigError("synth.min_side must be >= 1");
  if (!(switch_prob > 0.0 && switch_prob <= 1.0)) {
    throw ConfigError("synth.switch_prob must lie in (0, 1]");
  }
  if (n_groups < 1) throw ConfigError("synth.n_groups must be >= 1");
}

Json SynthConfigToJson(const SynthConfig& c) {
  Json j;
  j["n_series"] = c.n_series;
  j["L"] = c.L;
  j["tau"] = c.tau;
  j["d"] = c.d;
  j["p_s"] = c.p_s;
  j["p_x"] = c.p_x;
  j["encoding"] = std::string(EncodingName(c.encoding));
  j["theta_form"] = ThetaFormName(c.theta_form);
  j["confounding_strength"] = c.confounding_strength;
  j["noise_y"] = c.noise_y;
  j["ar_coeff"] = c.ar_coeff;
  j["effect_scale"] = c.effect_scale;
  j["nonlinearity"] = c.nonlinearity;
  j["weekday_effect"] = c.weekday_effect;
  j["weekday_trend"] = c.weekday_trend;
  j["rdd_step_mode"] = c.rdd_step_mode;
  j["min_side"] = c.min_side;
  j["switch_prob"] = c.switch_prob;
  j["deterministic_treatment"] = c.deterministic_treatment;
  j["n_groups"] = c.n_groups;
  j["structural_seed"] = c.structural_seed;
  j["seed"] = c.seed;
  return j;
}

SynthConfig SynthConfigFromJson(const Json& j, const SynthConfig& defaults) {
  if (!j.is_object()) throw ConfigError("synth section must be an object");
  SynthConfig c = defaults;
  try {
    Read(j, "n_series", &c.n_series);
    Read(j, "L", &c.L);
    Read(j, "tau", &c.tau);
    Read(j, "d", &c.d);
    Read(j, "p_s", &c.p_s);
    Read(j, "p_x", &c.p_x);
    if (j.contains("encoding")) {
      c.encoding = ParseEncoding(j.at("encoding").get<std::string>());
    }
    if (j.contains("theta_form")) {
      c.theta_form = ParseThetaForm(j.at("theta_form").get<std::string>());
    }
    Read(j, "confounding_strength", &c.confounding_strength);
    Read(j, "noise_y", &c.noise_y);
    Read(j, "ar_coeff", &c.ar_coeff);
    Read(j, "effect_scale", &c.effect_scale);
    Read(j, "nonlinearity", &c.nonlinearity);
    Read(j, "weekday_effect", &c.weekday_effect);
    Read(j, "weekday_trend", &c.weekday_trend);
    Read(j, "rdd_step_mode", &c.rdd_step_mode);
    Read(j, "min_side", &c.min_side);
    Read(j, "switch_prob", &c.switch_prob);
    Read(j, "deterministic_treatment", &c.deterministic_treatment);
    Read(j, "n_groups", &c.n_groups);
    Read(j, "structural_seed", &c.structural_seed);
    Read(j, "seed", &c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }
  return c;
}

StructuralParams DrawStructuralParams(const SynthConfig& cfg) {
  std::mt19937_64 rng = SeriesRng(cfg.structural_seed, 0x5eedULL);
  StructuralParams p;
  p.a_s = Normals(cfg.p_s, 0.5, rng);
  p.a_x = Normals(cfg.p_x, 0.5, rng);
  p.a_lag = Normals(cfg.p_x, 0.25, rng);
  p.u = UnitDirection(cfg.p_s + cfg.p_x, rng);
  p.v = UnitDirection(cfg.p_s + cfg.p_x, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  p.mu_const = Eigen::VectorXd::Zero(cfg.d);
  for (int i = 1; i < cfg.d; ++i) {
    p.mu_const[i] = p.mu_const[i - 1] - cfg.effect_scale * (0.5 + unif(rng));
  }
  p.weekday_level = Normals(7, 1.0, rng);
  p.weekday_level.array() -= p.weekday_level.mean();

  // Approximate standard deviation of f0 under the stationary design; only
  // its order of magnitude matters for the demand score.
  double var = p.a_s.squaredNorm() + p.a_x.squaredNorm() +
               p.a_lag.squaredNorm() + 2.0 * cfg.ar_coeff * p.a_x.dot(p.a_lag) +
               0.6 * cfg.nonlinearity * cfg.nonlinearity +
               cfg.weekday_effect * cfg.weekday_effect *
                   p.weekday_level.squaredNorm() / 7.0;
  p.f0_scale = std::sqrt(std::max(var, 1e-12));
  if (var < 1e-12) p.f0_scale = 1.0;
  return p;
}

Oracle::Oracle(SynthConfig cfg, StructuralParams params,
               std::shared_ptr<const Dataset> data)
    : cfg_(std::move(cfg)), params_(std::move(params)), data_(std::move(data)) {}

void Oracle::CheckIndex(int series, int t) const {
  if (series < 0 || series >= static_cast<int>(data_->size())) {
    throw ConfigError("oracle: series index " + std::to_string(series) +
                      " out of range");
  }
  const int L = data_->series[series].length();
  if (t < 1 || t > L) {
    throw ConfigError("oracle: step " + std::to_string(t) + " out of range [1, " +
                      std::to_string(L) + "]");
  }
}

ContextView Oracle::Context(int series, int t) const {
  CheckIndex(series, t);
  const TimeSeries& s = data_->series[series];
  ContextView w;
  w.s = Eigen::Map<const Eigen::VectorXd>(s.static_features.data(),
                                          s.static_features.size());
  w.x = s.x(t).transpose();
  w.x_prev = t > 1 ? Eigen::VectorXd(s.x(t - 1).transpose())
                   : Eigen::VectorXd::Zero(w.x.size());
  w.weekday = s.has_weekday() ? s.weekday_at(t) : 0;
  w.t = t;
  w.L = s.length();
  return w;
}

Eigen::VectorXd Oracle::LevelEffects(const ContextView& w) const {
  const int d = cfg_.d;
  double beta = 0.0;
  switch (cfg_.theta_form) {
    case ThetaForm::kConstantVector:
      if (cfg_.encoding != EncodingKind::kLinear) return params_.mu_const;
      beta = -cfg_.effect_scale;
      break;
    case ThetaForm::kSmoothOfW:
      beta = cfg_.effect_scale * (std::tanh(2.0 * Projection(params_.v, w)) - 0.25);
      break;
    case ThetaForm::kMonotoneDecreasing:
      beta = -cfg_.effect_scale * (1.0 + 0.5 * std::tanh(Projection(params_.v, w)));
      break;
  }
  Eigen::VectorXd mu(d);
  const int offset = cfg_.encoding == EncodingKind::kLinear ? 0 : 1;
  for (int i = 1; i <= d; ++i) mu[i - 1] = (i - offset) * beta;
  return mu;
}

Eigen::VectorXd Oracle::Theta0(const ContextView& w) const {
  const Eigen::VectorXd mu = LevelEffects(w);
  switch (cfg_.encoding) {
    case EncodingKind::kOneHot:
      return mu;
    case EncodingKind::kCumulative: {
      Eigen::VectorXd theta(mu.size());
      theta[0] = mu[0];
      for (Eigen::Index i = 1; i < mu.size(); ++i) theta[i] = mu[i] - mu[i - 1];
      return theta;
    }
    case EncodingKind::kLinear:
      return Eigen::VectorXd::Constant(1, mu[0]);
  }
  return mu;
}

double Oracle::F0(const ContextView& w) const {
  double f = 1.0 + params_.a_s.dot(w.s) + params_.a_x.dot(w.x) +
             params_.a_lag.dot(w.x_prev) +
             cfg_.nonlinearity * std::tanh(2.0 * Projection(params_.u, w));
  if (w.weekday >= 1) {
    const double level = params_.weekday_level[w.weekday - 1];
    f += cfg_.weekday_effect * level +
         cfg_.weekday_trend * level * static_cast<double>(w.t) / w.L;
  }
  return f;
}

Eigen::VectorXd Oracle::Propensity(const ContextView& w) const {
  const int d = cfg_.d;
  const double z = (F0(w) - 1.0) / params_.f0_scale;
  Eigen::VectorXd logits(d);
  for (int i = 1; i <= d; ++i) {
    const double c = (i - 0.5 * (d + 1)) / (0.5 * (d - 1));
    logits[i - 1] = 2.0 * cfg_.confounding_strength * z * c;
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
  if (cfg_.deterministic_treatment) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    p[best] = 1.0;
    return p;
  }
  p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

Eigen::VectorXd Oracle::E0(const ContextView& w) const {
  const Eigen::VectorXd p = Propensity(w);
  const int d = cfg_.d;
  switch (cfg_.encoding) {
    case EncodingKind::kOneHot:
      return p;
    case EncodingKind::kCumulative: {
      Eigen::VectorXd e(d);
      double tail = 0.0;
      for (int i = d - 1; i >= 0; --i) {
        tail += p[i];
        e[i] = tail;
      }
      return e;
    }
    case EncodingKind::kLinear: {
      double mean = 0.0;
      for (int i = 0; i < d; ++i) mean += (i + 1) * p[i];
      return Eigen::VectorXd::Constant(1, mean);
    }
  }
  return p;
}

double Oracle::M0(const ContextView& w) const {
  return F0(w) + E0(w).dot(Theta0(w));
}

double Oracle::Cate(int series, int t, Treatment from, Treatment to) const {
  const Eigen::VectorXd theta = Theta0(Context(series, t));
  if (IsCategorical(cfg_.encoding)) {
    for (Treatment v : {from, to}) {
      if (v != std::floor(v) || v < 1 || v > cfg_.d) {
        throw ConfigError("oracle: treatment index out of range");
      }
    }
  }
  return CateFromTheta(AsSpan(theta), from, to, cfg_.encoding);
}

double Oracle::Cate(const std::string& series_id, int t, Treatment from,
                    Treatment to) const {
  const int idx = data_->FindSeries(series_id);
  if (idx < 0) throw ConfigError("oracle: unknown series '" + series_id + "'");
  return Cate(idx, t, from, to);
}

std::pair<double, Eigen::VectorXd> Oracle::Nuisance(int series, int t) const {
  const ContextView w = Context(series, t);
  return {M0(w), E0(w)};
}

std::pair<Treatment, double> Oracle::Draw(int series, int t,
                                          std::mt19937_64& rng) const {
  return Draw(Context(series, t), rng);
}

std::pair<Treatment, double> Oracle::Draw(const ContextView& w,
                                          std::mt19937_64& rng) const {
  const int idx = SampleCategory(Propensity(w), rng);
  const Treatment treatment = idx + 1;
  std::normal_distribution<double> noise(0.0, 1.0);
  // enc(T) . theta0 equals the level effect of T in every encoding.
  const double y = F0(w) + LevelEffects(w)[idx] + cfg_.noise_y * noise(rng);
  return {treatment, y};
}

SyntheticData Generate(const SynthConfig& cfg) {
  cfg.Validate();
  StructuralParams params = DrawStructuralParams(cfg);
  auto data = std::make_shared<Dataset>();
  data->d = cfg.d;
  data->encoding = cfg.encoding;
  data->dims = {cfg.p_s, cfg.p_x};
  data->series.resize(cfg.n_series);

  // The oracle reads series through `data`, so each series is filled in
  // before its treatments and outcomes are drawn.
  Oracle oracle(cfg, params, data);
  const double innov = std::sqrt(1.0 - cfg.ar_coeff * cfg.ar_coeff);
  for (int n = 0; n < cfg.n_series; ++n) {
    std::mt19937_64 rng = SeriesRng(cfg.seed, static_cast<uint64_t>(n));
    std::normal_distribution<double> normal(0.0, 1.0);
    TimeSeries& s = data->series[n];
    s.id = "s" + std::to_string(n);
    s.group = "g" + std::to_string(n % cfg.n_groups);
    s.tau = cfg.tau;
    s.static_features.resize(cfg.p_s);
    for (double& v : s.static_features) v = normal(rng);
    const int start_day = std::uniform_int_distribution<int>(0, 6)(rng);
    s.weekday.resize(cfg.L);
    for (int t = 1; t <= cfg.L; ++t) s.weekday[t - 1] = (start_day + t - 1) % 7 + 1;
    s.temporal_features.resize(cfg.L, cfg.p_x);
    for (int t = 0; t < cfg.L; ++t) {
      for (int k = 0; k < cfg.p_x; ++k) {
        const double eps = normal(rng);
        s.temporal_features(t, k) =
            t == 0 ? eps : cfg.ar_coeff * s.temporal_features(t - 1, k) + innov * eps;
      }
    }
    s.treatments.assign(cfg.L, 0.0);
    s.outcomes.assign(cfg.L, 0.0);

    std::geometric_distribution<int> run_extra(cfg.switch_prob);
    int run_left = 0;
    int current = -1;
    for (int t = 1; t <= cfg.L; ++t) {
      const ContextView w = oracle.Context(n, t);
      int idx = 0;
      if (!cfg.rdd_step_mode) {
        idx = SampleCategory(oracle.Propensity(w), rng);
      } else if (run_left > 0) {
        idx = current;
      } else {
        Eigen::VectorXd p = oracle.Propensity(w);
        if (current >= 0) {
          p[current] = 0.0;
          if (p.sum() <= 0.0) {
            p.setConstant(1.0);
            p[current] = 0.0;
          }
        }
        idx = SampleCategory(p, rng);
        run_left = cfg.min_side + 1 + run_extra(rng);
      }
      if (cfg.rdd_step_mode) --run_left;
      current = idx;
      const Treatment treatment = idx + 1;
      s.treatments[t - 1] = treatment;
      s.outcomes[t - 1] =
          oracle.F0(w) + oracle.LevelEffects(w)[idx] + cfg.noise_y * normal(rng);
    }
  }
  return {*data, std::move(oracle)};
}

TimeSeries InjectStepSeries(double jump, int t_i, int L, double slope,
                            double sigma, uint64_t seed) {
  if (L < 3 || t_i <= 1 || t_i >= L) {
    throw ConfigError("inject_step_series: t_i must satisfy 1 < t_i < L");
  }
  if (!(sigma >= 0.0)) throw ConfigError("inject_step_series: sigma must be >= 0");
  std::mt19937_64 rng = SeriesRng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  TimeSeries s;
  s.id = "step";
  s.tau = 1;
  s.temporal_features.resize(L, 0);
  s.treatments.resize(L);
  s.outcomes.resize(L);
  for (int t = 1; t <= L; ++t) {
    s.treatments[t - 1] = t <= t_i ? 1.0 : 2.0;
    double y = slope * t + (t > t_i ? jump : 0.0);
    if (sigma > 0.0) y += sigma * normal(rng);
    s.outcomes[t - 1] = y;
  }
  return s;
}

}  // namespace orthocast

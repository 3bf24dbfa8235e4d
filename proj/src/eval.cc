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

#include "orthocast/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "orthocast/dataset_io.h"
#include "orthocast/encoding.h"
#include "orthocast/errors.h"
#include "orthocast/parallel.h"

namespace orthocast {
namespace {

using Json = nlohmann::ordered_json;

Eigen::VectorXd ContextVector(const ContextView& w) {
  Eigen::VectorXd v(w.s.size() + w.x.size());
  v << w.s, w.x;
  return v;
}

Eigen::MatrixXd NormalizeMatrix(const Eigen::MatrixXd& raw,
                                const FeaturizerConfig& cfg,
                                const FeatureStats& stats) {
  if (!cfg.normalize) return raw;
  if (static_cast<Eigen::Index>(stats.size()) != raw.cols()) {
    throw ConfigError("direct baseline: feature dimension mismatch");
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    if (stats.scale[k] > 0.0) {
      out.col(k) = (raw.col(k).array() - stats.mean[k]) / stats.scale[k];
    } else {
      out.col(k).setZero();
    }
  }
  return out;
}

Eigen::MatrixXd DirectDesign(const Eigen::MatrixXd& x,
                             std::span<const Treatment> treatments,
                             EncodingKind encoding, int d, bool interactions) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const int k = EncodedDimension(encoding, d);
  Eigen::MatrixXd out(n, p + k + (interactions ? k * p : 0));
  out.leftCols(p) = x;
  Eigen::VectorXd enc(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    EncodeTreatmentInto(treatments[i], d, encoding, enc);
    out.row(i).segment(p, k) = enc.transpose();
    if (interactions) {
      for (int j = 0; j < k; ++j) {
        out.row(i).segment(p + k + j * p, p) = enc[j] * x.row(i);
      }
    }
  }
  return out;
}

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double StandardError(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = MeanOf(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) /
         std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

ForecastMetrics ComputeForecastMetrics(std::span<const double> predictions,
                                       std::span<const double> truth) {
  if (predictions.size() != truth.size()) {
    throw ConfigError("forecast_metrics: length mismatch (" +
                      std::to_string(predictions.size()) + " vs " +
                      std::to_string(truth.size()) + ")");
  }
  if (predictions.empty()) throw ConfigError("forecast_metrics: empty input");
  std::vector<double> se(truth.size()), ae(truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    const double e = predictions[i] - truth[i];
    se[i] = e * e;
    ae[i] = std::abs(e);
  }
  const double n = static_cast<double>(truth.size());
  return {std::sqrt(OrderFreeSum(std::move(se)) / n), OrderFreeSum(std::move(ae)) / n};
}

Eigen::VectorXd DirectBaseline::Predict(
    const Eigen::MatrixXd& raw, std::span<const Treatment> treatments) const {
  if (static_cast<Eigen::Index>(treatments.size()) != raw.rows()) {
    throw ConfigError("direct baseline: one treatment per row expected");
  }
  const Eigen::MatrixXd x = NormalizeMatrix(raw, featurizer, stats);
  return model.Predict(DirectDesign(x, treatments, encoding, d, interactions))
      .col(0);
}

double DirectBaseline::Predict(std::span<const double> raw,
                               Treatment treatment) const {
  const Eigen::MatrixXd row = Eigen::Map<const Eigen::MatrixXd>(
      raw.data(), 1, static_cast<Eigen::Index>(raw.size()));
  return Predict(row, std::span<const Treatment>(&treatment, 1))[0];
}

DirectBaseline FitDirectBaseline(const Dataset& ds, const LearnerSpec& spec,
                                 const FeaturizerConfig& featurizer,
                                 bool interactions) {
  if (ds.empty()) throw ConfigError("fit_direct_baseline: empty dataset");
  featurizer.Validate();
  DirectBaseline b;
  b.featurizer = featurizer;
  b.encoding = ds.encoding;
  b.d = ds.d;
  b.interactions = interactions;
  b.stats = ComputeFeatureStats(ds, featurizer);
  const FeatureMatrix fm = FeaturizeDataset(ds, featurizer, b.stats);
  if (fm.x.rows() == 0) throw ConfigError("fit_direct_baseline: no forecast steps");
  std::vector<Treatment> treatments;
  Eigen::MatrixXd y(fm.x.rows(), 1);
  treatments.reserve(fm.refs.size());
  for (size_t i = 0; i < fm.refs.size(); ++i) {
    const TimeSeries& s = ds.series[fm.refs[i].series];
    treatments.push_back(s.treatment(fm.refs[i].t));
    y(static_cast<Eigen::Index>(i), 0) = s.y(fm.refs[i].t);
  }
  LearnerSpec model_spec = spec;
  model_spec.output_dim = 1;
  model_spec.loss = LossKind::kMse;
  b.model = Fit(DirectDesign(fm.x, treatments, ds.encoding, ds.d, interactions),
                TrainingTargets::Supervised(std::move(y)), model_spec);
  return b;
}

double DirectCate(const DirectBaseline& model, std::span<const double> raw,
                  Treatment from, Treatment to) {
  const Eigen::MatrixXd row = Eigen::Map<const Eigen::MatrixXd>(
      raw.data(), 1, static_cast<Eigen::Index>(raw.size()));
  Eigen::MatrixXd rows(2, row.cols());
  rows << row, row;
  const Treatment t[2] = {from, to};
  const Eigen::VectorXd p = model.Predict(rows, t);
  return p[1] - p[0];
}

Json DirectBaselineToJson(const DirectBaseline& b) {
  Json j;
  j["format"] = "orthocast-direct";
  j["version"] = 1;
  j["encoding"] = std::string(EncodingName(b.encoding));
  j["d"] = b.d;
  j["interactions"] = b.interactions;
  j["featurizer"] = FeaturizerConfigToJson(b.featurizer);
  j["stats"] = FeatureStatsToJson(b.stats);
  j["model"] = ModelToJson(b.model);
  return j;
}

DirectBaseline DirectBaselineFromJson(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "orthocast-direct") {
      throw DataError("not a direct baseline artifact");
    }
    DirectBaseline b;
    b.encoding = ParseEncoding(j.at("encoding").get<std::string>());
    b.d = j.at("d").get<int>();
    b.interactions = j.at("interactions").get<bool>();
    b.featurizer = FeaturizerConfigFromJson(j.at("featurizer"));
    b.stats = FeatureStatsFromJson(j.at("stats"));
    b.model = ModelFromJson(j.at("model"));
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("direct baseline artifact: ") + e.what());
  }
}

double DirectionPair::Dm(const ContextView& w) const {
  if (m_proj.size() == 0) return scale * m_offset;
  return scale * (m_offset + 0.5 * std::tanh(m_proj.dot(ContextVector(w))));
}

Eigen::VectorXd DirectionPair::De(const ContextView& w) const {
  Eigen::VectorXd out = e_offset;
  if (e_proj.cols() > 0) {
    out.array() += 0.5 * (e_proj * ContextVector(w)).array().tanh();
  }
  return scale * out;
}

Eigen::VectorXd DirectionPair::Dtheta(const ContextView& w) const {
  Eigen::VectorXd out = theta_offset;
  if (theta_proj.cols() > 0) {
    out.array() += 0.5 * (theta_proj * ContextVector(w)).array().tanh();
  }
  return scale * out;
}

DirectionPair RandomDirections(const Oracle& oracle, std::mt19937_64& rng) {
  const int p = oracle.config().p_s + oracle.config().p_x;
  const int k = EncodedDimension(oracle.encoding(), oracle.d());
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(std::max(p, 1)));
  std::uniform_real_distribution<double> unif(0.5, 1.0);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
  DirectionPair dir;
  dir.m_offset = sign * unif(rng);
  dir.m_proj.resize(p);
  for (int j = 0; j < p; ++j) dir.m_proj[j] = normal(rng);
  dir.e_offset.resize(k);
  dir.e_proj.resize(k, p);
  dir.theta_offset.resize(k);
  dir.theta_proj.resize(k, p);
  for (int i = 0; i < k; ++i) {
    dir.e_offset[i] = small(rng);
    dir.theta_offset[i] = sign * unif(rng);
    for (int j = 0; j < p; ++j) {
      dir.e_proj(i, j) = normal(rng);
      dir.theta_proj(i, j) = normal(rng);
    }
  }
  return dir;
}

DirectionPair ZeroDirections(const Oracle& oracle) {
  const int p = oracle.config().p_s + oracle.config().p_x;
  const int k = EncodedDimension(oracle.encoding(), oracle.d());
  DirectionPair dir;
  dir.scale = 0.0;
  dir.m_proj = Eigen::VectorXd::Zero(p);
  dir.e_offset = Eigen::VectorXd::Zero(k);
  dir.e_proj = Eigen::MatrixXd::Zero(k, p);
  dir.theta_offset = Eigen::VectorXd::Zero(k);
  dir.theta_proj = Eigen::MatrixXd::Zero(k, p);
  return dir;
}

OrthogonalityResult OrthogonalityCheck(const Oracle& oracle, int n_samples,
                                       const DirectionPair& directions,
                                       double fd_step, uint64_t seed,
                                       CheckedLoss loss) {
  if (n_samples < 2) throw ConfigError("orthogonality_check: n_samples must be >= 2");
  if (!(fd_step > 0.0)) throw ConfigError("orthogonality_check: fd_step must be > 0");
  const Dataset& data = oracle.data();
  const int tau = oracle.config().tau;
  const int L = oracle.config().L;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_series(0, static_cast<int>(data.size()) - 1);
  std::uniform_int_distribution<int> pick_t(tau + 1, L);

  std::vector<double> coarse(n_samples), fine(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const int series = pick_series(rng);
    const int t = pick_t(rng);
    const ContextView w = oracle.Context(series, t);
    const auto [treatment, y] = oracle.Draw(w, rng);
    const Eigen::VectorXd enc =
        EncodeTreatment(treatment, oracle.d(), oracle.encoding());
    const Eigen::VectorXd theta0 = oracle.Theta0(w);
    const Eigen::VectorXd dtheta = directions.Dtheta(w);
    const double dm = directions.Dm(w);
    double base = 0.0;
    Eigen::VectorXd resid_t = enc;
    Eigen::VectorXd de = Eigen::VectorXd::Zero(enc.size());
    if (loss == CheckedLoss::kRLoss) {
      base = oracle.M0(w);
      resid_t = enc - oracle.E0(w);
      de = directions.De(w);
    } else {
      base = oracle.F0(w);
    }
    auto l = [&](double s, double r) {
      const double v = y - (base + r * dm) -
                       (resid_t - r * de).dot(theta0 + s * dtheta);
      return v * v;
    };
    auto cross = [&](double h) {
      return (l(h, h) - l(h, -h) - l(-h, h) + l(-h, -h)) / (4.0 * h * h);
    };
    coarse[i] = cross(fd_step);
    fine[i] = cross(0.5 * fd_step);
  }
  OrthogonalityResult out;
  const double mc = MeanOf(coarse);
  const double mf = MeanOf(fine);
  const double se = StandardError(coarse) ;
  const std::vector<double>* used = &coarse;
  std::vector<double> rich;
  if (std::abs(mc - mf) > 1e-6 * (std::abs(mc) + se) + 1e-10) {
    rich.resize(n_samples);
    for (int i = 0; i < n_samples; ++i) rich[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    used = &rich;
    out.richardson = true;
  }
  out.estimate = MeanOf(*used);
  out.standard_error = StandardError(*used);
  return out;
}

HessianCheckResult RLossHessianCheck(const Eigen::VectorXd& zeta, double fd_step,
                                     uint64_t seed) {
  if (!zeta.allFinite()) throw ConfigError("rloss_hessian_check: zeta must be finite");
  const Eigen::Index d = zeta.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd treat(d), gamma(d + 1);
  for (Eigen::Index i = 0; i < d; ++i) treat[i] = normal(rng);
  for (Eigen::Index i = 0; i <= d; ++i) gamma[i] = normal(rng);
  const double y = gamma[0] + (treat - gamma.tail(d)).dot(zeta) + 0.1 * normal(rng);
  auto l = [&](const Eigen::VectorXd& g) {
    const double r = y - g[0] - (treat - g.tail(d)).dot(zeta);
    return r * r;
  };
  const double h = fd_step;
  Eigen::MatrixXd hess(d + 1, d + 1);
  for (Eigen::Index i = 0; i <= d; ++i) {
    for (Eigen::Index j = i; j <= d; ++j) {
      Eigen::VectorXd pp = gamma, pm = gamma, mp = gamma, mm = gamma;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      hess(i, j) = hess(j, i) = (l(pp) - l(pm) - l(mp) + l(mm)) / (4.0 * h * h);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hess);
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    mags.push_back(std::abs(solver.eigenvalues()[i]));
  }
  std::sort(mags.rbegin(), mags.rend());
  HessianCheckResult out;
  out.analytic = 2.0 * (1.0 + zeta.squaredNorm());
  out.fd_top = solver.eigenvalues().maxCoeff();
  out.second_abs = mags.size() > 1 ? mags[1] : 0.0;
  return out;
}

double OracleCateRmse(const Oracle& oracle, const ContextCatePredictor& predictor,
                      int n_contexts, uint64_t seed) {
  if (n_contexts < 1) throw ConfigError("oracle_cate_rmse: n_contexts must be >= 1");
  const Dataset& data = oracle.data();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_series(0, static_cast<int>(data.size()) - 1);
  double se = 0.0;
  long n = 0;
  for (int c = 0; c < n_contexts; ++c) {
    const int series = pick_series(rng);
    const TimeSeries& s = data.series[series];
    const int t = std::uniform_int_distribution<int>(s.tau + 1, s.length())(rng);
    for (int i = 1; i < oracle.d(); ++i) {
      const double err = predictor(series, t, i, i + 1) - oracle.Cate(series, t, i, i + 1);
      se += err * err;
      ++n;
    }
  }
  return std::sqrt(se / static_cast<double>(n));
}

CateHistogram ComputeCateHistogram(const ContextCatePredictor& predictor,
                                   const Dataset& ds, bool per_unit,
                                   std::vector<double> edges) {
  if (ds.d < 2) throw ConfigError("cate_histogram: requires d >= 2");
  CateHistogram h;
  std::vector<double> values;
  for (size_t n = 0; n < ds.size(); ++n) {
    const TimeSeries& s = ds.series[n];
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      const Treatment from = s.treatment(t);
      const double idx = std::round(from);
      if (idx >= ds.d) {
        ++h.n_skipped;
        continue;
      }
      const Treatment to = idx + 1;
      double v = predictor(static_cast<int>(n), t, from, to);
      if (per_unit) v /= (to - from);
      values.push_back(v);
    }
  }
  h.n_values = static_cast<long>(values.size());
  long positive = 0;
  for (double v : values) positive += v > 0.0;
  h.positive_fraction = values.empty() ? 0.0 : static_cast<double>(positive) / values.size();
  if (edges.empty()) {
    double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
    double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
    if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    constexpr int kBins = 40;
    for (int b = 0; b <= kBins; ++b) edges.push_back(lo + (hi - lo) * b / kBins);
  }
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
    throw ConfigError("cate_histogram: bin edges must be increasing");
  }
  h.edges = edges;
  h.counts.assign(edges.size() - 1, 0);
  for (double v : values) {
    if (v < edges.front() || v > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    size_t bin = static_cast<size_t>(it - edges.begin());
    bin = bin == 0 ? 0 : bin - 1;
    if (bin >= h.counts.size()) bin = h.counts.size() - 1;
    ++h.counts[bin];
  }
  return h;
}

void WriteHistogramCsv(const CateHistogram& h, std::ostream& out) {
  out << "bin_left,bin_right,count\n";
  for (size_t b = 0; b < h.counts.size(); ++b) {
    out << FormatDouble(h.edges[b]) << ',' << FormatDouble(h.edges[b + 1]) << ','
        << h.counts[b] << '\n';
  }
}

void WriteHistogramSvg(const CateHistogram& h, const std::string& title,
                       std::ostream& out) {
  constexpr double kWidth = 640, kHeight = 320, kMargin = 40;
  const long top = h.counts.empty() ? 1
                                    : std::max<long>(1, *std::max_element(
                                                            h.counts.begin(), h.counts.end()));
  const double bar_w = (kWidth - 2 * kMargin) / std::max<size_t>(1, h.counts.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  out << "<text x=\"" << kMargin << "\" y=\"24\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << title << " (positive: " << std::fixed
      << std::setprecision(1) << 100.0 * h.positive_fraction << "%)</text>\n";
  out << std::setprecision(2);
  for (size_t b = 0; b < h.counts.size(); ++b) {
    const double bh = (kHeight - 2 * kMargin) * h.counts[b] / static_cast<double>(top);
    const bool positive = h.edges[b] >= 0.0;
    out << "<rect x=\"" << kMargin + b * bar_w << "\" y=\""
        << kHeight - kMargin - bh << "\" width=\"" << bar_w * 0.9
        << "\" height=\"" << bh << "\" fill=\""
        << (positive ? "#c0392b" : "#2e86c1") << "\"/>\n";
  }
  if (!h.edges.empty() && h.edges.front() < 0.0 && h.edges.back() > 0.0) {
    const double x0 = kMargin + (kWidth - 2 * kMargin) * (-h.edges.front()) /
                                    (h.edges.back() - h.edges.front());
    out << "<line x1=\"" << x0 << "\" y1=\"" << kMargin << "\" x2=\"" << x0
        << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  }
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - 12
      << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << (h.edges.empty() ? 0.0 : h.edges.front()) << "</text>\n";
  out << "<text x=\"" << kWidth - kMargin - 30 << "\" y=\"" << kHeight - 12
      << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << (h.edges.empty() ? 0.0 : h.edges.back()) << "</text>\n";
  out << "</svg>\n";
  out.unsetf(std::ios::floatfield);
}

std::string MetricsCsvHeader() {
  return "model_tag,rmse,mae,rdd_rmse,rdd_mae,oracle_cate_rmse,n_points,n_entries";
}

std::string MetricsCsvRow(const MetricsReport& r) {
  std::ostringstream os;
  os << r.model_tag << ',' << FormatDouble(r.rmse) << ',' << FormatDouble(r.mae)
     << ',' << FormatDouble(r.rdd_rmse) << ',' << FormatDouble(r.rdd_mae) << ','
     << (r.oracle_cate_rmse ? FormatDouble(*r.oracle_cate_rmse) : std::string())
     << ',' << r.n_points << ',' << r.n_entries;
  return os.str();
}

std::string MetricsText(const MetricsReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "model: " << r.model_tag << "\n"
     << "  forecast  rmse " << r.rmse << "  mae " << r.mae << "  (n=" << r.n_points
     << ")\n"
     << "  causal    rdd_rmse " << r.rdd_rmse << "  rdd_mae " << r.rdd_mae
     << "  (entries=" << r.n_entries << ")\n";
  if (r.oracle_cate_rmse) os << "  oracle    cate_rmse " << *r.oracle_cate_rmse << "\n";
  return os.str();
}

SynthConfig HeldOutConfig(const SynthConfig& cfg, int n_series) {
  SynthConfig out = cfg;
  out.n_series = n_series;
  out.seed = cfg.seed + 0x9E3779B97F4A7C15ULL;
  return out;
}

ExperimentResult RunSyntheticExperiment(const SynthConfig& cfg,
                                        const ExperimentSettings& settings,
                                        uint64_t seed) {
  SynthConfig train_cfg = cfg;
  train_cfg.seed = seed;
  const SyntheticData train = Generate(train_cfg);
  const SyntheticData test = Generate(HeldOutConfig(train_cfg, settings.n_test_series));

  PipelineConfig pipeline = settings.pipeline;
  pipeline.split_seed = seed;
  pipeline.m_spec.seed = seed * 3 + 1;
  pipeline.e_spec.seed = seed * 3 + 2;
  pipeline.theta_spec.seed = seed * 3 + 3;
  const CausalForecaster forecaster = TrainForecaster(train.dataset, pipeline);
  LearnerSpec direct_spec = settings.direct_spec;
  direct_spec.seed = seed * 3 + 4;
  const DirectBaseline direct =
      FitDirectBaseline(train.dataset, direct_spec, pipeline.featurizer,
                        settings.direct_interactions);

  const Dataset& td = test.oracle.data();
  const ContextCatePredictor orth = [&](int n, int t, Treatment a, Treatment b) {
    return forecaster.PredictCate(td.series[n], t, a, b);
  };
  const ContextCatePredictor dir = [&](int n, int t, Treatment a, Treatment b) {
    const std::vector<double> raw = RawFeatures(td.series[n], t, direct.featurizer);
    return DirectCate(direct, raw, a, b);
  };
  const ContextCatePredictor truth = [&](int n, int t, Treatment a, Treatment b) {
    return test.oracle.Cate(n, t, a, b);
  };
  ExperimentResult r;
  r.orthogonal_rmse = OracleCateRmse(test.oracle, orth, settings.n_contexts);
  r.direct_rmse = OracleCateRmse(test.oracle, dir, settings.n_contexts);
  r.orthogonal_positive = ComputeCateHistogram(orth, td, true).positive_fraction;
  r.direct_positive = ComputeCateHistogram(dir, td, true).positive_fraction;
  r.oracle_positive = ComputeCateHistogram(truth, td, true).positive_fraction;
  return r;
}

std::vector<SweepRow> ConvergenceSweep(const SynthConfig& cfg,
                                       const std::vector<int>& ns,
                                       const ExperimentSettings& settings,
                                       const std::vector<uint64_t>& seeds) {
  if (!std::is_sorted(ns.begin(), ns.end())) {
    throw ConfigError("convergence_sweep: Ns must be increasing");
  }
  if (seeds.empty()) throw ConfigError("convergence_sweep: no seeds");
  std::vector<SweepRow> rows;
  for (int n : ns) {
    SweepRow row;
    row.n_series = n;
    try {
      SynthConfig c = cfg;
      c.n_series = n;
      for (uint64_t seed : seeds) {
        const ExperimentResult r = RunSyntheticExperiment(c, settings, seed);
        row.orthogonal_runs.push_back(r.orthogonal_rmse);
        row.direct_runs.push_back(r.direct_rmse);
      }
      row.orthogonal_rmse = MeanOf(row.orthogonal_runs);
      row.direct_rmse = MeanOf(row.direct_runs);
      row.orthogonal_se = StandardError(row.orthogonal_runs);
      row.direct_se = StandardError(row.direct_runs);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      rows.push_back(std::move(row));
      break;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace orthocast

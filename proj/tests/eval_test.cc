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
#include <sstream>

#include "gtest/gtest.h"
#include "orthocast/encoding.h"
#include "orthocast/errors.h"
#include "orthocast/eval.h"
#include "orthocast/synthetic.h"
#include "test_util.h"

namespace orthocast {
namespace {

using ::orthocast::testing::RandomDataset;

LearnerSpec Ridge(double lambda) {
  LearnerSpec spec;
  spec.ridge_lambda = lambda;
  spec.allow_pinv = lambda == 0.0;
  return spec;
}

TEST(ForecastMetricsTest, Examples) {
  const std::vector<double> a = {1.5, -2.0, 3.0};
  const ForecastMetrics same = ComputeForecastMetrics(a, a);
  EXPECT_EQ(same.rmse, 0.0);
  EXPECT_EQ(same.mae, 0.0);
  const std::vector<double> truth = {0.0, 0.0};
  const std::vector<double> pred = {1.0, -1.0};
  const ForecastMetrics m = ComputeForecastMetrics(pred, truth);
  EXPECT_EQ(m.rmse, 1.0);
  EXPECT_EQ(m.mae, 1.0);
  EXPECT_THROW(ComputeForecastMetrics(a, truth), ConfigError);
  EXPECT_THROW(ComputeForecastMetrics({}, {}), ConfigError);
}

TEST(ForecastMetricsTest, NaiveSymmetricAndOrderFree) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(257), b(257);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    double se = 0.0, ae = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      se += (a[i] - b[i]) * (a[i] - b[i]);
      ae += std::abs(a[i] - b[i]);
    }
    const ForecastMetrics m = ComputeForecastMetrics(a, b);
    EXPECT_NEAR(m.rmse, std::sqrt(se / a.size()), 1e-12);
    EXPECT_NEAR(m.mae, ae / a.size(), 1e-12);
    const ForecastMetrics swapped = ComputeForecastMetrics(b, a);
    EXPECT_EQ(swapped.rmse, m.rmse);
    EXPECT_EQ(swapped.mae, m.mae);
    std::vector<size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pa, pb;
    for (size_t i : perm) {
      pa.push_back(a[i]);
      pb.push_back(b[i]);
    }
    const ForecastMetrics permuted = ComputeForecastMetrics(pa, pb);
    EXPECT_EQ(permuted.rmse, m.rmse);
    EXPECT_EQ(permuted.mae, m.mae);
  }
}

TEST(DirectBaselineTest, NoiseFreeLinearWorld) {
  Dataset ds = RandomDataset(60, 12, 4, 3, {2, 2}, 2);
  const Eigen::Vector3d level(0.0, 1.5, -0.75);
  for (auto& s : ds.series) {
    for (int t = 1; t <= s.length(); ++t) {
      const auto x = s.x(t);
      s.outcomes[t - 1] = 0.5 * x[0] - 2.0 * x[1] + level[static_cast<int>(s.treatment(t)) - 1] + 3.0;
    }
  }
  FeaturizerConfig fc;
  const DirectBaseline b = FitDirectBaseline(ds, Ridge(0.0), fc, false);
  std::vector<double> pred, truth;
  for (const auto& s : ds.series) {
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      pred.push_back(b.Predict(RawFeatures(s, t, fc), s.treatment(t)));
      truth.push_back(s.y(t));
    }
  }
  EXPECT_LE(ComputeForecastMetrics(pred, truth).rmse, 1e-6);
  const auto raw = RawFeatures(ds.series[0], 6, fc);
  EXPECT_NEAR(DirectCate(b, raw, 1, 2), 1.5, 1e-6);
  EXPECT_NEAR(DirectCate(b, raw, 3, 2), 2.25, 1e-6);
}

TEST(DirectBaselineTest, ConstantOutcomeAndErrors) {
  Dataset ds = RandomDataset(30, 10, 3, 2, {1, 1}, 3);
  for (auto& s : ds.series) s.outcomes.assign(s.length(), -1.25);
  const DirectBaseline b = FitDirectBaseline(ds, Ridge(1e-3), {}, true);
  for (int t = 4; t <= 10; ++t) {
    EXPECT_NEAR(b.Predict(RawFeatures(ds.series[1], t, b.featurizer), 1), -1.25, 1e-3);
  }
  EXPECT_THROW(FitDirectBaseline(ds.Subset({}), Ridge(1.0), {}, false), ConfigError);
}

TEST(DirectBaselineTest, CateDegenerateCases) {
  SynthConfig cfg;
  cfg.n_series = 80;
  const SyntheticData gen = Generate(cfg);
  DirectBaseline b = FitDirectBaseline(gen.dataset, Ridge(1.0), {}, false);
  const auto raw = RawFeatures(gen.dataset.series[3], 12, b.featurizer);
  for (int a = 1; a <= cfg.d; ++a) EXPECT_EQ(DirectCate(b, raw, a, a), 0.0);
  const int p = FeatureDimension(b.featurizer, gen.dataset.dims);
  b.model.mutable_layers().back().weight.block(0, p, 1, cfg.d).setZero();
  for (int a = 1; a <= cfg.d; ++a) {
    for (int c = 1; c <= cfg.d; ++c) EXPECT_EQ(DirectCate(b, raw, a, c), 0.0);
  }
  EXPECT_THROW(DirectCate(b, raw, 1, cfg.d + 1), ConfigError);
}

TEST(DirectBaselineTest, JsonRoundTrip) {
  SynthConfig cfg;
  cfg.n_series = 40;
  const SyntheticData gen = Generate(cfg);
  const DirectBaseline b = FitDirectBaseline(gen.dataset, Ridge(0.5), {}, true);
  const DirectBaseline r = DirectBaselineFromJson(
      nlohmann::ordered_json::parse(DirectBaselineToJson(b).dump()));
  const auto raw = RawFeatures(gen.dataset.series[0], 20, b.featurizer);
  EXPECT_EQ(r.Predict(raw, 3), b.Predict(raw, 3));
  EXPECT_EQ(DirectCate(r, raw, 2, 4), DirectCate(b, raw, 2, 4));
  EXPECT_THROW(DirectBaselineFromJson(nlohmann::ordered_json{{"format", "x"}}), DataError);
}

SyntheticData SmallWorld(int n) {
  SynthConfig cfg;
  cfg.n_series = n;
  return Generate(cfg);
}

TEST(OrthogonalityCheckTest, ZeroDirectionsExactlyZero) {
  const SyntheticData gen = SmallWorld(50);
  const DirectionPair zero = ZeroDirections(gen.oracle);
  for (CheckedLoss loss : {CheckedLoss::kRLoss, CheckedLoss::kNaive}) {
    const OrthogonalityResult r = OrthogonalityCheck(gen.oracle, 500, zero, 1e-4, 3, loss);
    EXPECT_EQ(r.estimate, 0.0);
    EXPECT_EQ(r.standard_error, 0.0);
  }
  EXPECT_THROW(OrthogonalityCheck(gen.oracle, 1, zero, 1e-4, 3), ConfigError);
  EXPECT_THROW(OrthogonalityCheck(gen.oracle, 10, zero, 0.0, 3), ConfigError);
}

TEST(OrthogonalityCheckTest, RLossOrthogonalNaiveNot) {
  const SyntheticData gen = SmallWorld(200);
  for (uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed);
    const DirectionPair dir = RandomDirections(gen.oracle, rng);
    const OrthogonalityResult r =
        OrthogonalityCheck(gen.oracle, 20000, dir, 1e-4, seed, CheckedLoss::kRLoss);
    EXPECT_LE(std::abs(r.estimate), 3.0 * r.standard_error + 1e-6);
    const OrthogonalityResult naive =
        OrthogonalityCheck(gen.oracle, 20000, dir, 1e-4, seed, CheckedLoss::kNaive);
    EXPECT_GT(std::abs(naive.estimate), 5.0 * naive.standard_error);
  }
}

TEST(OrthogonalityCheckTest, EstimateShrinksAtRootN) {
  const SyntheticData gen = SmallWorld(200);
  std::mt19937_64 rng(9);
  const DirectionPair dir = RandomDirections(gen.oracle, rng);
  const std::vector<int> ns = {500, 2000, 8000};
  std::vector<double> log_n, log_rms;
  for (int n : ns) {
    double sq = 0.0;
    constexpr int kReps = 16;
    for (int rep = 0; rep < kReps; ++rep) {
      const double e = OrthogonalityCheck(gen.oracle, n, dir, 1e-4, 100 + rep).estimate;
      sq += e * e;
    }
    log_n.push_back(std::log(n));
    log_rms.push_back(0.5 * std::log(sq / kReps));
  }
  const double mx = (log_n[0] + log_n[1] + log_n[2]) / 3.0;
  const double my = (log_rms[0] + log_rms[1] + log_rms[2]) / 3.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += (log_n[i] - mx) * (log_rms[i] - my);
    den += (log_n[i] - mx) * (log_n[i] - mx);
  }
  const double slope = num / den;
  EXPECT_GT(slope, -0.8);
  EXPECT_LT(slope, -0.25);
}

TEST(HessianCheckTest, Examples) {
  const HessianCheckResult z = RLossHessianCheck(Eigen::VectorXd::Zero(1));
  EXPECT_EQ(z.analytic, 2.0);
  EXPECT_NEAR(z.fd_top, 2.0, 2e-4);
  const HessianCheckResult two = RLossHessianCheck(Eigen::Vector2d(1.0, 1.0));
  EXPECT_EQ(two.analytic, 6.0);
  EXPECT_NEAR(two.fd_top, 6.0, 6e-4);
  EXPECT_LE(two.second_abs, 1e-6 * two.fd_top);
  Eigen::VectorXd bad(1);
  bad[0] = std::nan("");
  EXPECT_THROW(RLossHessianCheck(bad), ConfigError);
}

TEST(HessianCheckTest, RandomZetaRankOne) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 8;
    Eigen::VectorXd zeta(d);
    for (int i = 0; i < d; ++i) zeta[i] = normal(rng);
    const HessianCheckResult r = RLossHessianCheck(zeta, 1e-3, trial);
    EXPECT_LE(std::abs(r.fd_top - r.analytic), 1e-4 * r.analytic);
    EXPECT_LE(r.second_abs, 1e-6 * std::abs(r.fd_top));
  }
}

TEST(CateHistogramTest, ConstantNegativePredictor) {
  SynthConfig cfg;
  cfg.n_series = 30;
  const SyntheticData gen = Generate(cfg);
  const CateHistogram h = ComputeCateHistogram(
      [](int, int, Treatment, Treatment) { return -0.4; }, gen.dataset, true);
  EXPECT_EQ(h.positive_fraction, 0.0);
  long top = 0, total = 0;
  for (const auto& s : gen.dataset.series) {
    for (int t = s.tau + 1; t <= s.length(); ++t) {
      ++total;
      top += s.treatment(t) == cfg.d;
    }
  }
  EXPECT_EQ(h.n_skipped, top);
  EXPECT_EQ(h.n_values, total - top);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), 0L), h.n_values);
  EXPECT_EQ(h.edges.size(), 41u);
}

TEST(CateHistogramTest, OracleOnMonotoneWorld) {
  for (EncodingKind kind :
       {EncodingKind::kOneHot, EncodingKind::kCumulative, EncodingKind::kLinear}) {
    SynthConfig cfg;
    cfg.n_series = 60;
    cfg.encoding = kind;
    const SyntheticData gen = Generate(cfg);
    const Oracle& o = gen.oracle;
    const CateHistogram h = ComputeCateHistogram(
        [&o](int n, int t, Treatment a, Treatment b) { return o.Cate(n, t, a, b); },
        gen.dataset, true);
    EXPECT_EQ(h.positive_fraction, 0.0);
    EXPECT_GT(h.n_values, 0);
  }
}

TEST(CateHistogramTest, DeclaredEdgesAndErrors) {
  SynthConfig cfg;
  cfg.n_series = 10;
  const SyntheticData gen = Generate(cfg);
  const auto one = [](int, int, Treatment, Treatment) { return 1.0; };
  const CateHistogram h = ComputeCateHistogram(one, gen.dataset, false, {-1.0, 0.0, 2.0});
  EXPECT_EQ(h.counts, (std::vector<long>{0, h.n_values}));
  EXPECT_EQ(h.positive_fraction, 1.0);
  EXPECT_THROW(ComputeCateHistogram(one, gen.dataset, false, {1.0, 0.0}), ConfigError);
  SynthConfig single = cfg;
  single.d = 1;
  EXPECT_THROW(single.Validate(), ConfigError);
  std::ostringstream csv, svg;
  WriteHistogramCsv(h, csv);
  EXPECT_EQ(csv.str(), "bin_left,bin_right,count\n-1,0,0\n0,2," + std::to_string(h.n_values) + "\n");
  WriteHistogramSvg(h, "demo", svg);
  EXPECT_NE(svg.str().find("positive: 100.0%"), std::string::npos);
}

TEST(MetricsReportTest, CsvAndText) {
  MetricsReport r;
  r.model_tag = "orthogonal";
  r.rmse = 0.5;
  r.mae = 0.25;
  r.rdd_rmse = 1.0;
  r.rdd_mae = 0.75;
  r.n_points = 10;
  r.n_entries = 3;
  EXPECT_EQ(MetricsCsvHeader(),
            "model_tag,rmse,mae,rdd_rmse,rdd_mae,oracle_cate_rmse,n_points,n_entries");
  EXPECT_EQ(MetricsCsvRow(r), "orthogonal,0.5,0.25,1,0.75,,10,3");
  EXPECT_EQ(MetricsText(r).find("oracle"), std::string::npos);
  r.oracle_cate_rmse = 0.125;
  EXPECT_EQ(MetricsCsvRow(r), "orthogonal,0.5,0.25,1,0.75,0.125,10,3");
  EXPECT_NE(MetricsText(r).find("cate_rmse 0.125000"), std::string::npos);
}

TEST(OracleCateRmseTest, OracleScoresZeroAndShiftScoresShift) {
  const SyntheticData gen = SmallWorld(40);
  const Oracle& o = gen.oracle;
  EXPECT_EQ(OracleCateRmse(o, [&o](int n, int t, Treatment a, Treatment b) {
              return o.Cate(n, t, a, b);
            }), 0.0);
  EXPECT_NEAR(OracleCateRmse(o, [&o](int n, int t, Treatment a, Treatment b) {
                return o.Cate(n, t, a, b) + 0.5;
              }),
              0.5, 1e-12);
  EXPECT_THROW(OracleCateRmse(o, nullptr, 0), ConfigError);
}

TEST(ConvergenceSweepTest, SingleRowAndOrdering) {
  SynthConfig cfg;
  ExperimentSettings settings;
  settings.pipeline.m_spec = Ridge(1.0);
  settings.pipeline.e_spec = Ridge(1.0);
  settings.pipeline.theta_spec = Ridge(1.0);
  settings.direct_spec = Ridge(1.0);
  settings.n_contexts = 50;
  settings.n_test_series = 50;
  const std::vector<SweepRow> rows = ConvergenceSweep(cfg, {150}, settings, {1, 2});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_series, 150);
  EXPECT_FALSE(rows[0].failed);
  EXPECT_EQ(rows[0].orthogonal_runs.size(), 2u);
  EXPECT_GT(rows[0].orthogonal_rmse, 0.0);
  EXPECT_GT(rows[0].direct_rmse, 0.0);
  EXPECT_THROW(ConvergenceSweep(cfg, {200, 100}, settings, {1}), ConfigError);
  EXPECT_THROW(ConvergenceSweep(cfg, {100}, settings, {}), ConfigError);
  const ExperimentResult a = RunSyntheticExperiment(cfg, settings, 3);
  SynthConfig small = cfg;
  small.n_series = 150;
  const ExperimentResult b = RunSyntheticExperiment(small, settings, 3);
  const ExperimentResult c = RunSyntheticExperiment(small, settings, 3);
  EXPECT_EQ(b.orthogonal_rmse, c.orthogonal_rmse);
  EXPECT_EQ(b.direct_rmse, c.direct_rmse);
  EXPECT_EQ(b.oracle_positive, 0.0);
  EXPECT_GT(a.orthogonal_rmse, 0.0);
}

}  // namespace
}  // namespace orthocast

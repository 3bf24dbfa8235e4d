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

#include <cmath>
#include <sstream>

#include "gtest/gtest.h"
#include "orthocast/dataset_io.h"
#include "orthocast/encoding.h"
#include "orthocast/errors.h"
#include "orthocast/synthetic.h"

namespace orthocast {
namespace {

SynthConfig Small() {
  SynthConfig cfg;
  cfg.n_series = 50;
  return cfg;
}

std::string Bytes(const Dataset& ds) {
  std::ostringstream os;
  WriteJsonl(ds, os);
  return os.str();
}

double Projection(const Eigen::VectorXd& dir, const ContextView& w) {
  Eigen::VectorXd sx(w.s.size() + w.x.size());
  sx << w.s, w.x;
  return dir.dot(sx);
}

TEST(GenerateTest, DeterministicBytes) {
  EXPECT_EQ(Bytes(Generate(Small()).dataset), Bytes(Generate(Small()).dataset));
  SynthConfig other = Small();
  other.seed = 2;
  EXPECT_NE(Bytes(Generate(Small()).dataset), Bytes(Generate(other).dataset));
}

TEST(GenerateTest, ShapesAndLabels) {
  SynthConfig cfg = Small();
  cfg.n_groups = 3;
  const SyntheticData gen = Generate(cfg);
  ASSERT_EQ(gen.dataset.size(), 50u);
  EXPECT_NO_THROW(ValidateDataset(gen.dataset));
  const TimeSeries& s = gen.dataset.series[4];
  EXPECT_EQ(s.id, "s4");
  EXPECT_EQ(s.group, "g1");
  EXPECT_EQ(s.length(), cfg.L);
  EXPECT_EQ(s.tau, cfg.tau);
  EXPECT_EQ(s.static_features.size(), 3u);
  EXPECT_EQ(s.temporal_features.cols(), 2);
  ASSERT_TRUE(s.has_weekday());
  for (int t = 2; t <= cfg.L; ++t) {
    EXPECT_EQ(s.weekday_at(t), s.weekday_at(t - 1) % 7 + 1);
  }
}

TEST(GenerateTest, CategoricalEncodingsShareData) {
  SynthConfig a = Small();
  SynthConfig b = Small();
  b.encoding = EncodingKind::kCumulative;
  const Dataset da = Generate(a).dataset;
  const Dataset db = Generate(b).dataset;
  for (size_t n = 0; n < da.size(); ++n) {
    EXPECT_EQ(da.series[n].treatments, db.series[n].treatments);
    EXPECT_EQ(da.series[n].outcomes, db.series[n].outcomes);
  }
}

TEST(GenerateTest, NoConfoundingMeansNoCorrelation) {
  SynthConfig cfg;
  cfg.confounding_strength = 0.0;
  cfg.n_series = 2000;
  const SyntheticData gen = Generate(cfg);
  double st = 0, sf = 0, stt = 0, sff = 0, stf = 0, n = 0;
  for (size_t i = 0; i < gen.dataset.size(); ++i) {
    const TimeSeries& s = gen.dataset.series[i];
    for (int t = 1; t <= s.length(); ++t) {
      const double a = s.treatment(t);
      const double f = gen.oracle.F0(static_cast<int>(i), t);
      st += a;
      sf += f;
      stt += a * a;
      sff += f * f;
      stf += a * f;
      n += 1;
    }
  }
  const double cov = stf / n - st * sf / (n * n);
  const double corr = cov / std::sqrt((stt / n - st * st / (n * n)) * (sff / n - sf * sf / (n * n)));
  EXPECT_LT(std::abs(corr), 0.03);
}

TEST(GenerateTest, ConfoundingCorrelatesTreatmentWithDemand) {
  SynthConfig cfg = Small();
  cfg.n_series = 500;
  const SyntheticData gen = Generate(cfg);
  double hi = 0, lo = 0, nhi = 0, nlo = 0;
  for (size_t i = 0; i < gen.dataset.size(); ++i) {
    for (int t = 1; t <= cfg.L; ++t) {
      const double f = gen.oracle.F0(static_cast<int>(i), t);
      const double a = gen.dataset.series[i].treatment(t);
      (f > 1.0 ? hi : lo) += a;
      (f > 1.0 ? nhi : nlo) += 1;
    }
  }
  EXPECT_GT(hi / nhi, lo / nlo + 0.5);
}

TEST(GenerateTest, NoiseFreeOutcomeDecomposes) {
  for (EncodingKind kind :
       {EncodingKind::kOneHot, EncodingKind::kCumulative, EncodingKind::kLinear}) {
    SynthConfig cfg = Small();
    cfg.noise_y = 0.0;
    cfg.theta_form = ThetaForm::kConstantVector;
    cfg.encoding = kind;
    const SyntheticData gen = Generate(cfg);
    for (size_t i = 0; i < gen.dataset.size(); ++i) {
      const TimeSeries& s = gen.dataset.series[i];
      for (int t = 1; t <= cfg.L; ++t) {
        const Eigen::VectorXd theta = gen.oracle.Theta0(static_cast<int>(i), t);
        EXPECT_NEAR(s.y(t) - gen.oracle.F0(static_cast<int>(i), t),
                    OutcomeShift(AsSpan(theta), s.treatment(t), kind), 1e-12);
      }
    }
  }
}

TEST(GenerateTest, StepModeRuns) {
  SynthConfig cfg = Small();
  cfg.rdd_step_mode = true;
  cfg.L = 60;
  const SyntheticData gen = Generate(cfg);
  int switches = 0;
  for (const TimeSeries& s : gen.dataset.series) {
    int start = 1;
    for (int t = 1; t < s.length(); ++t) {
      if (s.treatment(t) != s.treatment(t + 1)) {
        EXPECT_GE(t - start + 1, cfg.min_side + 1) << s.id << " t=" << t;
        start = t + 1;
        ++switches;
      }
    }
  }
  EXPECT_GT(switches, 100);
}

TEST(OracleTest, CateIdentities) {
  const SyntheticData gen = Generate(Small());
  const Oracle& o = gen.oracle;
  EXPECT_EQ(o.Cate(3, 10, 2, 2), 0.0);
  EXPECT_EQ(o.Cate("s3", 10, 1, 4), o.Cate(3, 10, 1, 4));
  const Eigen::VectorXd theta = o.Theta0(3, 10);
  EXPECT_EQ(o.Cate(3, 10, 1, 4), CateFromTheta(AsSpan(theta), 1, 4, o.encoding()));
  // Monotone decreasing per-level effects.
  const Eigen::VectorXd mu = o.LevelEffects(o.Context(3, 10));
  for (int i = 1; i < mu.size(); ++i) EXPECT_LT(mu[i], mu[i - 1]);
  EXPECT_THROW(o.Cate(50, 10, 1, 2), ConfigError);
  EXPECT_THROW(o.Cate(0, 0, 1, 2), ConfigError);
  EXPECT_THROW(o.Cate(0, 25, 1, 2), ConfigError);
  EXPECT_THROW(o.Cate(0, 10, 1, 6), ConfigError);
  EXPECT_THROW(o.Cate("missing", 10, 1, 2), ConfigError);
}

TEST(OracleTest, ConstantVectorCate) {
  SynthConfig cfg = Small();
  cfg.d = 3;
  cfg.theta_form = ThetaForm::kConstantVector;
  const SyntheticData gen = Generate(cfg);
  StructuralParams params = gen.oracle.params();
  params.mu_const = Eigen::Vector3d(0.0, -1.0, -2.0);
  const Oracle o(cfg, params, std::make_shared<Dataset>(gen.dataset));
  EXPECT_DOUBLE_EQ(o.Cate(0, 12, 1, 3), -2.0);
}

TEST(OracleTest, SmoothThetaMatchesIndependentEvaluation) {
  for (EncodingKind kind :
       {EncodingKind::kOneHot, EncodingKind::kCumulative, EncodingKind::kLinear}) {
    SynthConfig cfg = Small();
    cfg.theta_form = ThetaForm::kSmoothOfW;
    cfg.encoding = kind;
    const SyntheticData gen = Generate(cfg);
    const Oracle& o = gen.oracle;
    for (int n = 0; n < 20; ++n) {
      const int t = 9 + n % 15;
      const double beta =
          cfg.effect_scale * (std::tanh(2.0 * Projection(o.params().v, o.Context(n, t))) - 0.25);
      // One-hot theta_i = (i - 1) beta, cumulative theta_i = beta (i >= 2),
      // linear theta = beta.
      const Eigen::VectorXd theta = o.Theta0(n, t);
      if (kind == EncodingKind::kLinear) {
        ASSERT_EQ(theta.size(), 1);
        EXPECT_NEAR(theta[0], beta, 1e-14);
        EXPECT_NEAR(o.Cate(n, t, 1.0, 3.0), 2.0 * beta, 1e-14);
        continue;
      }
      for (int i = 1; i <= cfg.d; ++i) {
        const double expected = kind == EncodingKind::kOneHot ? (i - 1) * beta
                                : i == 1                      ? 0.0
                                                              : beta;
        EXPECT_NEAR(theta[i - 1], expected, 1e-14);
      }
      EXPECT_NEAR(o.Cate(n, t, 2, 5), 3.0 * beta, 1e-14);
    }
  }
}

TEST(OracleTest, NuisanceWithoutEffects) {
  SynthConfig cfg = Small();
  cfg.effect_scale = 0.0;
  const SyntheticData gen = Generate(cfg);
  for (int n = 0; n < 10; ++n) {
    EXPECT_EQ(gen.oracle.Nuisance(n, 12).first, gen.oracle.F0(n, 12));
  }
}

TEST(OracleTest, DeterministicTreatmentGivesOneHotE0) {
  SynthConfig cfg = Small();
  cfg.deterministic_treatment = true;
  const SyntheticData gen = Generate(cfg);
  for (int n = 0; n < 10; ++n) {
    const Eigen::VectorXd e0 = gen.oracle.Nuisance(n, 12).second;
    EXPECT_EQ(e0.sum(), 1.0);
    EXPECT_EQ(e0.maxCoeff(), 1.0);
    EXPECT_EQ(gen.dataset.series[n].treatment(12) - 1, [&] {
      Eigen::Index k;
      e0.maxCoeff(&k);
      return static_cast<double>(k);
    }());
  }
}

TEST(OracleTest, MonteCarloMatchesNuisances) {
  for (EncodingKind kind : {EncodingKind::kOneHot, EncodingKind::kCumulative}) {
    SynthConfig cfg = Small();
    cfg.encoding = kind;
    const SyntheticData gen = Generate(cfg);
    std::mt19937_64 rng(99);
    const int draws = 40000;
    for (int n = 0; n < 3; ++n) {
      const auto [m0, e0] = gen.oracle.Nuisance(n, 15);
      double sy = 0, syy = 0;
      Eigen::VectorXd se = Eigen::VectorXd::Zero(cfg.d);
      Eigen::VectorXd see = Eigen::VectorXd::Zero(cfg.d);
      for (int k = 0; k < draws; ++k) {
        const auto [t, y] = gen.oracle.Draw(n, 15, rng);
        sy += y;
        syy += y * y;
        const Eigen::VectorXd enc = EncodeTreatment(t, cfg.d, kind);
        se += enc;
        see += enc.cwiseProduct(enc);
      }
      const double mean = sy / draws;
      const double se_mean = std::sqrt((syy / draws - mean * mean) / draws);
      EXPECT_LE(std::abs(mean - m0), 3.0 * se_mean + 1e-12);
      for (int i = 0; i < cfg.d; ++i) {
        const double em = se[i] / draws;
        const double es = std::sqrt(std::max(see[i] / draws - em * em, 0.0) / draws);
        EXPECT_LE(std::abs(em - e0[i]), 3.0 * es + 1e-12) << i;
      }
    }
  }
}

TEST(SynthConfigTest, ValidationAndJson) {
  SynthConfig cfg;
  cfg.tau = cfg.L;
  try {
    cfg.Validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("tau"), std::string::npos);
  }
  cfg = SynthConfig{};
  cfg.d = 1;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.ar_coeff = 1.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.theta_form = ThetaForm::kSmoothOfW;
  cfg.encoding = EncodingKind::kLinear;
  cfg.seed = 77;
  const SynthConfig r = SynthConfigFromJson(SynthConfigToJson(cfg));
  EXPECT_EQ(SynthConfigToJson(r), SynthConfigToJson(cfg));
  EXPECT_THROW(SynthConfigFromJson({{"L", "long"}}), ConfigError);
}

TEST(InjectStepSeriesTest, ShapeAndErrors) {
  const TimeSeries s = InjectStepSeries(2.0, 6, 12, 0.5, 0.0, 1);
  ASSERT_EQ(s.length(), 12);
  EXPECT_EQ(s.treatment(6), 1.0);
  EXPECT_EQ(s.treatment(7), 2.0);
  EXPECT_DOUBLE_EQ(s.y(6), 3.0);
  EXPECT_DOUBLE_EQ(s.y(7), 5.5);
  EXPECT_THROW(InjectStepSeries(1.0, 1, 12, 0.0, 0.0, 1), ConfigError);
  EXPECT_THROW(InjectStepSeries(1.0, 12, 12, 0.0, 0.0, 1), ConfigError);
  EXPECT_EQ(InjectStepSeries(1.0, 5, 12, 0.0, 0.2, 3).outcomes,
            InjectStepSeries(1.0, 5, 12, 0.0, 0.2, 3).outcomes);
}

}  // namespace
}  // namespace orthocast

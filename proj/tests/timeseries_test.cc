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
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "orthocast/dataset_io.h"
#include "orthocast/errors.h"
#include "orthocast/featurizer.h"
#include "orthocast/timeseries.h"
#include "test_util.h"

namespace orthocast {
namespace {

using ::orthocast::testing::RandomDataset;
using ::orthocast::testing::RandomSeries;
using ::orthocast::testing::ScratchDir;

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

TEST(ValidateSeriesTest, ValidSeriesHasNoViolations) {
  std::mt19937_64 rng(1);
  const TimeSeries s = RandomSeries("a", 10, 4, 5, {2, 3}, rng);
  EXPECT_TRUE(ValidateSeries(s, 5, {2, 3}).empty());
}

TEST(ValidateSeriesTest, TauEqualToLength) {
  std::mt19937_64 rng(1);
  TimeSeries s = RandomSeries("a", 10, 4, 5, {1, 1}, rng);
  s.tau = 10;
  EXPECT_EQ(ValidateSeries(s, 5, {1, 1}), std::vector<std::string>{"tau out of range"});
}

TEST(ValidateSeriesTest, TreatmentZero) {
  std::mt19937_64 rng(1);
  TimeSeries s = RandomSeries("a", 10, 4, 5, {1, 1}, rng);
  s.treatments[3] = 0;
  EXPECT_EQ(ValidateSeries(s, 5, {1, 1}),
            std::vector<std::string>{"treatment index out of range"});
  // Linear data accepts any finite real.
  EXPECT_TRUE(ValidateSeries(s, 5, {1, 1}, /*categorical=*/false).empty());
}

TEST(ValidateSeriesTest, ShapeMismatches) {
  std::mt19937_64 rng(1);
  TimeSeries s = RandomSeries("a", 10, 4, 3, {2, 2}, rng);
  s.outcomes.pop_back();
  s.weekday = {1, 2, 3};
  const auto v = ValidateSeries(s, 3, {1, 3});
  EXPECT_TRUE(Contains(v, "outcomes length mismatch"));
  EXPECT_TRUE(Contains(v, "static feature count mismatch"));
  EXPECT_TRUE(Contains(v, "temporal feature column count mismatch"));
  EXPECT_TRUE(Contains(v, "weekday length mismatch"));
}

TEST(DatasetTest, ForecastStepsAndFrequencies) {
  Dataset ds = RandomDataset(3, 10, 4, 3, {1, 1}, 5);
  EXPECT_EQ(ds.NumForecastSteps(), 18u);
  const auto freq = TreatmentFrequencies(ds);
  ASSERT_EQ(freq.size(), 3u);
  EXPECT_EQ(freq[0] + freq[1] + freq[2], 18);
  EXPECT_EQ(ds.FindSeries("s2"), 2);
  EXPECT_EQ(ds.FindSeries("nope"), -1);
  const Dataset sub = ds.Subset({2, 0});
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.series[0].id, "s2");
  EXPECT_EQ(sub.d, 3);
}

TEST(DatasetTest, DuplicateIdRejected) {
  Dataset ds = RandomDataset(2, 10, 4, 3, {1, 1}, 5);
  ds.series[1].id = "s0";
  EXPECT_THROW(ValidateDataset(ds), DataError);
}

void ExpectSameDataset(const Dataset& a, const Dataset& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.d, b.d);
  EXPECT_EQ(a.encoding, b.encoding);
  EXPECT_EQ(a.dims, b.dims);
  for (size_t n = 0; n < a.size(); ++n) {
    const TimeSeries& x = a.series[n];
    const TimeSeries& y = b.series[n];
    EXPECT_EQ(x.id, y.id);
    EXPECT_EQ(x.group, y.group);
    EXPECT_EQ(x.tau, y.tau);
    EXPECT_EQ(x.static_features, y.static_features);
    EXPECT_EQ(x.temporal_features, y.temporal_features);
    EXPECT_EQ(x.treatments, y.treatments);
    EXPECT_EQ(x.outcomes, y.outcomes);
    EXPECT_EQ(x.weekday, y.weekday);
  }
}

TEST(DatasetIoTest, JsonlRoundTripIsExact) {
  Dataset ds = RandomDataset(2, 12, 5, 4, {2, 3}, 9);
  ds.series[0].group = "g1";
  ds.series[1].weekday = {1, 2, 3, 4, 5, 6, 7, 1, 2, 3, 4, 5};
  std::stringstream ss;
  WriteJsonl(ds, ss);
  ExpectSameDataset(ds, ReadJsonl(ss));
}

TEST(DatasetIoTest, CsvRoundTripIsExact) {
  Dataset ds = RandomDataset(3, 9, 2, 3, {1, 2}, 11);
  ds.encoding = EncodingKind::kCumulative;
  for (auto& s : ds.series) s.weekday = {3, 4, 5, 6, 7, 1, 2, 3, 4};
  std::stringstream main, side;
  WriteCsv(ds, main, side);
  ExpectSameDataset(ds, ReadCsv(main, side));
}

TEST(DatasetIoTest, FilesOnDisk) {
  const auto dir = ScratchDir("io");
  const Dataset ds = RandomDataset(2, 8, 3, 2, {1, 1}, 3);
  SaveDataset(ds, (dir / "a.jsonl").string(), DataFormat::kJsonl);
  SaveDataset(ds, (dir / "a.csv").string(), DataFormat::kCsv);
  ExpectSameDataset(ds, LoadDataset((dir / "a.jsonl").string()));
  ExpectSameDataset(ds, LoadDataset((dir / "a.csv").string()));
  EXPECT_TRUE(std::filesystem::exists(StaticSidecarPath((dir / "a.csv").string())));
}

TEST(DatasetIoTest, EmptyFile) {
  std::stringstream empty;
  try {
    ReadJsonl(empty);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "empty dataset");
  }
}

TEST(DatasetIoTest, ShortOutcomeNamesSeries) {
  Dataset ds = RandomDataset(2, 8, 3, 2, {1, 1}, 3);
  ds.series[1].id = "culprit";
  std::stringstream ss;
  WriteJsonl(ds, ss);
  std::string text = ss.str();
  // Drop the last outcome of the second record.
  const size_t pos = text.rfind("\"outcomes\":[");
  ASSERT_NE(pos, std::string::npos);
  const size_t end = text.find(']', pos);
  const size_t comma = text.rfind(',', end);
  text.erase(comma, end - comma);
  std::stringstream in(text);
  try {
    ReadJsonl(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("culprit"), std::string::npos) << e.what();
  }
}

TEST(DatasetIoTest, MalformedLineNumber) {
  std::stringstream in("{\"d\":2,\"p_s\":0,\"p_x\":0,\"encoding\":\"one-hot\"}\n{oops\n");
  try {
    ReadJsonl(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(DatasetIoTest, MissingFile) {
  EXPECT_THROW(LoadDataset("/nonexistent/file.jsonl"), DataError);
}

TEST(FormatDoubleTest, ShortestRoundTrip) {
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(2.0), "2");
  const double v = 1.0 / 3.0;
  EXPECT_EQ(std::stod(FormatDouble(v)), v);
}

FeaturizerConfig MinimalConfig() {
  FeaturizerConfig cfg;
  cfg.lag_window = 1;
  cfg.pre_tau_lags = 1;
  cfg.include_aggregates = false;
  cfg.include_time = false;
  cfg.normalize = false;
  return cfg;
}

TEST(FeaturizerTest, MinimalLayout) {
  TimeSeries s;
  s.id = "a";
  s.tau = 2;
  s.static_features = {0.5};
  s.temporal_features.resize(4, 1);
  s.temporal_features << 10, 20, 30, 40;
  s.treatments = {1, 2, 1, 2};
  s.outcomes = {1.5, 2.5, 3.5, 4.5};
  const auto ctx = Featurize(s, 4, MinimalConfig(), {});
  EXPECT_EQ(ctx.values, (std::vector<double>{0.5, 40, 2, 2.5}));
  EXPECT_EQ(ctx.t, 4);
  EXPECT_EQ(FeatureDimension(MinimalConfig(), {1, 1}), 4);
  EXPECT_EQ(FeatureNames(MinimalConfig(), {1, 1}).size(), 4u);
}

TEST(FeaturizerTest, PaddingCarriesZeroAndMask) {
  std::mt19937_64 rng(2);
  const TimeSeries s = RandomSeries("a", 6, 1, 3, {0, 1}, rng);
  FeaturizerConfig cfg = MinimalConfig();
  cfg.lag_window = 4;
  // t = 2: X_2, then lags X_1 (present) and X_0, X_{-1} (padded).
  const auto raw = RawFeatures(s, 2, cfg);
  ASSERT_EQ(raw.size(), 1u + 3u * 2u + 2u);
  EXPECT_EQ(raw[0], s.x(2)[0]);
  EXPECT_EQ(raw[1], s.x(1)[0]);
  EXPECT_EQ(raw[2], 1.0);
  EXPECT_EQ(raw[3], 0.0);
  EXPECT_EQ(raw[4], 0.0);
  EXPECT_EQ(raw[5], 0.0);
  EXPECT_EQ(raw[6], 0.0);
}

TEST(FeaturizerTest, PreTauPadding) {
  std::mt19937_64 rng(2);
  const TimeSeries s = RandomSeries("a", 6, 1, 3, {0, 0}, rng);
  FeaturizerConfig cfg = MinimalConfig();
  cfg.pre_tau_lags = 3;
  const auto raw = RawFeatures(s, 3, cfg);
  // T_1, Y_1, then two padded (T, Y, mask) blocks.
  EXPECT_EQ(raw, (std::vector<double>{s.treatment(1), s.y(1), 0, 0, 0, 0, 0, 0}));
}

TEST(FeaturizerTest, ConstantColumnNormalizesToZero) {
  Dataset ds = RandomDataset(4, 8, 3, 3, {1, 1}, 7);
  for (auto& s : ds.series) s.static_features[0] = 2.5;
  FeaturizerConfig cfg;
  const FeatureStats stats = ComputeFeatureStats(ds, cfg);
  EXPECT_EQ(stats.scale[0], 0.0);
  const FeatureMatrix fm = FeaturizeDataset(ds, cfg, stats);
  EXPECT_TRUE(fm.x.allFinite());
  EXPECT_EQ(fm.x.col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(fm.x.cols(), FeatureDimension(cfg, ds.dims));
  EXPECT_EQ(static_cast<size_t>(fm.x.rows()), ds.NumForecastSteps());
  // Non-constant columns are standardized on this data.
  EXPECT_NEAR(fm.x.col(1).mean(), 0.0, 1e-12);
}

TEST(FeaturizerTest, RejectsPreForecastSteps) {
  std::mt19937_64 rng(2);
  const TimeSeries s = RandomSeries("a", 6, 3, 3, {1, 1}, rng);
  EXPECT_THROW(RawFeatures(s, 3, FeaturizerConfig{}), ConfigError);
  EXPECT_THROW(RawFeatures(s, 7, FeaturizerConfig{}), ConfigError);
}

TEST(FeaturizerTest, PureAndLeakageFree) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeaturizerConfig cfg;
  cfg.include_weekday = true;
  for (int trial = 0; trial < 200; ++trial) {
    TimeSeries a = RandomSeries("a", 16, 6, 4, {2, 2}, rng);
    a.weekday.assign(16, 1);
    for (int t = 0; t < 16; ++t) a.weekday[t] = 1 + (t + trial) % 7;
    const int t = 7 + trial % 10;
    TimeSeries b = a;
    for (int u = t; u <= 16; ++u) b.outcomes[u - 1] = normal(rng);
    for (int u = a.tau + 1; u <= 16; ++u) b.treatments[u - 1] = 1 + (u % 4);
    for (int u = a.tau + 1; u < t; ++u) b.outcomes[u - 1] += normal(rng);
    for (int u = t + 1; u <= 16; ++u) {
      b.temporal_features.row(u - 1).setConstant(normal(rng));
    }
    EXPECT_EQ(RawFeatures(a, t, cfg), RawFeatures(b, t, cfg));
    EXPECT_EQ(RawFeatures(a, t, cfg), RawFeatures(a, t, cfg));
  }
}

TEST(FeaturizerTest, JsonRoundTrip) {
  FeaturizerConfig cfg;
  cfg.lag_window = 3;
  cfg.include_weekday = true;
  EXPECT_EQ(FeaturizerConfigFromJson(FeaturizerConfigToJson(cfg)), cfg);
  FeatureStats stats{{1.0, 2.0}, {0.5, 0.0}};
  EXPECT_EQ(FeatureStatsFromJson(FeatureStatsToJson(stats)), stats);
  EXPECT_THROW(FeaturizerConfigFromJson({{"lag_window", 0}}), ConfigError);
}

}  // namespace
}  // namespace orthocast

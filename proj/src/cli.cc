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

#include "orthocast/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "orthocast/dataset_io.h"
#include "orthocast/encoding.h"
#include "orthocast/errors.h"
#include "orthocast/eval.h"
#include "orthocast/orthogonal.h"
#include "orthocast/parallel.h"
#include "orthocast/rdd.h"
#include "orthocast/run_config.h"
#include "orthocast/synthetic.h"

namespace orthocast {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Flags {
  std::string config;
  std::string out;
  std::string data;
  std::string model;
  std::string testset;
  std::string encoding;
  std::optional<uint64_t> seed;
  std::optional<int> seeds;
  std::optional<int> jobs;
  std::optional<double> fd_step;
  bool cross_fit = false;
};

RunConfig ResolveConfig(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig::Defaults() : LoadRunConfig(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.seeds) cfg.eval.seeds = *f.seeds;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.encoding.empty()) cfg.synth.encoding = ParseEncoding(f.encoding);
  if (f.cross_fit) cfg.cross_fit = true;
  if (f.fd_step) {
    cfg.eval.orthogonality_fd_step = *f.fd_step;
    cfg.eval.hessian_fd_step = *f.fd_step;
    cfg.eval.gradient_fd_step = *f.fd_step;
  }
  cfg.rdd.jobs = cfg.jobs;
  cfg.Validate();
  return cfg;
}

void EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void WriteText(const std::string& path, const std::string& text) {
  EnsureParent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

SynthConfig TrainSynth(const RunConfig& cfg, uint64_t seed) {
  SynthConfig s = cfg.synth;
  s.seed = seed;
  return s;
}

// Categorical data may be relabeled between one-hot and cumulative; the
// linear encoding must match exactly.
void ApplyEncoding(const RunConfig& cfg, Dataset* ds) {
  if (ds->encoding == cfg.synth.encoding) return;
  if (IsCategorical(ds->encoding) && IsCategorical(cfg.synth.encoding)) {
    ds->encoding = cfg.synth.encoding;
    return;
  }
  throw ConfigError("encoding mismatch: config uses '" +
                    std::string(EncodingName(cfg.synth.encoding)) +
                    "', data uses '" + std::string(EncodingName(ds->encoding)) +
                    "'");
}

struct TrainedModels {
  CausalForecaster forecaster;
  DirectBaseline direct;
};

TrainedModels TrainModels(const RunConfig& cfg, const Dataset& ds, uint64_t seed) {
  TrainedModels m;
  m.forecaster = TrainForecaster(ds, cfg.Pipeline(seed));
  m.direct = FitDirectBaseline(ds, cfg.DirectSpec(seed), cfg.featurizer,
                               cfg.direct_interactions);
  return m;
}

Json ModelsToJson(const TrainedModels& m) {
  Json j;
  j["format"] = "orthocast-run-model";
  j["version"] = 1;
  j["forecaster"] = ForecasterToJson(m.forecaster);
  j["direct"] = DirectBaselineToJson(m.direct);
  return j;
}

TrainedModels ModelsFromFile(const std::string& path) {
  Json j;
  try {
    j = Json::parse(ReadText(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("model '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "orthocast-run-model") {
    throw DataError("model '" + path + "': not a model artifact");
  }
  return {ForecasterFromJson(j.at("forecaster")), DirectBaselineFromJson(j.at("direct"))};
}

struct EvalOutputs {
  MetricsReport orthogonal;
  MetricsReport direct;
  CateHistogram hist_orthogonal;
  CateHistogram hist_direct;
  long rdd_skipped = 0;
};

EvalOutputs EvaluateModels(const RunConfig& cfg, const TrainedModels& models,
                           const Dataset& data, const CausalTestSet& test,
                           const Oracle* oracle) {
  EvalOutputs out;
  const CausalForecaster& f = models.forecaster;
  const DirectBaseline& direct = models.direct;
  FeaturizerConfig raw_cfg = f.featurizer();
  raw_cfg.normalize = false;
  const FeatureMatrix fm = FeaturizeDataset(data, raw_cfg, {});
  if (fm.x.rows() == 0) throw DataError("evaluate: dataset has no forecast steps");
  std::vector<double> truth, orth_pred;
  std::vector<Treatment> treatments;
  for (const SampleRef& r : fm.refs) {
    truth.push_back(data.series[r.series].y(r.t));
    treatments.push_back(data.series[r.series].treatment(r.t));
  }
  const auto parts = f.PredictBatch(fm.x);
  const int k = EncodedDimension(f.encoding(), f.d());
  Eigen::VectorXd enc(k);
  for (Eigen::Index i = 0; i < fm.x.rows(); ++i) {
    EncodeTreatmentInto(treatments[i], f.d(), f.encoding(), enc);
    double total = 0.0;
    for (const auto& p : parts) {
      total += p.m[i] + (enc - p.e.row(i).transpose()).dot(p.theta.row(i));
    }
    orth_pred.push_back(total / static_cast<double>(parts.size()));
  }
  const Eigen::VectorXd direct_pred = direct.Predict(fm.x, treatments);
  const ForecastMetrics mo = ComputeForecastMetrics(orth_pred, truth);
  const ForecastMetrics md = ComputeForecastMetrics(
      std::span<const double>(direct_pred.data(), direct_pred.size()), truth);

  std::unordered_map<std::string, int> index;
  for (size_t n = 0; n < data.size(); ++n) index[data.series[n].id] = static_cast<int>(n);
  const auto lookup = [&](const std::string& id) -> const TimeSeries& {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown series '" + id + "'");
    return data.series[it->second];
  };
  // An RDD entry at switch t_i is scored at the first step under the new
  // treatment.
  const RddScore so = ScorePredictions(
      test, [&](const std::string& id, int t_i, Treatment a, Treatment b) {
        return f.PredictCate(lookup(id), t_i + 1, a, b);
      });
  const RddScore sd = ScorePredictions(
      test, [&](const std::string& id, int t_i, Treatment a, Treatment b) {
        const auto raw = RawFeatures(lookup(id), t_i + 1, direct.featurizer);
        return DirectCate(direct, raw, a, b);
      });

  const ContextCatePredictor orth_cate = [&](int n, int t, Treatment a, Treatment b) {
    return f.PredictCate(data.series[n], t, a, b);
  };
  const ContextCatePredictor direct_cate = [&](int n, int t, Treatment a, Treatment b) {
    const auto raw = RawFeatures(data.series[n], t, direct.featurizer);
    return DirectCate(direct, raw, a, b);
  };

  out.orthogonal = {"orthogonal", mo.rmse, mo.mae, so.rmse, so.mae, std::nullopt,
                    static_cast<long>(truth.size()), so.n_scored};
  out.direct = {"direct", md.rmse, md.mae, sd.rmse, sd.mae, std::nullopt,
                static_cast<long>(truth.size()), sd.n_scored};
  out.rdd_skipped = so.n_skipped;
  if (oracle != nullptr) {
    out.orthogonal.oracle_cate_rmse =
        OracleCateRmse(*oracle, orth_cate, cfg.eval.n_contexts);
    out.direct.oracle_cate_rmse =
        OracleCateRmse(*oracle, direct_cate, cfg.eval.n_contexts);
  }
  out.hist_orthogonal = ComputeCateHistogram(orth_cate, data, cfg.eval.per_unit);
  out.hist_direct = ComputeCateHistogram(direct_cate, data, cfg.eval.per_unit);
  return out;
}

std::string OraclePath(const std::string& data_path) {
  return (fs::path(data_path).parent_path() / "oracle.json").string();
}

// Rebuilds the oracle of a generated data file from the descriptor written
// next to it, if any.
std::optional<SyntheticData> OracleFor(const std::string& data_path,
                                       const Dataset& data) {
  const std::string path = OraclePath(data_path);
  if (!fs::exists(path)) return std::nullopt;
  Json j;
  try {
    j = Json::parse(ReadText(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("oracle descriptor: " + std::string(e.what()));
  }
  const std::string name = fs::path(data_path).filename().string();
  if (!j.contains("datasets") || !j.at("datasets").contains(name)) return std::nullopt;
  SyntheticData gen = Generate(SynthConfigFromJson(j.at("datasets").at(name)));
  if (gen.dataset.size() != data.size()) return std::nullopt;
  for (size_t n = 0; n < data.size(); ++n) {
    if (gen.dataset.series[n].id != data.series[n].id ||
        gen.dataset.series[n].outcomes != data.series[n].outcomes) {
      return std::nullopt;
    }
  }
  return gen;
}

void WriteEvalFiles(const EvalOutputs& ev, const std::string& dir) {
  fs::create_directories(dir);
  std::string csv = MetricsCsvHeader() + "\n" + MetricsCsvRow(ev.orthogonal) +
                    "\n" + MetricsCsvRow(ev.direct) + "\n";
  WriteText((fs::path(dir) / "metrics.csv").string(), csv);
  std::ostringstream txt;
  txt << MetricsText(ev.orthogonal) << MetricsText(ev.direct);
  txt << "positive CATE fraction: orthogonal "
      << Fixed(ev.hist_orthogonal.positive_fraction, 4) << ", direct "
      << Fixed(ev.hist_direct.positive_fraction, 4) << "\n";
  WriteText((fs::path(dir) / "metrics.txt").string(), txt.str());
  for (const auto& [name, h] : {std::pair{"orthogonal", &ev.hist_orthogonal},
                                std::pair{"direct", &ev.hist_direct}}) {
    std::ostringstream c, s;
    WriteHistogramCsv(*h, c);
    WriteHistogramSvg(*h, std::string("CATE to next treatment, ") + name, s);
    WriteText((fs::path(dir) / (std::string("hist_") + name + ".csv")).string(), c.str());
    WriteText((fs::path(dir) / (std::string("hist_") + name + ".svg")).string(), s.str());
  }
}

int CmdSynth(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const std::string dir = flags.out.empty() ? cfg.io.data_dir : flags.out;
  fs::create_directories(dir);
  const SynthConfig train_cfg = TrainSynth(cfg, cfg.seed);
  const SynthConfig test_cfg = HeldOutConfig(train_cfg, cfg.eval.n_test_series);
  const SyntheticData train = Generate(train_cfg);
  const SyntheticData test = Generate(test_cfg);
  SaveDataset(train.dataset, (fs::path(dir) / "train.jsonl").string(), DataFormat::kJsonl);
  SaveDataset(test.dataset, (fs::path(dir) / "test.jsonl").string(), DataFormat::kJsonl);
  Json oracle;
  oracle["format"] = "orthocast-oracle";
  oracle["version"] = 1;
  oracle["datasets"]["train.jsonl"] = SynthConfigToJson(train_cfg);
  oracle["datasets"]["test.jsonl"] = SynthConfigToJson(test_cfg);
  WriteText((fs::path(dir) / "oracle.json").string(), oracle.dump(2) + "\n");
  out << "synth: n_series=" << train_cfg.n_series << " L=" << train_cfg.L
      << " d=" << train_cfg.d << " encoding=" << EncodingName(train_cfg.encoding)
      << " (+" << test_cfg.n_series << " held-out) -> " << dir << "\n";
  return kExitOk;
}

std::string DefaultData(const RunConfig& cfg, const char* name) {
  return (fs::path(cfg.io.data_dir) / name).string();
}

int CmdTrain(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const std::string data_path =
      flags.data.empty() ? DefaultData(cfg, "train.jsonl") : flags.data;
  const std::string model_path = flags.out.empty() ? cfg.io.model : flags.out;
  Dataset ds = LoadDataset(data_path);
  ApplyEncoding(cfg, &ds);
  const TrainedModels models = TrainModels(cfg, ds, cfg.seed);
  WriteText(model_path, ModelsToJson(models).dump() + "\n");
  const auto& folds = models.forecaster.folds();
  for (size_t k = 0; k < folds.size(); ++k) {
    out << "train: fold " << k + 1 << " empirical R-loss " << Fixed(folds[k].rloss)
        << " (theta = 0: " << Fixed(folds[k].rloss_zero) << ")\n";
  }
  out << "train: " << (cfg.cross_fit ? "cross-fitted " : "")
      << "forecaster and direct baseline -> " << model_path << "\n";
  return kExitOk;
}

int CmdRdd(const Flags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = ResolveConfig(flags);
  const std::string data_path =
      flags.data.empty() ? DefaultData(cfg, "test.jsonl") : flags.data;
  const std::string csv_path = flags.out.empty() ? cfg.io.testset : flags.out;
  const Dataset ds = LoadDataset(data_path);
  const CausalTestSet set = BuildCausalTestSet(ds, cfg.rdd);
  EnsureParent(csv_path);
  SaveTestSet(set, csv_path);
  if (set.entries.empty()) {
    err << "warning: no eligible switches; wrote a header-only test set\n";
  }
  out << "rdd: switches " << set.stats.n_switches << ", eligible "
      << set.stats.n_eligible << ", fitted " << set.stats.n_fitted << ", retained "
      << set.stats.n_retained << " (retention " << Fixed(100.0 * set.stats.retention(), 1)
      << "%)\n";
  out << "rdd: trim bounds [" << Fixed(set.trim_low) << ", " << Fixed(set.trim_high)
      << "] -> " << csv_path << "\n";
  return kExitOk;
}

int CmdEvaluate(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const std::string dir = flags.out.empty() ? cfg.io.out_dir : flags.out;
  if (cfg.eval.seeds > 1) {
    // Full synthetic loop per seed: generate, train, build the RDD test set
    // and evaluate.
    const int n = cfg.eval.seeds;
    std::vector<EvalOutputs> runs(n);
    ParallelFor(n, cfg.jobs, [&](int k) {
      const uint64_t seed = cfg.seed + static_cast<uint64_t>(k);
      const SynthConfig train_cfg = TrainSynth(cfg, seed);
      const SyntheticData train = Generate(train_cfg);
      const SyntheticData test =
          Generate(HeldOutConfig(train_cfg, cfg.eval.n_test_series));
      const TrainedModels models = TrainModels(cfg, train.dataset, seed);
      RddConfig rdd = cfg.rdd;
      rdd.jobs = 1;
      const CausalTestSet set = BuildCausalTestSet(test.dataset, rdd);
      runs[k] = EvaluateModels(cfg, models, test.oracle.data(), set, &test.oracle);
    });
    std::ostringstream csv, txt;
    csv << "seed," << MetricsCsvHeader() << "\n";
    for (int k = 0; k < n; ++k) {
      csv << cfg.seed + k << ',' << MetricsCsvRow(runs[k].orthogonal) << "\n";
      csv << cfg.seed + k << ',' << MetricsCsvRow(runs[k].direct) << "\n";
    }
    txt << "metric (mean +- std over " << n << " seeds)\n";
    for (const char* tag : {"orthogonal", "direct"}) {
      auto pick = [&](const EvalOutputs& e) {
        return std::string(tag) == "orthogonal" ? e.orthogonal : e.direct;
      };
      auto stat = [&](auto field) {
        double m = 0.0, s = 0.0;
        for (const auto& r : runs) m += field(pick(r));
        m /= n;
        for (const auto& r : runs) s += std::pow(field(pick(r)) - m, 2);
        s = std::sqrt(s / (n - 1));
        return Fixed(m) + " +- " + Fixed(s);
      };
      txt << tag << "\n"
          << "  rmse             " << stat([](const MetricsReport& r) { return r.rmse; }) << "\n"
          << "  mae              " << stat([](const MetricsReport& r) { return r.mae; }) << "\n"
          << "  rdd_rmse         " << stat([](const MetricsReport& r) { return r.rdd_rmse; }) << "\n"
          << "  rdd_mae          " << stat([](const MetricsReport& r) { return r.rdd_mae; }) << "\n"
          << "  oracle_cate_rmse "
          << stat([](const MetricsReport& r) { return r.oracle_cate_rmse.value_or(0.0); })
          << "\n";
    }
    WriteText((fs::path(dir) / "metrics_seeds.csv").string(), csv.str());
    WriteText((fs::path(dir) / "metrics_summary.txt").string(), txt.str());
    out << txt.str();
    return kExitOk;
  }

  const std::string data_path =
      flags.data.empty() ? DefaultData(cfg, "test.jsonl") : flags.data;
  const std::string model_path = flags.model.empty() ? cfg.io.model : flags.model;
  const std::string testset_path = flags.testset.empty() ? cfg.io.testset : flags.testset;
  if (!fs::exists(testset_path)) {
    throw DataError("test set '" + testset_path + "' not found");
  }
  Dataset data = LoadDataset(data_path);
  ApplyEncoding(cfg, &data);
  const TrainedModels models = ModelsFromFile(model_path);
  const CausalTestSet set = LoadTestSet(testset_path);
  const std::optional<SyntheticData> gen = OracleFor(data_path, data);
  const EvalOutputs ev = EvaluateModels(cfg, models, data, set,
                                        gen ? &gen->oracle : nullptr);
  WriteEvalFiles(ev, dir);
  out << MetricsText(ev.orthogonal) << MetricsText(ev.direct);
  if (ev.rdd_skipped > 0) {
    out << "evaluate: " << ev.rdd_skipped
        << " test-set entries skipped (switch before the forecast window)\n";
  }
  out << "evaluate: positive CATE fraction orthogonal "
      << Fixed(ev.hist_orthogonal.positive_fraction, 4) << ", direct "
      << Fixed(ev.hist_direct.positive_fraction, 4) << " -> " << dir << "\n";
  return kExitOk;
}

struct CheckLine {
  std::string name;
  double value;
  double threshold;
  bool pass;
  std::string detail;
};

int CmdCheck(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const std::string dir = flags.out.empty() ? cfg.io.out_dir : flags.out;
  std::vector<CheckLine> lines;

  {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> dim(1, 8);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_rel = 0.0, worst_rank = 0.0;
    for (int c = 0; c < cfg.eval.hessian_cases; ++c) {
      Eigen::VectorXd zeta(dim(rng));
      for (Eigen::Index i = 0; i < zeta.size(); ++i) zeta[i] = normal(rng);
      const HessianCheckResult h =
          RLossHessianCheck(zeta, cfg.eval.hessian_fd_step, cfg.seed + c);
      worst_rel = std::max(worst_rel, std::abs(h.fd_top - h.analytic) / h.analytic);
      worst_rank = std::max(worst_rank, h.second_abs / std::abs(h.fd_top));
    }
    lines.push_back({"hessian_top_eigenvalue_rel_error", worst_rel, 1e-4,
                     worst_rel <= 1e-4, ""});
    lines.push_back({"hessian_second_eigenvalue_ratio", worst_rank, 1e-6,
                     worst_rank <= 1e-6, ""});
  }

  {
    const SyntheticData gen = Generate(TrainSynth(cfg, cfg.seed));
    const int pairs = cfg.eval.orthogonality_pairs;
    std::vector<OrthogonalityResult> rl(pairs), naive(pairs);
    ParallelFor(pairs, cfg.jobs, [&](int p) {
      std::mt19937_64 rng(cfg.seed * 1000 + p);
      const DirectionPair dir = RandomDirections(gen.oracle, rng);
      rl[p] = OrthogonalityCheck(gen.oracle, cfg.eval.orthogonality_samples, dir,
                                 cfg.eval.orthogonality_fd_step, cfg.seed + 17 * p,
                                 CheckedLoss::kRLoss);
      naive[p] = OrthogonalityCheck(gen.oracle, cfg.eval.orthogonality_samples, dir,
                                    cfg.eval.orthogonality_fd_step, cfg.seed + 17 * p,
                                    CheckedLoss::kNaive);
    });
    int ok_r = 0, ok_n = 0;
    double worst_r = 0.0;
    for (int p = 0; p < pairs; ++p) {
      const double zr = std::abs(rl[p].estimate) / rl[p].standard_error;
      const double zn = std::abs(naive[p].estimate) / naive[p].standard_error;
      worst_r = std::max(worst_r, zr);
      ok_r += zr <= 3.0;
      ok_n += zn > 5.0;
    }
    const int need = (9 * pairs + 9) / 10;
    lines.push_back({"orthogonality_rloss_within_3se", static_cast<double>(ok_r),
                     static_cast<double>(need), ok_r >= need,
                     "max |estimate|/SE " + Fixed(worst_r, 3)});
    lines.push_back({"orthogonality_naive_beyond_5se", static_cast<double>(ok_n),
                     static_cast<double>(need), ok_n >= need, ""});
  }

  {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 16, p = 4, k = 3;
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    struct Case {
      const char* name;
      LossKind loss;
      int out_dim;
    };
    for (const Case& c : {Case{"gradient_mse", LossKind::kMse, 2},
                          Case{"gradient_softmax_ce", LossKind::kSoftmaxCrossEntropy, k},
                          Case{"gradient_binary_ce", LossKind::kBinaryCrossEntropyPerDim, k},
                          Case{"gradient_rloss", LossKind::kRLoss, k}}) {
      LearnerSpec spec;
      spec.kind = LearnerKind::kMlp;
      spec.mlp_hidden = {5, 4};
      spec.output_dim = c.out_dim;
      spec.loss = c.loss;
      spec.seed = cfg.seed;
      const FittedModel model = InitializeMlp(p, spec);
      TrainingTargets targets;
      if (c.loss == LossKind::kRLoss) {
        Eigen::VectorXd y(n);
        Eigen::MatrixXd tt(n, k);
        for (int i = 0; i < n; ++i) y[i] = normal(rng);
        for (Eigen::Index i = 0; i < tt.size(); ++i) tt.data()[i] = normal(rng);
        targets = TrainingTargets::Residualized(y, tt);
      } else {
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, c.out_dim);
        for (int i = 0; i < n; ++i) {
          if (c.loss == LossKind::kMse) {
            for (int j = 0; j < c.out_dim; ++j) y(i, j) = normal(rng);
          } else if (c.loss == LossKind::kSoftmaxCrossEntropy) {
            y(i, i % k) = 1.0;
          } else {
            for (int j = 0; j <= i % k; ++j) y(i, j) = 1.0;
          }
        }
        targets = TrainingTargets::Supervised(y);
      }
      const double e = GradientCheck(model, c.loss, x, targets, cfg.eval.gradient_fd_step);
      lines.push_back({c.name, e, 1e-4, e <= 1e-4, ""});
    }
  }

  std::ostringstream txt, csv;
  csv << "check,value,threshold,status\n";
  bool all = true;
  for (const CheckLine& l : lines) {
    all = all && l.pass;
    std::ostringstream v;
    v << std::setprecision(6) << l.value;
    txt << (l.pass ? "PASS " : "FAIL ") << l.name << " = " << v.str()
        << " (threshold " << l.threshold << ")";
    if (!l.detail.empty()) txt << "  " << l.detail;
    txt << "\n";
    csv << l.name << ',' << FormatDouble(l.value) << ',' << FormatDouble(l.threshold)
        << ',' << (l.pass ? "PASS" : "FAIL") << "\n";
  }
  WriteText((fs::path(dir) / "check.txt").string(), txt.str());
  WriteText((fs::path(dir) / "check.csv").string(), csv.str());
  out << txt.str();
  return all ? kExitOk : kExitNumerical;
}

int CmdSweep(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = ResolveConfig(flags);
  const std::string dir = flags.out.empty() ? cfg.io.out_dir : flags.out;
  std::vector<uint64_t> seeds;
  for (int k = 0; k < cfg.eval.sweep_seeds; ++k) seeds.push_back(cfg.seed + k);
  const std::vector<SweepRow> rows =
      ConvergenceSweep(TrainSynth(cfg, cfg.seed), cfg.eval.sweep_ns, cfg.Experiment(), seeds);
  std::ostringstream csv, txt;
  csv << "n_series,orthogonal_rmse,orthogonal_se,direct_rmse,direct_se,failed\n";
  txt << "N        orthogonal            direct\n";
  bool failed = false;
  for (const SweepRow& r : rows) {
    csv << r.n_series << ',' << FormatDouble(r.orthogonal_rmse) << ','
        << FormatDouble(r.orthogonal_se) << ',' << FormatDouble(r.direct_rmse) << ','
        << FormatDouble(r.direct_se) << ',' << (r.failed ? 1 : 0) << "\n";
    if (r.failed) {
      txt << r.n_series << "  FAILED: " << r.error << "\n";
      failed = true;
      continue;
    }
    txt << std::left << std::setw(8) << r.n_series << " " << Fixed(r.orthogonal_rmse, 4)
        << " +- " << Fixed(r.orthogonal_se, 4) << "   " << Fixed(r.direct_rmse, 4)
        << " +- " << Fixed(r.direct_se, 4) << "\n";
  }
  WriteText((fs::path(dir) / "sweep.csv").string(), csv.str());
  WriteText((fs::path(dir) / "sweep.txt").string(), txt.str());
  out << txt.str();
  return failed ? kExitNumerical : kExitOk;
}

void AddCommon(CLI::App* sub, Flags* f) {
  sub->add_option("--config", f->config, "JSON run configuration");
  sub->add_option("--seed", f->seed, "Master seed (overrides the config)");
  sub->add_option("--jobs", f->jobs, "Worker threads (0 = all cores)");
  sub->add_option("--encoding", f->encoding, "one-hot, cumulative or linear");
  sub->add_option("--out", f->out, "Output path");
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Orthogonal causal forecasting and RDD test sets", "orthocast"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic panel and its oracle");
  CLI::App* train = app.add_subcommand("train", "Fit the orthogonal forecaster and direct baseline");
  CLI::App* rdd = app.add_subcommand("rdd", "Build the RDD causal test set");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score models on data and a test set");
  CLI::App* check = app.add_subcommand("check", "Run numerical verification checks");
  CLI::App* sweep = app.add_subcommand("sweep", "Oracle-CATE RMSE across sample sizes");
  for (CLI::App* sub : {synth, train, rdd, evaluate, check, sweep}) AddCommon(sub, &f);
  for (CLI::App* sub : {train, rdd, evaluate}) {
    sub->add_option("--data", f.data, "Dataset file (.jsonl or .csv)");
  }
  train->add_flag("--cross-fit", f.cross_fit, "Average over both fold assignments");
  evaluate->add_option("--model", f.model, "Model artifact from train");
  evaluate->add_option("--testset", f.testset, "Test set CSV from rdd");
  evaluate->add_option("--seeds", f.seeds, "Repeat the synthetic pipeline over seeds");
  evaluate->add_flag("--cross-fit", f.cross_fit, "Cross-fit in the seed loop");
  check->add_option("--fd-step", f.fd_step, "Finite-difference step for all checks");
  sweep->add_flag("--cross-fit", f.cross_fit, "Cross-fit every pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    if (*synth) return CmdSynth(f, out);
    if (*train) return CmdTrain(f, out);
    if (*rdd) return CmdRdd(f, out, err);
    if (*evaluate) return CmdEvaluate(f, out);
    if (*check) return CmdCheck(f, out);
    if (*sweep) return CmdSweep(f, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace orthocast

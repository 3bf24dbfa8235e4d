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

#ifndef ORTHOCAST_TESTS_TEST_UTIL_H_
#define ORTHOCAST_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "orthocast/timeseries.h"

namespace orthocast::testing {

// A valid series with random features, treatments in [1, d] and outcomes.
inline TimeSeries RandomSeries(const std::string& id, int L, int tau, int d,
                               FeatureDims dims, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> level(1, d);
  TimeSeries s;
  s.id = id;
  s.tau = tau;
  for (int i = 0; i < dims.p_s; ++i) s.static_features.push_back(normal(rng));
  s.temporal_features.resize(L, dims.p_x);
  for (Eigen::Index i = 0; i < s.temporal_features.size(); ++i) {
    s.temporal_features.data()[i] = normal(rng);
  }
  for (int t = 0; t < L; ++t) {
    s.treatments.push_back(level(rng));
    s.outcomes.push_back(normal(rng));
  }
  return s;
}

inline Dataset RandomDataset(int n, int L, int tau, int d, FeatureDims dims,
                             uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.d = d;
  ds.dims = dims;
  for (int i = 0; i < n; ++i) {
    ds.series.push_back(RandomSeries("s" + std::to_string(i), L, tau, d, dims, rng));
  }
  return ds;
}

// A fresh scratch directory under the system temp path.
inline std::filesystem::path ScratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("orthocast_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace orthocast::testing

#endif  // ORTHOCAST_TESTS_TEST_UTIL_H_

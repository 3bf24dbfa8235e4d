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

#include "orthocast/encoding.h"

#include <cmath>
#include <string>

#include "orthocast/errors.h"

namespace orthocast {
namespace {

int CheckedIndex(Treatment treatment, int d) {
  if (!std::isfinite(treatment) || treatment != std::round(treatment) ||
      treatment < 1.0 || treatment > static_cast<double>(d)) {
    throw ConfigError("treatment index out of range: " +
                      std::to_string(treatment) + " (d=" + std::to_string(d) +
                      ")");
  }
  return static_cast<int>(treatment);
}

void CheckThetaLength(std::span<const double> theta, EncodingKind kind) {
  if (kind == EncodingKind::kLinear) {
    if (theta.size() != 1) {
      throw ConfigError("linear encoding expects a length-1 theta, got " +
                        std::to_string(theta.size()));
    }
  } else if (theta.size() < 2) {
    throw ConfigError("categorical encodings expect theta of length d >= 2");
  }
}

}  // namespace

int EncodedDimension(EncodingKind kind, int d) {
  return kind == EncodingKind::kLinear ? 1 : d;
}

void EncodeTreatmentInto(Treatment treatment, int d, EncodingKind kind,
                         Eigen::Ref<Eigen::VectorXd> out) {
  switch (kind) {
    case EncodingKind::kLinear:
      if (!std::isfinite(treatment)) {
        throw ConfigError("linear treatment must be finite");
      }
      out[0] = treatment;
      return;
    case EncodingKind::kOneHot: {
      if (d < 2) throw ConfigError("one-hot encoding requires d >= 2");
      const int i = CheckedIndex(treatment, d);
      out.setZero();
      out[i - 1] = 1.0;
      return;
    }
    case EncodingKind::kCumulative: {
      if (d < 2) throw ConfigError("cumulative encoding requires d >= 2");
      const int i = CheckedIndex(treatment, d);
      out.setZero();
      out.head(i).setOnes();
      return;
    }
  }
}

Eigen::VectorXd EncodeTreatment(Treatment treatment, int d,
                                EncodingKind kind) {
  Eigen::VectorXd out(EncodedDimension(kind, d));
  EncodeTreatmentInto(treatment, d, kind, out);
  return out;
}

double CateFromTheta(std::span<const double> theta, Treatment from,
                     Treatment to, EncodingKind kind) {
  return OutcomeShift(theta, to, kind) - OutcomeShift(theta, from, kind);
}

double OutcomeShift(std::span<const double> theta, Treatment treatment,
                    EncodingKind kind) {
  CheckThetaLength(theta, kind);
  const int d = static_cast<int>(theta.size());
  switch (kind) {
    case EncodingKind::kLinear:
      if (!std::isfinite(treatment)) {
        throw ConfigError("linear treatment must be finite");
      }
      return theta[0] * treatment;
    case EncodingKind::kOneHot:
      return theta[CheckedIndex(treatment, d) - 1];
    case EncodingKind::kCumulative: {
      const int i = CheckedIndex(treatment, d);
      double sum = 0.0;
      for (int k = 1; k < i; ++k) sum += theta[k];
      return theta[0] + sum;
    }
  }
  return 0.0;
}

}  // namespace orthocast

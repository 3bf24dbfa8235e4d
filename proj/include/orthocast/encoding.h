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

// Treatment encodings and the conditional average treatment effects implied
// by an effect vector theta under each encoding.
//
//   one-hot     T -> e_T                    CATE(a->b) = theta_b - theta_a
//   cumulative  T -> (1,..,1,0,..,0)        CATE(a->b) = sum_{i=a+1}^{b} theta_i
//               (ones in dims 1..T)         (negated when b < a)
//   linear      T -> [T]                    CATE(a->b) = theta (b - a)
//
// Treatment indices are 1-based. Under the cumulative encoding theta_1 never
// enters a CATE.

#ifndef ORTHOCAST_ENCODING_H_
#define ORTHOCAST_ENCODING_H_

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "orthocast/timeseries.h"

namespace orthocast {

// Length of the encoded vector: d for categorical kinds, 1 for linear.
int EncodedDimension(EncodingKind kind, int d);

// Throws ConfigError when a categorical index is not an integer in [1, d],
// when d < 2 for a categorical kind, or when a linear value is not finite.
Eigen::VectorXd EncodeTreatment(Treatment treatment, int d, EncodingKind kind);

// Writes the encoding into `out` (length EncodedDimension).
void EncodeTreatmentInto(Treatment treatment, int d, EncodingKind kind,
                         Eigen::Ref<Eigen::VectorXd> out);

// Model-implied effect of moving from `from` to `to`.
double CateFromTheta(std::span<const double> theta, Treatment from,
                     Treatment to, EncodingKind kind);

// dot(EncodeTreatment(treatment), theta).
double OutcomeShift(std::span<const double> theta, Treatment treatment,
                    EncodingKind kind);

inline std::span<const double> AsSpan(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

}  // namespace orthocast

#endif  // ORTHOCAST_ENCODING_H_

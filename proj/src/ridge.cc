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

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "orthocast/errors.h"
#include "orthocast/learner.h"

namespace orthocast {
namespace {

// Solves (A) beta = rhs for symmetric positive semi-definite A.
Eigen::MatrixXd SolveNormalEquations(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& rhs,
                                     double lambda, bool allow_pinv) {
  if (a.rows() == 0) return Eigen::MatrixXd::Zero(0, rhs.cols());
  if (lambda > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  // Relative rank threshold on the normal matrix.
  cod.setThreshold(1e-12);
  if (cod.rank() < a.rows()) {
    if (!allow_pinv) {
      throw NumericalError(
          "singular ridge system (rank " + std::to_string(cod.rank()) + " < " +
          std::to_string(a.rows()) +
          ") at lambda = 0; enable the pseudo-inverse fallback or use lambda > 0");
    }
    return cod.solve(rhs);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  return ldlt.solve(rhs);
}

}  // namespace

FittedModel FitRidge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const Eigen::VectorXd& weights, double lambda,
                     bool allow_pinv) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < 1) throw ConfigError("fit_ridge: no rows");
  if (y.rows() != n || weights.size() != n) {
    throw ConfigError("fit_ridge: row count mismatch");
  }
  if (!(lambda >= 0.0)) throw ConfigError("fit_ridge: lambda must be >= 0");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw ConfigError("fit_ridge: weights must be finite and non-negative");
  }
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw ConfigError("fit_ridge: all weights are zero");

  const Eigen::VectorXd w = weights * (static_cast<double>(n) / wsum);
  const double wtot = w.sum();
  const Eigen::RowVectorXd x_mean = (w.transpose() * x) / wtot;
  const Eigen::RowVectorXd y_mean = (w.transpose() * y) / wtot;
  Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::MatrixXd yc = y.rowwise() - y_mean;
  const Eigen::MatrixXd xw = xc.array().colwise() * w.array();

  Eigen::MatrixXd a = xw.transpose() * xc;
  a.diagonal().array() += lambda;
  const Eigen::MatrixXd rhs = xw.transpose() * yc;
  const Eigen::MatrixXd beta = SolveNormalEquations(a, rhs, lambda, allow_pinv);

  LearnerSpec spec;
  spec.kind = LearnerKind::kRidge;
  spec.ridge_lambda = lambda;
  spec.allow_pinv = allow_pinv;
  spec.output_dim = static_cast<int>(y.cols());
  spec.loss = LossKind::kMse;

  DenseLayer layer;
  layer.weight = beta.transpose();  // q x p
  layer.bias = (y_mean - x_mean * beta).transpose();
  return FittedModel(spec, static_cast<int>(p), {std::move(layer)});
}

FittedModel FitRidge(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                     const LearnerSpec& spec) {
  FittedModel fit = FitRidge(x, y, Eigen::VectorXd::Ones(x.rows()),
                             spec.ridge_lambda, spec.allow_pinv);
  LearnerSpec s = spec;
  s.output_dim = static_cast<int>(y.cols());
  return FittedModel(s, fit.input_dim(), fit.layers());
}

Eigen::VectorXd SolveRidgeNoIntercept(const Eigen::MatrixXd& z,
                                      const Eigen::VectorXd& y, double lambda,
                                      bool allow_pinv) {
  Eigen::MatrixXd a = z.transpose() * z;
  a.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = z.transpose() * y;
  return SolveNormalEquations(a, rhs, lambda, allow_pinv);
}

FittedModel FitRidgeRLoss(const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y_tilde,
                          const Eigen::MatrixXd& t_tilde,
                          const LearnerSpec& spec) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index q = t_tilde.cols();
  if (y_tilde.size() != n || t_tilde.rows() != n) {
    throw ConfigError("fit_theta: row count mismatch");
  }
  if (q != spec.output_dim) {
    throw ConfigError("fit_theta: t_tilde has " + std::to_string(q) +
                      " columns, spec.output_dim is " +
                      std::to_string(spec.output_dim));
  }
  const Eigen::Index block = p + 1;
  Eigen::MatrixXd z(n, q * block);
  for (Eigen::Index k = 0; k < q; ++k) {
    z.col(k * block) = t_tilde.col(k);
    z.block(0, k * block + 1, n, p) = x.array().colwise() * t_tilde.col(k).array();
  }
  const Eigen::VectorXd beta =
      SolveRidgeNoIntercept(z, y_tilde, spec.ridge_lambda, spec.allow_pinv);

  DenseLayer layer;
  layer.weight.resize(q, p);
  layer.bias.resize(q);
  for (Eigen::Index k = 0; k < q; ++k) {
    layer.bias[k] = beta[k * block];
    layer.weight.row(k) = beta.segment(k * block + 1, p).transpose();
  }
  LearnerSpec s = spec;
  s.kind = LearnerKind::kRidge;
  s.loss = LossKind::kRLoss;
  return FittedModel(s, static_cast<int>(p), {std::move(layer)});
}

}  // namespace orthocast

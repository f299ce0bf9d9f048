/*
 * Copyright 2026 The qufur-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace qufur {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Number of rank-one updates between full re-inversions of the Gram matrix.
inline constexpr std::size_t kRebuildPeriod = 256;

/// Ridge estimator over the queried examples.
///
/// Holds M^{-1} for M = lambda*I + sum_{i in Q} x_i x_i^T together with the
/// label-weighted sum s = sum y_i x_i. The un-inverted M is accumulated too so
/// that M^{-1} can be recomputed from scratch every kRebuildPeriod updates.
struct RlsState {
  int dim = 0;
  double lambda = 1.0;
  Matrix gram_inv;
  Matrix gram;
  Vector xty;
  std::size_t query_count = 0;
  std::size_t updates_since_rebuild = 0;
};

/// lambda = 1 / C^2, so M^{-1} starts at C^2 * I.
RlsState init_state(int dim, double norm_bound_C);

/// Sherman-Morrison update M <- M + x x^T, s <- s + y x.
void absorb(RlsState& state, const VectorRef& x, double y);

/// ||x||^2_{M^{-1}}.
double quad_form(const RlsState& state, const VectorRef& x);

Vector theta_hat(const RlsState& state);

/// Recompute gram_inv by Cholesky inversion of the accumulated Gram matrix.
void rebuild_inverse(RlsState& state);

}  // namespace qufur

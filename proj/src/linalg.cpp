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

#include "qufur/linalg.hpp"

#include <cmath>
#include <string>

#include "qufur/error.hpp"

namespace qufur {

namespace {

void check_dim(const RlsState& state, const VectorRef& x) {
  if (x.size() != state.dim)
    fail(ErrorKind::InvalidArgument, "dimension mismatch: expected " + std::to_string(state.dim) +
                                         ", got " + std::to_string(x.size()));
}

}  // namespace

RlsState init_state(int dim, double norm_bound_C) {
  require(dim >= 1, "dim must be >= 1");
  require(std::isfinite(norm_bound_C) && norm_bound_C > 0.0, "norm bound C must be positive");
  RlsState s;
  s.dim = dim;
  s.lambda = 1.0 / (norm_bound_C * norm_bound_C);
  s.gram = Matrix::Identity(dim, dim) * s.lambda;
  s.gram_inv = Matrix::Identity(dim, dim) * (norm_bound_C * norm_bound_C);
  s.xty = Vector::Zero(dim);
  return s;
}

void absorb(RlsState& state, const VectorRef& x, double y) {
  check_dim(state, x);
  require(x.allFinite() && std::isfinite(y), "non-finite input to absorb");

  state.gram.noalias() += x * x.transpose();
  state.xty.noalias() += y * x;
  ++state.query_count;

  if (++state.updates_since_rebuild >= kRebuildPeriod) {
    rebuild_inverse(state);
    return;
  }
  const Vector v = state.gram_inv * x;
  const double denom = 1.0 + x.dot(v);
  // outer product v v^T keeps gram_inv exactly symmetric
  state.gram_inv.noalias() -= (v * v.transpose()) / denom;
}

double quad_form(const RlsState& state, const VectorRef& x) {
  check_dim(state, x);
  const double q = x.dot(state.gram_inv * x);
  return q < 0.0 ? 0.0 : q;
}

Vector theta_hat(const RlsState& state) { return state.gram_inv * state.xty; }

void rebuild_inverse(RlsState& state) {
  Eigen::LLT<Matrix> llt(state.gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::Numerical, "Gram matrix lost positive definiteness");
  Matrix inv = llt.solve(Matrix::Identity(state.dim, state.dim));
  state.gram_inv = 0.5 * (inv + inv.transpose());
  state.updates_since_rebuild = 0;
}

}  // namespace qufur

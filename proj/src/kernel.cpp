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

#include "qufur/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "qufur/error.hpp"
#include "qufur/policy.hpp"

namespace qufur {

Kernel Kernel::rbf(double gamma) {
  require(std::isfinite(gamma) && gamma > 0.0, "rbf gamma must be positive");
  return Kernel(Kind::Rbf, gamma);
}

double Kernel::operator()(const VectorRef& a, const VectorRef& b) const {
  if (kind_ == Kind::Linear) return a.dot(b);
  return std::exp(-gamma_ * (a - b).squaredNorm());
}

std::string Kernel::name() const { return kind_ == Kind::Linear ? "linear" : "rbf"; }

KernelState make_kernel_state(const Kernel& kernel, double norm_bound_C) {
  require(std::isfinite(norm_bound_C) && norm_bound_C > 0.0, "norm bound C must be positive");
  KernelState s;
  s.kernel = kernel;
  s.lambda = 1.0 / (norm_bound_C * norm_bound_C);
  s.m_inv = Matrix(0, 0);
  return s;
}

Vector kernel_column(const KernelState& state, const VectorRef& x) {
  Vector k(static_cast<Eigen::Index>(state.queried_inputs.size()));
  for (std::size_t i = 0; i < state.queried_inputs.size(); ++i)
    k[static_cast<Eigen::Index>(i)] = state.kernel(x, state.queried_inputs[i]);
  return k;
}

double kernel_predict(const KernelState& state, const VectorRef& x) {
  if (state.queried_inputs.empty()) return 0.0;
  const Vector k = kernel_column(state, x);
  const Eigen::Map<const Vector> y(state.queried_labels.data(),
                                   static_cast<Eigen::Index>(state.queried_labels.size()));
  return clip(k.dot(state.m_inv * y));
}

double kernel_uncertainty(const KernelState& state, const VectorRef& x, double eta) {
  double inner = state.kernel(x, x);
  if (!state.queried_inputs.empty()) {
    const Vector k = kernel_column(state, x);
    inner -= k.dot(state.m_inv * k);
  }
  if (inner < -1e-9) fail(ErrorKind::Numerical, "negative posterior variance in kernel uncertainty");
  if (inner < 0.0) inner = 0.0;
  const double et = eta > 1.0 ? eta : 1.0;
  return et * et * std::min(1.0, inner / state.lambda);
}

void kernel_absorb(KernelState& state, const VectorRef& x, double y) {
  require(x.allFinite() && std::isfinite(y), "non-finite input to kernel_absorb");
  if (state.queried_inputs.size() >= kMaxKernelQueries)
    fail(ErrorKind::ResourceLimit, "kernel state exceeds the query cap");

  const Vector b = kernel_column(state, x);
  const double c = state.kernel(x, x) + state.lambda;
  const Eigen::Index n = b.size();

  state.queried_inputs.emplace_back(x);
  state.queried_labels.push_back(y);

  if (++state.updates_since_rebuild >= kRebuildPeriod) {
    kernel_rebuild(state);
    return;
  }

  const Vector u = state.m_inv * b;
  const double schur = c - b.dot(u);
  if (!(schur > 0.0)) fail(ErrorKind::Numerical, "non-positive Schur complement in kernel_absorb");

  Matrix grown(n + 1, n + 1);
  grown.topLeftCorner(n, n) = state.m_inv + (u * u.transpose()) / schur;
  grown.topRightCorner(n, 1) = -u / schur;
  grown.bottomLeftCorner(1, n) = -u.transpose() / schur;
  grown(n, n) = 1.0 / schur;
  state.m_inv = std::move(grown);
}

void kernel_rebuild(KernelState& state) {
  const auto n = static_cast<Eigen::Index>(state.queried_inputs.size());
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      a(i, j) = a(j, i) = state.kernel(state.queried_inputs[i], state.queried_inputs[j]);
  a.diagonal().array() += state.lambda;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) fail(ErrorKind::Numerical, "kernel Gram matrix is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(n, n));
  state.m_inv = 0.5 * (inv + inv.transpose());
  state.updates_since_rebuild = 0;
}

int effective_dimension(const std::vector<double>& eigvals, double lambda, int s) {
  if (s < 2) fail(ErrorKind::InvalidArgument, "effective dimension needs s >= 2");
  require(!eigvals.empty(), "effective dimension needs at least one eigenvalue");
  require(lambda > 0.0, "lambda must be positive");
  for (std::size_t i = 0; i < eigvals.size(); ++i) {
    require(eigvals[i] >= lambda, "eigenvalues must be >= lambda");
    require(i == 0 || eigvals[i] <= eigvals[i - 1], "eigenvalues must be sorted non-increasing");
  }
  const double log_s = std::log(static_cast<double>(s));
  // tail[j] = Lambda_{s,j} = sum over 1-based i > j
  std::vector<double> tail(eigvals.size() + 1, 0.0);
  for (std::size_t j = eigvals.size(); j-- > 0;) tail[j] = tail[j + 1] + (eigvals[j] - lambda);
  for (std::size_t j = 1; j <= eigvals.size(); ++j)
    if (static_cast<double>(j) * lambda * log_s > tail[j]) return static_cast<int>(j);
  return static_cast<int>(eigvals.size());
}

std::vector<double> regularized_gram_eigenvalues(const Kernel& kernel, const std::vector<Vector>& inputs,
                                                 double lambda) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = kernel(inputs[i], inputs[j]);
  a.diagonal().array() += lambda;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
  // round-off can put a zero-mode a hair below lambda
  for (double& v : ev) v = std::max(v, lambda);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

}  // namespace qufur

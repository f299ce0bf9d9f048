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
#include <string>
#include <vector>

#include "qufur/linalg.hpp"

namespace qufur {

/// Hard cap on the dual representation size; memory is O(Q^2).
inline constexpr std::size_t kMaxKernelQueries = 2000;

class Kernel {
 public:
  enum class Kind { Linear, Rbf };

  static Kernel linear() { return Kernel(Kind::Linear, 0.0); }
  static Kernel rbf(double gamma);

  double operator()(const VectorRef& a, const VectorRef& b) const;

  Kind kind() const noexcept { return kind_; }
  double gamma() const noexcept { return gamma_; }
  std::string name() const;

 private:
  Kernel(Kind kind, double gamma) : kind_(kind), gamma_(gamma) {}
  Kind kind_;
  double gamma_;
};

/// Dual-form ridge state over the queried inputs: m_inv = (lambda I + K)^{-1}.
struct KernelState {
  Kernel kernel = Kernel::linear();
  double lambda = 1.0;
  std::vector<Vector> queried_inputs;
  std::vector<double> queried_labels;
  Matrix m_inv;
  std::size_t updates_since_rebuild = 0;
};

KernelState make_kernel_state(const Kernel& kernel, double norm_bound_C);

/// [k(x, x_i)] over the queried inputs, in query order.
Vector kernel_column(const KernelState& state, const VectorRef& x);

double kernel_predict(const KernelState& state, const VectorRef& x);

/// eta_tilde^2 * min(1, (k(x,x) - k^T m_inv k) / lambda). Throws a numerical
/// error when the posterior variance comes out below -1e-9.
double kernel_uncertainty(const KernelState& state, const VectorRef& x, double eta);

/// Grows (lambda I + K)^{-1} by one row and column via the Schur complement.
void kernel_absorb(KernelState& state, const VectorRef& x, double y);

/// Direct re-inversion of lambda I + K.
void kernel_rebuild(KernelState& state);

/// min{ j >= 1 : j * lambda * ln(s) > sum_{i > j} (eig_i - lambda) }.
/// `eigvals` must be sorted non-increasing with every entry >= lambda.
int effective_dimension(const std::vector<double>& eigvals, double lambda, int s);

/// Eigenvalues of K + lambda I over `inputs`, sorted non-increasing.
std::vector<double> regularized_gram_eigenvalues(const Kernel& kernel, const std::vector<Vector>& inputs,
                                                 double lambda);

}  // namespace qufur

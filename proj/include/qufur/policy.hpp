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
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qufur/linalg.hpp"
#include "qufur/random.hpp"

namespace qufur {

struct PolicyConfig {
  double alpha = 0.0;
  double noise_level = 0.0;  // eta
  double norm_bound_C = 1.0;
  std::optional<std::size_t> budget;
  std::size_t horizon = 1;
  double confidence_delta = 0.1;  // delta in (0, 1), general-class learner only

  double eta_tilde() const noexcept { return noise_level > 1.0 ? noise_level : 1.0; }

  /// Budget clamped to the horizon; nullopt means unlimited.
  std::optional<std::size_t> effective_budget() const noexcept {
    if (!budget) return std::nullopt;
    return *budget < horizon ? *budget : horizon;
  }

  void validate() const;
};

struct RoundDecision {
  double prediction = 0.0;
  double delta = 0.0;
  double query_prob = 0.0;
  bool queried = false;
};

inline double clip(double z) noexcept { return z < -1.0 ? -1.0 : (z > 1.0 ? 1.0 : z); }

/// clip(<theta_hat, x>).
double predict(const RlsState& state, const VectorRef& x);

/// eta_tilde^2 * min(1, ||x||^2_{M^{-1}}).
double uncertainty(const RlsState& state, const VectorRef& x, double eta);

/// One round of QuFUR(alpha). Budget exhaustion is read off state.query_count.
RoundDecision qufur_step(const RlsState& state, const PolicyConfig& cfg, const VectorRef& x,
                         const RandomSource& rng, std::uint64_t round);

/// Budget bookkeeping shared by the linear and the general-class master
/// algorithms: a geometric alpha grid, one budget slice per copy, and a global
/// hard stop at the total budget.
struct CopyBank {
  struct Copy {
    double alpha = 0.0;
    std::size_t spent = 0;
  };
  std::vector<Copy> copies;
  std::size_t per_copy_budget = 0;
  std::size_t budget = 0;
  std::size_t total_spent = 0;

  /// Copies i = 0..k with alpha_i = 2^i / T^2 and floor(B / (k+1)) labels each.
  static CopyBank make(std::size_t k, std::size_t horizon, std::size_t budget);

  /// Each copy with budget left flips its own coin (lane i+1 of `round`).
  /// Returns the probability that at least one active copy fires and whether
  /// a query happens; spends budget accordingly.
  std::pair<double, bool> decide(double delta, const RandomSource& rng, std::uint64_t round);
};

/// ceil(3 log2 T), computed exactly as the least k with 2^k >= T^3.
std::size_t linear_master_k(std::size_t horizon);

/// 3 ceil(log2 T).
std::size_t general_master_k(std::size_t horizon);

struct MasterState {
  CopyBank bank;
  RlsState shared_rls;
};

/// Requires cfg.budget.
MasterState make_master(const PolicyConfig& cfg, int dim);

/// One round of Fixed-Budget QuFUR. The caller absorbs (x, y) into
/// master.shared_rls when the returned decision is a query.
RoundDecision fixed_budget_step(MasterState& master, const PolicyConfig& cfg, const VectorRef& x,
                                const RandomSource& rng, std::uint64_t round);

struct DomainSize {
  int dim = 1;               // d_u
  std::size_t duration = 1;  // T_u
};

/// Domain-aware rates mu_u = min(1, C * sqrt(d_u / T_u)) with C chosen so
/// that sum_u mu_u T_u = min(B, sum_u T_u).
std::vector<double> oracle_rates(const std::vector<DomainSize>& domains, double budget);

/// Bernoulli(p) unless no budget remains.
bool bernoulli_query(double p, std::size_t remaining_budget, const RandomSource& rng,
                     std::uint64_t round);

}  // namespace qufur

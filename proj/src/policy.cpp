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

#include "qufur/policy.hpp"

#include <algorithm>
#include <cmath>

#include "qufur/error.hpp"

namespace qufur {

void PolicyConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::Config, "alpha must be finite and >= 0");
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) fail(ErrorKind::Config, "eta must be >= 0");
  if (!(norm_bound_C > 0.0) || !std::isfinite(norm_bound_C)) fail(ErrorKind::Config, "C must be > 0");
  if (horizon == 0) fail(ErrorKind::Config, "horizon must be >= 1");
  if (!(confidence_delta > 0.0 && confidence_delta < 1.0)) fail(ErrorKind::Config, "delta must lie in (0, 1)");
}

double predict(const RlsState& state, const VectorRef& x) {
  require(x.size() == state.dim, "dimension mismatch in predict");
  return clip(theta_hat(state).dot(x));
}

double uncertainty(const RlsState& state, const VectorRef& x, double eta) {
  const double et = eta > 1.0 ? eta : 1.0;
  return et * et * std::min(1.0, quad_form(state, x));
}

RoundDecision qufur_step(const RlsState& state, const PolicyConfig& cfg, const VectorRef& x,
                         const RandomSource& rng, std::uint64_t round) {
  RoundDecision d;
  d.prediction = predict(state, x);
  d.delta = uncertainty(state, x, cfg.noise_level);
  d.query_prob = std::min(1.0, cfg.alpha * d.delta);
  if (auto b = cfg.effective_budget(); b && state.query_count >= *b) {
    d.query_prob = 0.0;
    return d;
  }
  d.queried = rng.bernoulli_at(d.query_prob, round, 0);
  return d;
}

CopyBank CopyBank::make(std::size_t k, std::size_t horizon, std::size_t budget) {
  CopyBank bank;
  const double t2 = static_cast<double>(horizon) * static_cast<double>(horizon);
  bank.copies.reserve(k + 1);
  for (std::size_t i = 0; i <= k; ++i)
    bank.copies.push_back({std::ldexp(1.0, static_cast<int>(i)) / t2, 0});
  bank.budget = budget;
  bank.per_copy_budget = budget / (k + 1);
  return bank;
}

std::pair<double, bool> CopyBank::decide(double delta, const RandomSource& rng, std::uint64_t round) {
  if (total_spent >= budget) return {0.0, false};
  double none_fires = 1.0;
  bool any = false;
  for (std::size_t i = 0; i < copies.size(); ++i) {
    Copy& c = copies[i];
    if (c.spent >= per_copy_budget) continue;
    const double p = std::min(1.0, c.alpha * delta);
    none_fires *= 1.0 - p;
    if (rng.bernoulli_at(p, round, i + 1)) {
      ++c.spent;
      any = true;
    }
  }
  if (any) ++total_spent;
  return {1.0 - none_fires, any};
}

std::size_t linear_master_k(std::size_t horizon) {
  require(horizon >= 1, "horizon must be >= 1");
  const unsigned __int128 cube = static_cast<unsigned __int128>(horizon) * horizon * horizon;
  std::size_t k = 0;
  unsigned __int128 p = 1;
  while (p < cube) {
    p <<= 1;
    ++k;
  }
  return k;
}

std::size_t general_master_k(std::size_t horizon) {
  require(horizon >= 1, "horizon must be >= 1");
  std::size_t c = 0;
  std::size_t p = 1;
  while (p < horizon) {
    p <<= 1;
    ++c;
  }
  return 3 * c;
}

MasterState make_master(const PolicyConfig& cfg, int dim) {
  cfg.validate();
  if (!cfg.budget) fail(ErrorKind::Config, "fixed-budget policy requires a budget");
  MasterState m;
  m.bank = CopyBank::make(linear_master_k(cfg.horizon), cfg.horizon, *cfg.effective_budget());
  m.shared_rls = init_state(dim, cfg.norm_bound_C);
  return m;
}

RoundDecision fixed_budget_step(MasterState& master, const PolicyConfig& cfg, const VectorRef& x,
                                const RandomSource& rng, std::uint64_t round) {
  RoundDecision d;
  d.prediction = predict(master.shared_rls, x);
  d.delta = uncertainty(master.shared_rls, x, cfg.noise_level);
  std::tie(d.query_prob, d.queried) = master.bank.decide(d.delta, rng, round);
  return d;
}

std::vector<double> oracle_rates(const std::vector<DomainSize>& domains, double budget) {
  require(!domains.empty(), "oracle_rates needs at least one domain");
  require(budget >= 0.0, "budget must be >= 0");
  double total = 0.0;
  double c_hi = 0.0;
  for (const auto& u : domains) {
    require(u.dim >= 1 && u.duration >= static_cast<std::size_t>(u.dim), "need 1 <= d_u <= T_u");
    total += static_cast<double>(u.duration);
    c_hi = std::max(c_hi, std::sqrt(static_cast<double>(u.duration) / u.dim));
  }
  const double target = std::min(budget, total);

  auto rates_for = [&](double c) {
    std::vector<double> mu;
    mu.reserve(domains.size());
    for (const auto& u : domains)
      mu.push_back(std::min(1.0, c * std::sqrt(static_cast<double>(u.dim) / u.duration)));
    return mu;
  };
  auto spend = [&](double c) {
    double s = 0.0;
    const auto mu = rates_for(c);
    for (std::size_t i = 0; i < mu.size(); ++i) s += mu[i] * domains[i].duration;
    return s;
  };

  if (target >= total) return std::vector<double>(domains.size(), 1.0);
  if (target <= 0.0) return std::vector<double>(domains.size(), 0.0);

  double lo = 0.0;
  double hi = c_hi;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (spend(mid) < target ? lo : hi) = mid;
  }
  return rates_for(0.5 * (lo + hi));
}

bool bernoulli_query(double p, std::size_t remaining_budget, const RandomSource& rng,
                     std::uint64_t round) {
  require(p >= 0.0 && p <= 1.0, "query probability outside [0, 1]");
  if (remaining_budget == 0) return false;
  return rng.bernoulli_at(p, round, 0);
}

}  // namespace qufur

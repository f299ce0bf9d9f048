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

// Learner adapters, the episode loop and per-episode metrics.

#include <algorithm>
#include <cmath>
#include <map>

#include "qufur/error.hpp"
#include "qufur/harness.hpp"

namespace qufur {

namespace {

class RidgeLearner : public Learner {
 public:
  RidgeLearner(const PolicyConfig& cfg, int dim, std::uint64_t seed)
      : cfg_(cfg), rls_(init_state(dim, cfg.norm_bound_C)), rng_(seed) {}

  void observe(const LearnerInput& in, double label) override { absorb(rls_, *in.x, label); }
  std::optional<double> last_quad() const override { return quad_; }

 protected:
  PolicyConfig cfg_;
  RlsState rls_;
  RandomSource rng_;
  double quad_ = 0.0;
};

class QufurLearner final : public RidgeLearner {
 public:
  using RidgeLearner::RidgeLearner;

  RoundDecision decide(const LearnerInput& in, std::uint64_t round) override {
    quad_ = quad_form(rls_, *in.x);
    return qufur_step(rls_, cfg_, *in.x, rng_, round);
  }
};

// Constant-rate querying: uniform (mu), greedy (mu = 1) and the domain-aware
// oracle (mu looked up by the true domain id).
class RateLearner final : public RidgeLearner {
 public:
  RateLearner(const PolicyConfig& cfg, int dim, std::uint64_t seed, double mu)
      : RidgeLearner(cfg, dim, seed), mu_(mu) {}
  RateLearner(const PolicyConfig& cfg, int dim, std::uint64_t seed, std::map<int, double> rates)
      : RidgeLearner(cfg, dim, seed), rates_(std::move(rates)) {}

  RoundDecision decide(const LearnerInput& in, std::uint64_t round) override {
    quad_ = quad_form(rls_, *in.x);
    RoundDecision d;
    d.prediction = predict(rls_, *in.x);
    d.delta = uncertainty(rls_, *in.x, cfg_.noise_level);
    double mu = mu_;
    if (!rates_.empty()) {
      if (!in.domain_hint) fail(ErrorKind::InvalidState, "oracle baseline needs domain ids");
      const auto it = rates_.find(*in.domain_hint);
      mu = it == rates_.end() ? 0.0 : it->second;
    }
    const auto budget = cfg_.effective_budget();
    const std::size_t remaining =
        budget ? (*budget > rls_.query_count ? *budget - rls_.query_count : 0) : cfg_.horizon;
    d.query_prob = remaining == 0 ? 0.0 : mu;
    d.queried = bernoulli_query(mu, remaining, rng_, round);
    return d;
  }

  bool needs_domain_ids() const override { return !rates_.empty(); }

 private:
  double mu_ = 0.0;
  std::map<int, double> rates_;
};

class FixedBudgetLearner final : public Learner {
 public:
  FixedBudgetLearner(const PolicyConfig& cfg, int dim, std::uint64_t seed)
      : cfg_(cfg), master_(make_master(cfg, dim)), rng_(seed) {}

  RoundDecision decide(const LearnerInput& in, std::uint64_t round) override {
    quad_ = quad_form(master_.shared_rls, *in.x);
    return fixed_budget_step(master_, cfg_, *in.x, rng_, round);
  }
  void observe(const LearnerInput& in, double label) override { absorb(master_.shared_rls, *in.x, label); }
  std::optional<double> last_quad() const override { return quad_; }

 private:
  PolicyConfig cfg_;
  MasterState master_;
  RandomSource rng_;
  double quad_ = 0.0;
};

class KernelLearner final : public Learner {
 public:
  KernelLearner(const PolicyConfig& cfg, const Kernel& kernel, std::uint64_t seed)
      : cfg_(cfg), state_(make_kernel_state(kernel, cfg.norm_bound_C)), rng_(seed) {}

  RoundDecision decide(const LearnerInput& in, std::uint64_t round) override {
    RoundDecision d;
    d.prediction = kernel_predict(state_, *in.x);
    d.delta = kernel_uncertainty(state_, *in.x, cfg_.noise_level);
    d.query_prob = std::min(1.0, cfg_.alpha * d.delta);
    if (auto b = cfg_.effective_budget(); b && state_.queried_inputs.size() >= *b) {
      d.query_prob = 0.0;
      return d;
    }
    d.queried = rng_.bernoulli_at(d.query_prob, round, 0);
    return d;
  }
  void observe(const LearnerInput& in, double label) override { kernel_absorb(state_, *in.x, label); }

 private:
  PolicyConfig cfg_;
  KernelState state_;
  RandomSource rng_;
};

class FiniteClassLearner final : public Learner {
 public:
  FiniteClassLearner(const PolicyConfig& cfg, const HypothesisTable& table, std::uint64_t seed, bool master)
      : cfg_(cfg), table_(table), rng_(seed) {
    if (master) {
      master_ = make_nonlinear_master(table, cfg);
    } else {
      const double t = static_cast<double>(cfg.horizon);
      cover_size_ = covering_number(table, 1.0 / (t * t));
    }
  }

  RoundDecision decide(const LearnerInput& in, std::uint64_t round) override {
    if (master_) return nonlinear_master_step(*master_, table_, cfg_, in.x_id, rng_, round);
    return nonlinear_qufur_step(table_, labeled_, cfg_, cover_size_, in.x_id, rng_, round);
  }
  void observe(const LearnerInput& in, double label) override {
    (master_ ? master_->labeled : labeled_).push_back({in.x_id, label});
  }

 private:
  PolicyConfig cfg_;
  const HypothesisTable& table_;
  RandomSource rng_;
  std::optional<NonlinearMaster> master_;
  std::vector<LabeledPoint> labeled_;
  std::size_t cover_size_ = 1;
};

bool is_vector_policy(PolicyKind k) { return k != PolicyKind::Nonlinear; }

}  // namespace

namespace {

std::unique_ptr<Learner> build_learner(const PolicySpec& spec, const PolicyConfig& cfg, int dim, std::uint64_t seed,
                                       const HypothesisTable* table, const Stream* stream) {
  if (is_vector_policy(spec.kind) && dim < 1)
    fail(ErrorKind::Config, "policy '" + policy_kind_name(spec.kind) + "' needs vector inputs");

  switch (spec.kind) {
    case PolicyKind::Qufur:
      return std::make_unique<QufurLearner>(cfg, dim, seed);
    case PolicyKind::FixedBudget:
      return std::make_unique<FixedBudgetLearner>(cfg, dim, seed);
    case PolicyKind::Uniform: {
      double mu = 0.0;
      if (spec.mu) {
        mu = *spec.mu;
      } else if (auto b = cfg.effective_budget()) {
        mu = static_cast<double>(*b) / static_cast<double>(cfg.horizon);
      } else {
        fail(ErrorKind::Config, "uniform policy needs 'mu' or 'budget'");
      }
      if (!(mu >= 0.0 && mu <= 1.0)) fail(ErrorKind::Config, "'mu' must lie in [0, 1]");
      return std::make_unique<RateLearner>(cfg, dim, seed, mu);
    }
    case PolicyKind::Greedy:
      return std::make_unique<RateLearner>(cfg, dim, seed, 1.0);
    case PolicyKind::Oracle: {
      const auto b = cfg.effective_budget();
      if (!b) fail(ErrorKind::Config, "oracle policy needs 'budget'");
      if (!stream) fail(ErrorKind::Config, "oracle policy needs a stream with domain ids");
      const auto domains = observed_domains(*stream);
      std::vector<DomainSize> sizes;
      for (const auto& [id, ds] : domains) sizes.push_back(ds);
      const auto mu = oracle_rates(sizes, static_cast<double>(*b));
      std::map<int, double> rates;
      for (std::size_t i = 0; i < domains.size(); ++i) rates[domains[i].first] = mu[i];
      return std::make_unique<RateLearner>(cfg, dim, seed, std::move(rates));
    }
    case PolicyKind::KernelQufur:
      return std::make_unique<KernelLearner>(cfg, spec.kernel, seed);
    case PolicyKind::Nonlinear: {
      if (!table) fail(ErrorKind::Config, "nonlinear policy needs a finite_class environment");
      const bool master = cfg.budget.has_value() && !spec.alpha_given;
      return std::make_unique<FiniteClassLearner>(cfg, *table, seed, master);
    }
  }
  fail(ErrorKind::Config, "unknown policy kind");
}

}  // namespace

std::unique_ptr<Learner> make_learner(const PolicySpec& spec, const Stream& stream, std::uint64_t seed,
                                      const HypothesisTable* table) {
  PolicyConfig cfg = spec.cfg;
  cfg.horizon = std::max<std::size_t>(1, stream.rounds.size());
  if (!spec.eta_given) cfg.noise_level = stream.truth.noise_eta;
  cfg.validate();
  if (is_vector_policy(spec.kind))
    for (const auto& r : stream.rounds)
      if (r.x.size() != stream.dim) fail(ErrorKind::Config, "stream input dimension mismatch");
  return build_learner(spec, cfg, stream.dim, seed, table, &stream);
}

std::unique_ptr<Learner> make_learner(const PolicySpec& spec, int dim, std::size_t horizon, std::uint64_t seed) {
  PolicyConfig cfg = spec.cfg;
  cfg.horizon = std::max<std::size_t>(1, horizon);
  cfg.validate();
  return build_learner(spec, cfg, dim, seed, nullptr, nullptr);
}

EpisodeLog run_episode(const Stream& stream, const PolicySpec& spec, std::uint64_t seed,
                       std::optional<double> cost_c, const HypothesisTable* table) {
  auto learner = make_learner(spec, stream, seed, table);

  EpisodeLog log;
  log.policy_name = spec.label.empty() ? policy_kind_name(spec.kind) : spec.label;
  log.seed = seed;
  log.stream_hash = stream.hash();
  log.rounds.reserve(stream.rounds.size());

  const bool give_domain = learner->needs_domain_ids();
  for (std::size_t t = 0; t < stream.rounds.size(); ++t) {
    const StreamRound& r = stream.rounds[t];
    LearnerInput in;
    in.x = &r.x;
    in.x_id = r.x_id;
    if (give_domain) in.domain_hint = r.domain_id;

    const RoundDecision d = learner->decide(in, t);

    RoundRecord rec;
    rec.t = r.t;
    rec.domain_id = r.domain_id;
    rec.prediction = d.prediction;
    rec.delta = d.delta;
    rec.query_prob = d.query_prob;
    rec.queried = d.queried;
    rec.loss = (d.prediction - r.label) * (d.prediction - r.label);
    rec.label = r.label;
    rec.true_mean = r.true_mean;
    rec.quad = learner->last_quad();
    log.rounds.push_back(rec);

    if (d.queried) {
      learner->observe(in, r.label);
      ++log.totals.queries;
    }
  }

  const Regret reg = compute_regret(log, stream, spec.cfg.norm_bound_C);
  log.totals.regret_R = reg.R;
  log.totals.regret_Reg = reg.Reg;
  for (const auto& rec : log.rounds) log.totals.total_loss += rec.loss;
  if (cost_c && reg.R) log.totals.cost_W = compute_cost(log, *cost_c);
  return log;
}

Regret compute_regret(const EpisodeLog& log, const Stream& stream, double norm_bound_C) {
  require(log.rounds.size() == stream.rounds.size(), "log and stream lengths differ");
  Regret out;
  double loss = 0.0;
  for (const auto& rec : log.rounds) loss += (rec.prediction - rec.label) * (rec.prediction - rec.label);

  if (stream.has_true_mean()) {
    double r = 0.0;
    double noise = 0.0;
    for (const auto& rec : log.rounds) {
      r += (rec.prediction - *rec.true_mean) * (rec.prediction - *rec.true_mean);
      noise += (*rec.true_mean - rec.label) * (*rec.true_mean - rec.label);
    }
    out.R = r;
    out.Reg = loss - noise;
    return out;
  }

  // No ground truth: compare against the clipped hindsight ridge fit.
  if (stream.dim < 1) fail(ErrorKind::InvalidState, "cannot form a comparator without true means");
  RlsState all = init_state(stream.dim, norm_bound_C);
  for (const auto& r : stream.rounds) absorb(all, r.x, r.label);
  rebuild_inverse(all);
  const Vector theta = theta_hat(all);
  double comparator = 0.0;
  for (std::size_t t = 0; t < stream.rounds.size(); ++t) {
    const double f = clip(theta.dot(stream.rounds[t].x));
    comparator += (f - stream.rounds[t].label) * (f - stream.rounds[t].label);
  }
  out.Reg = loss - comparator;
  return out;
}

double compute_cost(const EpisodeLog& log, double c) {
  if (!log.totals.regret_R) fail(ErrorKind::InvalidState, "cost needs R, which is unavailable for this stream");
  return c * *log.totals.regret_R + static_cast<double>(log.totals.queries);
}

std::vector<LogDetCheck> logdet_check(const EpisodeLog& log, const Stream& stream, double norm_bound_C) {
  require(log.rounds.size() == stream.rounds.size(), "log and stream lengths differ");
  std::map<int, LogDetCheck> by_domain;
  std::map<int, Matrix> scatter;
  const double c2 = norm_bound_C * norm_bound_C;
  for (std::size_t t = 0; t < log.rounds.size(); ++t) {
    const auto& rec = log.rounds[t];
    auto& chk = by_domain[rec.domain_id];
    chk.domain_id = rec.domain_id;
    auto [it, fresh] = scatter.try_emplace(rec.domain_id);
    if (fresh) it->second = Matrix::Zero(stream.dim, stream.dim);
    if (!rec.queried) continue;
    if (!rec.quad) fail(ErrorKind::InvalidState, "log has no ridge snapshots");
    ++chk.queries;
    chk.lhs += std::min(1.0, *rec.quad);
    it->second.noalias() += stream.rounds[t].x * stream.rounds[t].x.transpose();
  }
  std::vector<LogDetCheck> out;
  for (auto& [id, chk] : by_domain) {
    Matrix a = Matrix::Identity(stream.dim, stream.dim) + c2 * scatter[id];
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) fail(ErrorKind::Numerical, "log-det matrix not positive definite");
    chk.rhs = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    out.push_back(chk);
  }
  return out;
}

}  // namespace qufur

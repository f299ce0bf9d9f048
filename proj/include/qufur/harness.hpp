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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qufur/env.hpp"
#include "qufur/kernel.hpp"
#include "qufur/nonlinear.hpp"
#include "qufur/policy.hpp"

namespace qufur {

enum class PolicyKind { Qufur, FixedBudget, Uniform, Greedy, Oracle, KernelQufur, Nonlinear };

PolicyKind parse_policy_kind(const std::string& name);
std::string policy_kind_name(PolicyKind kind);

struct PolicySpec {
  PolicyKind kind = PolicyKind::Qufur;
  std::string label;  // name used in logs and CSVs
  PolicyConfig cfg;   // cfg.horizon is filled in from the stream
  bool eta_given = false;
  bool alpha_given = false;
  std::optional<double> mu;  // uniform query rate
  Kernel kernel = Kernel::linear();
};

/// Parses one policy object. Unknown keys are configuration errors.
PolicySpec parse_policy(const nlohmann::json& j);

/// The parameter a policy kind is identified by in sweeps and seed derivation.
std::string primary_param_name(const PolicySpec& spec);
double primary_param_value(const PolicySpec& spec);

enum class EnvironmentKind { Synthetic, LowerBound, Replay, FiniteClass };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::Synthetic;
  DomainSpec domains;
  int ambient_dim = 0;
  double eta = 0.0;
  std::string replay_path;
  std::shared_ptr<const HypothesisTable> table;
  std::size_t truth_index = 0;
  std::size_t horizon = 0;  // finite-class streams without domains
  std::vector<std::vector<std::size_t>> domain_supports;
  std::vector<std::size_t> domain_lengths;
};

/// `base_dir` resolves relative file paths inside the environment object.
EnvironmentSpec parse_environment(const nlohmann::json& j, const std::string& base_dir = ".");
Stream make_stream(const EnvironmentSpec& env, std::uint64_t seed);

/// What a learner is allowed to see before deciding: never the label, never
/// the true mean. The domain id is filled in only for the oracle baseline.
struct LearnerInput {
  const Vector* x = nullptr;
  std::size_t x_id = 0;
  std::optional<int> domain_hint;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual RoundDecision decide(const LearnerInput& in, std::uint64_t round) = 0;
  /// Called with the revealed label only after a query.
  virtual void observe(const LearnerInput& in, double label) = 0;
  /// ||x||^2_{M^{-1}} evaluated by the last decide(), when the learner keeps
  /// a primal ridge state.
  virtual std::optional<double> last_quad() const { return std::nullopt; }
  virtual bool needs_domain_ids() const { return false; }
};

std::unique_ptr<Learner> make_learner(const PolicySpec& spec, const Stream& stream, std::uint64_t seed,
                                      const HypothesisTable* table = nullptr);
/// Stream-free construction for callers that drive rounds themselves; eta
/// comes from the spec. Oracle and nonlinear policies need a stream.
std::unique_ptr<Learner> make_learner(const PolicySpec& spec, int dim, std::size_t horizon, std::uint64_t seed);

struct RoundRecord {
  std::size_t t = 0;
  int domain_id = 0;
  double prediction = 0.0;
  double delta = 0.0;
  double query_prob = 0.0;
  bool queried = false;
  double loss = 0.0;  // (prediction - y)^2
  double label = 0.0;
  std::optional<double> true_mean;
  std::optional<double> quad;
};

struct EpisodeTotals {
  std::size_t queries = 0;
  std::optional<double> regret_R;
  double regret_Reg = 0.0;
  double total_loss = 0.0;
  std::optional<double> cost_W;
};

struct EpisodeLog {
  std::vector<RoundRecord> rounds;
  EpisodeTotals totals;
  std::string policy_name;
  std::uint64_t seed = 0;
  std::uint64_t stream_hash = 0;
  std::string config_snapshot;
};

/// Strict per-round protocol: reveal x, predict, query decision, reveal the
/// label only if queried, update.
EpisodeLog run_episode(const Stream& stream, const PolicySpec& spec, std::uint64_t seed,
                       std::optional<double> cost_c = std::nullopt, const HypothesisTable* table = nullptr);

struct Regret {
  std::optional<double> R;
  double Reg = 0.0;
};

/// R = sum (yhat - f*)^2 when every true mean is known. Reg compares against
/// f*; without true means it compares against the hindsight ridge fit over all
/// labels (lambda = 1 / C^2).
Regret compute_regret(const EpisodeLog& log, const Stream& stream, double norm_bound_C = 1.0);

/// c * R + Q. Throws InvalidState when R is unavailable.
double compute_cost(const EpisodeLog& log, double c);

struct LogDetCheck {
  int domain_id = 0;
  std::size_t queries = 0;
  double lhs = 0.0;  // sum over queried rounds of min(1, ||x_t||^2_{M_t^{-1}})
  double rhs = 0.0;  // ln det(I + C^2 sum x_t x_t^T)
};

/// Per-domain elliptical-potential sums from the logged M_t snapshots.
std::vector<LogDetCheck> logdet_check(const EpisodeLog& log, const Stream& stream, double norm_bound_C);

/// Seed derivation; policies are paired on environments through env_seed.
std::uint64_t env_seed(std::uint64_t base_seed, std::uint64_t seed_index);
std::uint64_t policy_seed(std::uint64_t base_seed, const std::string& policy_name, double param_value,
                          std::uint64_t seed_index);

struct SweepEntry {
  nlohmann::json policy;
  std::string param;
  std::vector<double> values;
};

struct ExperimentConfig {
  nlohmann::json environment;
  nlohmann::json policy;
  std::optional<std::size_t> horizon;
  std::vector<std::uint64_t> seeds;
  std::optional<double> cost_c;
  std::uint64_t base_seed = 0;
  std::vector<SweepEntry> sweep;
  std::string base_dir = ".";
};

ExperimentConfig parse_experiment(const std::string& json_text, const std::string& base_dir = ".");
ExperimentConfig load_experiment(const std::string& path);

/// One episode of the configured policy on environment seed index `seed_index`.
EpisodeLog run_configured(const ExperimentConfig& cfg, std::uint64_t seed_index);

/// Stream for environment seed index `seed_index`.
Stream configured_stream(const ExperimentConfig& cfg, std::uint64_t seed_index);

struct SweepRow {
  std::string policy;
  std::string param_name;
  double param_value = 0.0;
  std::uint64_t seed = 0;
  std::size_t queries = 0;
  std::optional<double> regret_R;
  double regret_Reg = 0.0;
  double total_loss = 0.0;
  std::optional<double> cost_W;
  std::uint64_t stream_hash = 0;
};

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

struct SweepAggregate {
  std::string policy;
  std::string param_name;
  double param_value = 0.0;
  std::size_t seeds = 0;
  Moments queries;
  std::optional<Moments> regret_R;
  Moments regret_Reg;
  Moments total_loss;
  std::optional<Moments> cost_W;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

Moments moments(const std::vector<double>& xs);

/// Runs the Cartesian product of sweep entries, grid values and seeds. Every
/// cell with the same seed index sees the same environment stream.
SweepResult sweep(const ExperimentConfig& cfg);

/// policy,param_name,param_value,seed,queries,regret_R,regret_Reg,cost_W,stream_hash
/// followed by one aggregate row (seed = "mean") per (policy, value). The
/// first line is a "# generated_at=..." comment.
std::string format_sweep_csv(const SweepResult& result, const std::string& timestamp);
/// Mean and sample standard deviation per (policy, value).
std::string format_aggregate_csv(const SweepResult& result, const std::string& timestamp);
/// Detail rows with the raw total squared loss alongside R and Reg.
std::string format_runs_csv(const SweepResult& result, const std::string& timestamp);

/// Writes sweep.csv, sweep_aggregate.csv and runs_detail.csv into out_dir.
void write_sweep(const SweepResult& result, const std::string& out_dir);

/// t,domain_id,prediction,delta,query_prob,queried,loss
std::string format_round_log_csv(const EpisodeLog& log);

struct LowerBoundRow {
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  std::size_t queries = 0;
  double regret_R = 0.0;
  double regret_Reg = 0.0;
  std::uint64_t stream_hash = 0;
};

struct LowerBoundResult {
  std::vector<LowerBoundRow> rows;
  std::vector<std::size_t> budgets;
  std::vector<double> mean_R;
  std::vector<double> rate;  // (sum_u sqrt(d_u T_u))^2 / B
  double slope = 0.0;        // least-squares slope of log(mean R) on log B
};

/// Fixed-Budget QuFUR on the lower-bound adversary for each budget and seed.
/// Policies use eta = 1 and C = sqrt(d) unless `policy_overrides` says
/// otherwise (keys "eta", "C").
LowerBoundResult lower_bound_experiment(const DomainSpec& spec, const std::vector<std::size_t>& budgets,
                                        std::size_t num_seeds, std::uint64_t base_seed = 0,
                                        const nlohmann::json& policy_overrides = nlohmann::json::object());

std::string format_lower_bound_csv(const LowerBoundResult& result);

/// Least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string hex64(std::uint64_t v);
std::string utc_timestamp();

}  // namespace qufur

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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qufur/error.hpp"
#include "qufur/harness.hpp"

namespace {

using nlohmann::json;
using qufur::Vector;

qufur::Stream small_stream(std::size_t T, std::uint64_t seed, double eta = 0.1) {
  qufur::DomainSpec spec;
  spec.entries = {{3, T / 2}, {2, T - T / 2}};
  spec.ordering = qufur::Ordering::Interleaved;
  return qufur::synthetic_stream(spec, 6, eta, seed);
}

qufur::PolicySpec policy(const json& j) { return qufur::parse_policy(j); }

void expect_config_error(const std::string& text, const std::string& field) {
  try {
    qufur::parse_experiment(text);
    FAIL() << "accepted: " << text;
  } catch (const qufur::Error& e) {
    EXPECT_EQ(e.kind(), qufur::ErrorKind::Config) << e.what();
    EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
  }
}

const char* kSynth = R"({"kind":"synthetic","domains":[[3,20],[2,20]],"ambient_dim":6,"eta":0.1})";

TEST(Episode, GreedyFullBudgetMatchesSupervisedRidge) {
  const auto s = small_stream(60, 4);
  const auto log = qufur::run_episode(s, policy({{"kind", "greedy"}, {"budget", 60}, {"C", 2.0}}), 1);
  EXPECT_EQ(log.totals.queries, 60u);
  std::vector<oracle::Vec> xs;
  oracle::Vec ys;
  for (std::size_t t = 0; t < s.rounds.size(); ++t) {
    double expect = 0.0;
    if (!xs.empty()) {
      const auto th = oracle::ridge_theta(xs, ys, 6, 0.25);
      oracle::Vec x(s.rounds[t].x.data(), s.rounds[t].x.data() + 6);
      expect = std::clamp(oracle::dot(th, x), -1.0, 1.0);
    }
    EXPECT_NEAR(log.rounds[t].prediction, expect, 1e-9) << t;
    EXPECT_TRUE(log.rounds[t].queried);
    xs.emplace_back(s.rounds[t].x.data(), s.rounds[t].x.data() + 6);
    ys.push_back(s.rounds[t].label);
  }
}

TEST(Episode, ZeroBudgetNeverQueriesAndPredictsZero) {
  const auto s = small_stream(50, 2);
  for (const json& p : {json{{"kind", "qufur"}, {"alpha", 1e6}, {"budget", 0}},
                        json{{"kind", "fixed_budget"}, {"budget", 0}}, json{{"kind", "greedy"}, {"budget", 0}},
                        json{{"kind", "uniform"}, {"mu", 1.0}, {"budget", 0}}}) {
    const auto log = qufur::run_episode(s, policy(p), 3);
    EXPECT_EQ(log.totals.queries, 0u) << p.dump();
    for (const auto& r : log.rounds) EXPECT_EQ(r.prediction, 0.0);
  }
}

TEST(Episode, BudgetIsAHardCap) {
  const auto s = small_stream(200, 5);
  for (std::size_t b : {0u, 1u, 7u, 30u}) {
    for (const char* kind : {"qufur", "fixed_budget", "greedy", "oracle"}) {
      json p{{"kind", kind}, {"budget", b}};
      if (std::string(kind) == "qufur") p["alpha"] = 1e9;
      const auto log = qufur::run_episode(s, policy(p), 11);
      EXPECT_LE(log.totals.queries, b) << kind;
    }
  }
}

TEST(Episode, SameSeedsGiveIdenticalLogs) {
  const auto s = small_stream(80, 8);
  const auto p = policy({{"kind", "qufur"}, {"alpha", 2.0}});
  const auto a = qufur::run_episode(s, p, 42);
  const auto b = qufur::run_episode(s, p, 42);
  EXPECT_EQ(qufur::format_round_log_csv(a), qufur::format_round_log_csv(b));
  const auto c = qufur::run_episode(s, p, 43);
  EXPECT_NE(qufur::format_round_log_csv(a), qufur::format_round_log_csv(c));
}

TEST(Episode, PredictionDependsOnlyOnThePast) {
  // Changing the label of the last round cannot move any logged prediction.
  auto s = small_stream(40, 9);
  const auto p = policy({{"kind", "greedy"}});
  const auto a = qufur::run_episode(s, p, 1);
  s.rounds.back().label = 123.0;
  const auto b = qufur::run_episode(s, p, 1);
  for (std::size_t t = 0; t < s.rounds.size(); ++t) EXPECT_EQ(a.rounds[t].prediction, b.rounds[t].prediction);
}

TEST(Episode, OracleGetsDomainRates) {
  const auto s = small_stream(200, 1);
  const auto log = qufur::run_episode(s, policy({{"kind", "oracle"}, {"budget", 40}}), 2);
  const auto mu = qufur::oracle_rates({{3, 100}, {2, 100}}, 40.0);
  std::set<double> probs;
  for (const auto& r : log.rounds)
    if (r.query_prob > 0.0) probs.insert(r.query_prob);
  for (double p : probs) EXPECT_TRUE(std::fabs(p - mu[0]) < 1e-12 || std::fabs(p - mu[1]) < 1e-12) << p;
}

TEST(Regret, SingleRound) {
  qufur::Stream s;
  s.dim = 1;
  qufur::StreamRound r;
  r.x = Vector::Ones(1);
  r.true_mean = 0.5;
  r.label = 0.5;
  s.rounds.push_back(r);
  const auto log = qufur::run_episode(s, policy({{"kind", "greedy"}}), 0);
  ASSERT_TRUE(log.totals.regret_R);
  EXPECT_DOUBLE_EQ(*log.totals.regret_R, 0.25);
  EXPECT_DOUBLE_EQ(log.totals.regret_Reg, 0.25);
}

TEST(Regret, PerfectPredictorHasZeroR) {
  const auto s = small_stream(10, 3);
  qufur::EpisodeLog log;
  for (const auto& r : s.rounds) {
    qufur::RoundRecord rec;
    rec.prediction = *r.true_mean;
    rec.label = r.label;
    rec.true_mean = r.true_mean;
    log.rounds.push_back(rec);
  }
  const auto reg = qufur::compute_regret(log, s);
  EXPECT_EQ(*reg.R, 0.0);
  EXPECT_NEAR(reg.Reg, 0.0, 1e-15);
}

TEST(Regret, ReplayWithoutMeansUsesHindsightRidge) {
  const auto s = qufur::replay_stream(QUFUR_TEST_DATA_DIR "/tiny_stream.csv");
  const auto log = qufur::run_episode(s, policy({{"kind", "greedy"}}), 0, 1.0);
  EXPECT_FALSE(log.totals.regret_R);
  EXPECT_FALSE(log.totals.cost_W);
  std::vector<oracle::Vec> xs;
  oracle::Vec ys;
  for (const auto& r : s.rounds) {
    xs.emplace_back(r.x.data(), r.x.data() + 2);
    ys.push_back(r.label);
  }
  const auto th = oracle::ridge_theta(xs, ys, 2, 1.0);
  double comp = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) comp += std::pow(std::clamp(oracle::dot(th, xs[t]), -1.0, 1.0) - ys[t], 2);
  EXPECT_NEAR(log.totals.regret_Reg, log.totals.total_loss - comp, 1e-12);
  EXPECT_THROW(qufur::compute_cost(log, 1.0), qufur::Error);
}

TEST(Cost, Example) {
  qufur::EpisodeLog log;
  log.totals.regret_R = 3.5;
  log.totals.queries = 10;
  EXPECT_DOUBLE_EQ(qufur::compute_cost(log, 2.0), 17.0);
}

TEST(LogDet, SumsAreNonNegativeAndBounded) {
  const auto s = small_stream(200, 6, 0.3);
  const auto log = qufur::run_episode(s, policy({{"kind", "qufur"}, {"alpha", 20.0}}), 7);
  const auto checks = qufur::logdet_check(log, s, 1.0);
  ASSERT_EQ(checks.size(), 2u);
  for (const auto& c : checks) {
    EXPECT_GE(c.lhs, 0.0);
    // min(1,u) <= 2 ln(1+u)
    EXPECT_LE(c.lhs, 2.0 * c.rhs + 1e-9);
  }
}

TEST(Seeds, PairedAcrossPolicies) {
  EXPECT_EQ(qufur::env_seed(0, 3), qufur::env_seed(0, 3));
  EXPECT_NE(qufur::env_seed(0, 3), qufur::env_seed(0, 4));
  EXPECT_NE(qufur::env_seed(1, 3), qufur::env_seed(0, 3));
  EXPECT_NE(qufur::policy_seed(0, "qufur", 1.0, 0), qufur::policy_seed(0, "qufur", 2.0, 0));
  EXPECT_NE(qufur::policy_seed(0, "qufur", 1.0, 0), qufur::policy_seed(0, "uniform", 1.0, 0));
}

TEST(Config, ErrorsNameTheField) {
  const std::string env = std::string(R"("environment":)") + kSynth;
  expect_config_error("{" + env + R"(,"policy":{"kind":"qufur","alpah":1}})", "alpah");
  expect_config_error("{" + env + R"(,"policy":{"kind":"qufur"}})", "alpha");
  expect_config_error("{" + env + R"(,"policy":{"kind":"qufur","alpha":-1}})", "alpha");
  expect_config_error("{" + env + R"(,"policy":{"kind":"fixed_budget"}})", "budget");
  expect_config_error("{" + env + R"(,"policy":{"kind":"banana"}})", "kind");
  expect_config_error("{" + env + R"(,"policy":{"kind":"greedy"},"seeds":0})", "seeds");
  expect_config_error("{" + env + R"(,"policy":{"kind":"greedy"},"extra":1})", "extra");
  expect_config_error("{" + env + R"(,"policy":{"kind":"greedy"},"cost_c":-1})", "cost_c");
  expect_config_error(R"({"policy":{"kind":"greedy"}})", "environment");
  expect_config_error(R"({"environment":{"kind":"synthetic","domains":[[3,20]],"ambient_dim":6,"eta":"x"},"policy":{"kind":"greedy"}})",
                      "eta");
  expect_config_error("{" + env + R"(,"sweep":[{"policy":{"kind":"qufur"},"param":"alpha","values":[]}]})",
                      "values");
  expect_config_error("{" + env + R"(,"sweep":[{"policy":{"kind":"qufur"},"param":"kernel","values":[1]}]})",
                      "param");
  expect_config_error("{not json", "JSON");
}

TEST(Config, DimensionMismatchIsConfigError) {
  qufur::Stream s = small_stream(10, 1);
  s.rounds[4].x = Vector::Zero(3);
  try {
    qufur::run_episode(s, policy({{"kind", "greedy"}}), 0);
    FAIL();
  } catch (const qufur::Error& e) {
    EXPECT_EQ(e.kind(), qufur::ErrorKind::Config);
  }
}

TEST(Config, HorizonTruncatesAndIsChecked) {
  const auto cfg = qufur::parse_experiment(std::string(R"({"environment":)") + kSynth +
                                           R"(,"policy":{"kind":"greedy"},"horizon":25})");
  EXPECT_EQ(qufur::configured_stream(cfg, 0).rounds.size(), 25u);
  const auto bad = qufur::parse_experiment(std::string(R"({"environment":)") + kSynth +
                                           R"(,"policy":{"kind":"greedy"},"horizon":41})");
  EXPECT_THROW(qufur::configured_stream(bad, 0), qufur::Error);
}

TEST(Config, ReplayPathIsRelativeToConfig) {
  const auto cfg = qufur::load_experiment(QUFUR_TEST_DATA_DIR "/replay_small.json");
  const auto log = qufur::run_configured(cfg, 0);
  EXPECT_EQ(log.rounds.size(), 3u);
}

TEST(Config, BundledConfigsParse) {
  for (const char* name : {"synthetic_tradeoff.json", "heterogeneous.json", "finite_class.json", "lower_bound.json"})
    EXPECT_NO_THROW(qufur::load_experiment(std::string(QUFUR_CONFIG_DIR) + "/" + name)) << name;
}

TEST(Config, FiniteClassEnvironment) {
  const auto cfg = qufur::parse_experiment(
      R"({"environment":{"kind":"finite_class","class":"thresholds.json","horizon":30,"eta":0.1},
          "policy":{"kind":"nonlinear","alpha":5}})",
      QUFUR_TEST_DATA_DIR);
  const auto log = qufur::run_configured(cfg, 0);
  EXPECT_EQ(log.rounds.size(), 30u);
  ASSERT_TRUE(log.totals.regret_R);
  const auto master = qufur::parse_experiment(
      R"({"environment":{"kind":"finite_class","class":"thresholds.json","horizon":30},
          "policy":{"kind":"nonlinear","budget":6}})",
      QUFUR_TEST_DATA_DIR);
  EXPECT_LE(qufur::run_configured(master, 0).totals.queries, 6u);
}

TEST(Sweep, RowCountsAndPairedStreams) {
  const auto cfg = qufur::parse_experiment(std::string(R"({"environment":)") + kSynth +
                                           R"(,"seeds":3,"cost_c":1,
      "sweep":[{"policy":{"kind":"qufur"},"param":"alpha","values":[1,10]},
               {"policy":{"kind":"uniform"},"param":"mu","values":[0.5]}]})");
  const auto res = qufur::sweep(cfg);
  EXPECT_EQ(res.rows.size(), 9u);
  EXPECT_EQ(res.aggregates.size(), 3u);
  for (const auto& a : res.rows)
    for (const auto& b : res.rows)
      if (a.seed == b.seed) EXPECT_EQ(a.stream_hash, b.stream_hash);
  const std::string csv = qufur::format_sweep_csv(res, "T");
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 1u + 1u + 9u + 3u);
  EXPECT_EQ(lines[0], "# generated_at=T");
  EXPECT_EQ(lines[1], "policy,param_name,param_value,seed,queries,regret_R,regret_Reg,cost_W,stream_hash");
  std::size_t means = 0;
  for (const auto& l : lines)
    if (l.find(",mean,") != std::string::npos) ++means;
  EXPECT_EQ(means, 3u);
}

TEST(Sweep, SingleCellHasThreeDetailRowsAndOneAggregate) {
  const auto cfg = qufur::parse_experiment(std::string(R"({"environment":)") + kSynth +
                                           R"(,"seeds":3,"policy":{"kind":"qufur","alpha":5}})");
  const auto res = qufur::sweep(cfg);
  EXPECT_EQ(res.rows.size(), 3u);
  ASSERT_EQ(res.aggregates.size(), 1u);
  EXPECT_EQ(res.aggregates[0].param_name, "alpha");
  EXPECT_EQ(res.aggregates[0].param_value, 5.0);
  double m = 0.0;
  for (const auto& r : res.rows) m += *r.regret_R / 3.0;
  EXPECT_NEAR(res.aggregates[0].regret_R->mean, m, 1e-12);
}

TEST(Sweep, DuplicateCellsRejected) {
  const auto cfg = qufur::parse_experiment(std::string(R"({"environment":)") + kSynth +
                                           R"(,"sweep":[{"policy":{"kind":"qufur"},"param":"alpha","values":[1,1]}]})");
  EXPECT_THROW(qufur::sweep(cfg), qufur::Error);
}

TEST(Sweep, CsvBytesAreDeterministic) {
  const auto cfg = qufur::parse_experiment(std::string(R"({"environment":)") + kSynth +
                                           R"(,"seeds":2,"sweep":[{"policy":{"kind":"fixed_budget"},"param":"budget","values":[5,10]}]})");
  EXPECT_EQ(qufur::format_sweep_csv(qufur::sweep(cfg), "x"), qufur::format_sweep_csv(qufur::sweep(cfg), "x"));
  EXPECT_EQ(qufur::format_runs_csv(qufur::sweep(cfg), "x"), qufur::format_runs_csv(qufur::sweep(cfg), "x"));
}

TEST(Moments, SampleStandardDeviation) {
  const auto m = qufur::moments({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stddev, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(qufur::moments({7.0}).stddev, 0.0);
}

TEST(LowerBoundExperiment, RowsAndSlope) {
  qufur::DomainSpec spec;
  spec.entries = {{2, 100}, {1, 50}};
  const auto res = qufur::lower_bound_experiment(spec, {8, 32}, 3, 0);
  EXPECT_EQ(res.rows.size(), 6u);
  ASSERT_EQ(res.mean_R.size(), 2u);
  const double s = std::sqrt(200.0) + std::sqrt(50.0);
  EXPECT_NEAR(res.rate[0], s * s / 8.0, 1e-9);
  for (const auto& r : res.rows) EXPECT_LE(r.queries, r.budget);
  EXPECT_NEAR(res.slope, qufur::ols_slope({std::log(8.0), std::log(32.0)},
                                          {std::log(res.mean_R[0]), std::log(res.mean_R[1])}), 1e-12);
  const std::string csv = qufur::format_lower_bound_csv(res);
  EXPECT_NE(csv.find("# slope="), std::string::npos);
}

TEST(Ols, ExactLine) {
  EXPECT_NEAR(qufur::ols_slope({0, 1, 2, 3}, {1, -1, -3, -5}), -2.0, 1e-15);
}

TEST(Hex, Padded) { EXPECT_EQ(qufur::hex64(0xabc), "0000000000000abc"); }

}  // namespace

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

// JSON experiment configs: policies, environments, seeds.

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qufur/error.hpp"
#include "qufur/harness.hpp"
#include "qufur/random.hpp"

namespace qufur {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(ErrorKind::Config, where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) fail(ErrorKind::Config, "unknown field '" + where + "." + key + "'");
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) fail(ErrorKind::Config, "field '" + where + "." + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(ErrorKind::Config, "field '" + where + "." + key + "' must be finite");
  return x;
}

std::size_t get_count(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    fail(ErrorKind::Config, "field '" + where + "." + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_string()) fail(ErrorKind::Config, "field '" + where + "." + key + "' must be a string");
  return v.get<std::string>();
}

DomainSize parse_domain(const json& e, const std::string& where) {
  DomainSize ds;
  if (e.is_array()) {
    if (e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      fail(ErrorKind::Config, "field '" + where + "' must be [d, T]");
    ds.dim = e[0].get<int>();
    ds.duration = e[1].get<std::size_t>();
  } else {
    check_keys(e, where, {"dim", "duration"});
    ds.dim = static_cast<int>(get_count(e, "dim", where));
    ds.duration = get_count(e, "duration", where);
  }
  return ds;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "qufur") return PolicyKind::Qufur;
  if (name == "fixed_budget") return PolicyKind::FixedBudget;
  if (name == "uniform") return PolicyKind::Uniform;
  if (name == "greedy") return PolicyKind::Greedy;
  if (name == "oracle") return PolicyKind::Oracle;
  if (name == "kernel_qufur") return PolicyKind::KernelQufur;
  if (name == "nonlinear") return PolicyKind::Nonlinear;
  fail(ErrorKind::Config, "unknown policy kind '" + name + "'");
}

std::string policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Qufur: return "qufur";
    case PolicyKind::FixedBudget: return "fixed_budget";
    case PolicyKind::Uniform: return "uniform";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::Oracle: return "oracle";
    case PolicyKind::KernelQufur: return "kernel_qufur";
    case PolicyKind::Nonlinear: return "nonlinear";
  }
  return "unknown";
}

PolicySpec parse_policy(const json& j) {
  check_keys(j, "policy", {"kind", "label", "alpha", "budget", "mu", "C", "eta", "delta", "kernel"});
  if (!j.contains("kind")) fail(ErrorKind::Config, "missing field 'policy.kind'");
  PolicySpec spec;
  spec.kind = parse_policy_kind(get_string(j, "kind", "policy"));
  if (j.contains("label")) spec.label = get_string(j, "label", "policy");
  if (j.contains("alpha")) {
    spec.cfg.alpha = get_number(j, "alpha", "policy");
    spec.alpha_given = true;
  }
  if (j.contains("budget")) spec.cfg.budget = get_count(j, "budget", "policy");
  if (j.contains("mu")) spec.mu = get_number(j, "mu", "policy");
  if (j.contains("C")) spec.cfg.norm_bound_C = get_number(j, "C", "policy");
  if (j.contains("eta")) {
    spec.cfg.noise_level = get_number(j, "eta", "policy");
    spec.eta_given = true;
  }
  if (j.contains("delta")) spec.cfg.confidence_delta = get_number(j, "delta", "policy");
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    check_keys(k, "policy.kernel", {"kind", "gamma"});
    const std::string kind = get_string(k, "kind", "policy.kernel");
    if (kind == "linear") {
      spec.kernel = Kernel::linear();
    } else if (kind == "rbf") {
      if (!k.contains("gamma")) fail(ErrorKind::Config, "missing field 'policy.kernel.gamma'");
      try {
        spec.kernel = Kernel::rbf(get_number(k, "gamma", "policy.kernel"));
      } catch (const Error& e) {
        fail(ErrorKind::Config, e.what());
      }
    } else {
      fail(ErrorKind::Config, "unknown kernel '" + kind + "'");
    }
  }

  switch (spec.kind) {
    case PolicyKind::Qufur:
    case PolicyKind::KernelQufur:
      if (!spec.alpha_given) fail(ErrorKind::Config, "missing field 'policy.alpha'");
      break;
    case PolicyKind::FixedBudget:
    case PolicyKind::Oracle:
      if (!spec.cfg.budget) fail(ErrorKind::Config, "missing field 'policy.budget'");
      break;
    case PolicyKind::Uniform:
      if (!spec.mu && !spec.cfg.budget) fail(ErrorKind::Config, "missing field 'policy.mu'");
      if (spec.mu && !(*spec.mu >= 0.0 && *spec.mu <= 1.0))
        fail(ErrorKind::Config, "field 'policy.mu' must lie in [0, 1]");
      break;
    case PolicyKind::Nonlinear:
      if (!spec.alpha_given && !spec.cfg.budget)
        fail(ErrorKind::Config, "missing field 'policy.alpha' or 'policy.budget'");
      break;
    case PolicyKind::Greedy:
      break;
  }
  try {
    spec.cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return spec;
}

std::string primary_param_name(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::Qufur:
    case PolicyKind::KernelQufur:
      return "alpha";
    case PolicyKind::Uniform:
      return spec.mu ? "mu" : "budget";
    case PolicyKind::Greedy:
      return "none";
    case PolicyKind::FixedBudget:
    case PolicyKind::Oracle:
      return "budget";
    case PolicyKind::Nonlinear:
      return spec.alpha_given ? "alpha" : "budget";
  }
  return "none";
}

double primary_param_value(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::Qufur:
    case PolicyKind::KernelQufur:
      return spec.cfg.alpha;
    case PolicyKind::Uniform:
      return spec.mu ? *spec.mu : static_cast<double>(spec.cfg.budget.value_or(0));
    case PolicyKind::Greedy:
      return 0.0;
    case PolicyKind::FixedBudget:
    case PolicyKind::Oracle:
      return static_cast<double>(spec.cfg.budget.value_or(0));
    case PolicyKind::Nonlinear:
      return spec.alpha_given ? spec.cfg.alpha : static_cast<double>(spec.cfg.budget.value_or(0));
  }
  return 0.0;
}

EnvironmentSpec parse_environment(const json& j, const std::string& base_dir) {
  if (!j.is_object() || !j.contains("kind")) fail(ErrorKind::Config, "missing field 'environment.kind'");
  const std::string kind = get_string(j, "kind", "environment");
  EnvironmentSpec env;

  auto read_domains = [&](bool required) {
    if (!j.contains("domains")) {
      if (required) fail(ErrorKind::Config, "missing field 'environment.domains'");
      return;
    }
    const auto& ds = j.at("domains");
    if (!ds.is_array() || ds.empty()) fail(ErrorKind::Config, "field 'environment.domains' must be a non-empty list");
    for (std::size_t i = 0; i < ds.size(); ++i)
      env.domains.entries.push_back(parse_domain(ds[i], "environment.domains[" + std::to_string(i) + "]"));
    if (j.contains("ordering")) {
      try {
        env.domains.ordering = parse_ordering(get_string(j, "ordering", "environment"));
      } catch (const Error& e) {
        fail(ErrorKind::Config, e.what());
      }
    }
    try {
      env.domains.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("environment.domains: ") + e.what());
    }
  };

  if (kind == "synthetic") {
    check_keys(j, "environment", {"kind", "domains", "ordering", "ambient_dim", "eta"});
    env.kind = EnvironmentKind::Synthetic;
    read_domains(true);
    env.ambient_dim = j.contains("ambient_dim") ? static_cast<int>(get_count(j, "ambient_dim", "environment"))
                                                : env.domains.total_dim();
    if (env.ambient_dim < env.domains.total_dim())
      fail(ErrorKind::Config, "field 'environment.ambient_dim' is smaller than the sum of domain dimensions");
    env.eta = j.contains("eta") ? get_number(j, "eta", "environment") : 0.0;
    if (env.eta < 0.0) fail(ErrorKind::Config, "field 'environment.eta' must be >= 0");
  } else if (kind == "lower_bound") {
    check_keys(j, "environment", {"kind", "domains", "ordering"});
    env.kind = EnvironmentKind::LowerBound;
    read_domains(true);
  } else if (kind == "replay") {
    check_keys(j, "environment", {"kind", "path"});
    env.kind = EnvironmentKind::Replay;
    if (!j.contains("path")) fail(ErrorKind::Config, "missing field 'environment.path'");
    env.replay_path = resolve(base_dir, get_string(j, "path", "environment"));
  } else if (kind == "finite_class") {
    check_keys(j, "environment", {"kind", "class", "truth_index", "horizon", "eta", "domains"});
    env.kind = EnvironmentKind::FiniteClass;
    if (!j.contains("class")) fail(ErrorKind::Config, "missing field 'environment.class'");
    const auto& c = j.at("class");
    HypothesisTable table;
    try {
      table = c.is_string() ? load_hypothesis_table(resolve(base_dir, c.get<std::string>()))
                            : parse_hypothesis_table(c.dump());
    } catch (const Error& e) {
      fail(e.kind() == ErrorKind::Io ? ErrorKind::Io : ErrorKind::Config,
           std::string("environment.class: ") + e.what());
    }
    if (j.contains("truth_index")) {
      env.truth_index = get_count(j, "truth_index", "environment");
    } else if (table.truth_index) {
      env.truth_index = *table.truth_index;
    } else {
      fail(ErrorKind::Config, "missing field 'environment.truth_index'");
    }
    if (env.truth_index >= table.num_hypotheses())
      fail(ErrorKind::Config, "field 'environment.truth_index' out of range");
    env.eta = j.contains("eta") ? get_number(j, "eta", "environment") : 0.0;
    if (env.eta < 0.0) fail(ErrorKind::Config, "field 'environment.eta' must be >= 0");
    if (j.contains("domains")) {
      const auto& ds = j.at("domains");
      if (!ds.is_array() || ds.empty()) fail(ErrorKind::Config, "field 'environment.domains' must be a non-empty list");
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::string where = "environment.domains[" + std::to_string(i) + "]";
        check_keys(ds[i], where, {"support", "duration"});
        if (!ds[i].contains("support") || !ds[i].at("support").is_array() || ds[i].at("support").empty())
          fail(ErrorKind::Config, "field '" + where + ".support' must be a non-empty list");
        std::vector<std::size_t> support;
        for (const auto& s : ds[i].at("support")) {
          if (!s.is_number_integer() || s.get<std::int64_t>() < 0 ||
              s.get<std::size_t>() >= table.support_size())
            fail(ErrorKind::Config, "field '" + where + ".support' has an invalid index");
          support.push_back(s.get<std::size_t>());
        }
        env.domain_supports.push_back(std::move(support));
        env.domain_lengths.push_back(get_count(ds[i], "duration", where));
      }
    } else {
      if (!j.contains("horizon")) fail(ErrorKind::Config, "missing field 'environment.horizon'");
      env.horizon = get_count(j, "horizon", "environment");
    }
    env.table = std::make_shared<const HypothesisTable>(std::move(table));
  } else {
    fail(ErrorKind::Config, "unknown environment kind '" + kind + "'");
  }
  return env;
}

Stream make_stream(const EnvironmentSpec& env, std::uint64_t seed) {
  switch (env.kind) {
    case EnvironmentKind::Synthetic:
      return synthetic_stream(env.domains, env.ambient_dim, env.eta, seed);
    case EnvironmentKind::LowerBound:
      return lower_bound_stream(env.domains, seed);
    case EnvironmentKind::Replay:
      return replay_stream(env.replay_path);
    case EnvironmentKind::FiniteClass:
      return finite_class_stream(*env.table, env.truth_index, env.horizon, env.eta, seed, env.domain_supports,
                                 env.domain_lengths);
  }
  fail(ErrorKind::Config, "unknown environment kind");
}

std::uint64_t env_seed(std::uint64_t base_seed, std::uint64_t seed_index) {
  return hash64(base_seed, hash_string("env"), seed_index);
}

std::uint64_t policy_seed(std::uint64_t base_seed, const std::string& policy_name, double param_value,
                          std::uint64_t seed_index) {
  return hash64(base_seed, hash_string(policy_name), std::bit_cast<std::uint64_t>(param_value), seed_index);
}

ExperimentConfig parse_experiment(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"environment", "policy", "horizon", "seeds", "cost_c", "base_seed", "sweep"});
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  if (!j.contains("environment")) fail(ErrorKind::Config, "missing field 'environment'");
  cfg.environment = j.at("environment");
  parse_environment(cfg.environment, base_dir);

  if (j.contains("policy")) {
    cfg.policy = j.at("policy");
    parse_policy(cfg.policy);
  }
  if (j.contains("horizon")) cfg.horizon = get_count(j, "horizon", "config");
  if (j.contains("cost_c")) {
    cfg.cost_c = get_number(j, "cost_c", "config");
    if (*cfg.cost_c < 0.0) fail(ErrorKind::Config, "field 'cost_c' must be >= 0");
  }
  if (j.contains("base_seed")) cfg.base_seed = get_count(j, "base_seed", "config");

  if (!j.contains("seeds")) {
    cfg.seeds = {0};
  } else if (j.at("seeds").is_number_integer()) {
    const std::size_t n = get_count(j, "seeds", "config");
    if (n == 0) fail(ErrorKind::Config, "field 'seeds' must be positive");
    for (std::size_t i = 0; i < n; ++i) cfg.seeds.push_back(i);
  } else if (j.at("seeds").is_array() && !j.at("seeds").empty()) {
    std::set<std::uint64_t> seen;
    for (const auto& s : j.at("seeds")) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
        fail(ErrorKind::Config, "field 'seeds' must hold nonnegative integers");
      if (!seen.insert(s.get<std::uint64_t>()).second) fail(ErrorKind::Config, "field 'seeds' has duplicates");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  } else {
    fail(ErrorKind::Config, "field 'seeds' must be a count or a list");
  }

  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    if (!sw.is_array() || sw.empty()) fail(ErrorKind::Config, "field 'sweep' must be a non-empty list");
    for (std::size_t i = 0; i < sw.size(); ++i) {
      const std::string where = "sweep[" + std::to_string(i) + "]";
      check_keys(sw[i], where, {"policy", "param", "values"});
      SweepEntry e;
      if (!sw[i].contains("policy")) fail(ErrorKind::Config, "missing field '" + where + ".policy'");
      e.policy = sw[i].at("policy");
      if (sw[i].contains("param")) {
        e.param = get_string(sw[i], "param", where);
        static const std::set<std::string> sweepable = {"alpha", "budget", "mu", "C", "eta", "delta"};
        if (!sweepable.contains(e.param)) fail(ErrorKind::Config, "field '" + where + ".param' is not sweepable");
        if (!sw[i].contains("values") || !sw[i].at("values").is_array() || sw[i].at("values").empty())
          fail(ErrorKind::Config, "field '" + where + ".values' must be a non-empty list");
        for (const auto& v : sw[i].at("values")) {
          if (!v.is_number()) fail(ErrorKind::Config, "field '" + where + ".values' must hold numbers");
          e.values.push_back(v.get<double>());
        }
        for (double v : e.values) {
          json p = e.policy;
          if (e.param == "budget") {
            if (v < 0.0 || v != std::floor(v)) fail(ErrorKind::Config, "field '" + where + ".values' budgets must be integers");
            p[e.param] = static_cast<std::size_t>(v);
          } else {
            p[e.param] = v;
          }
          parse_policy(p);
        }
      } else {
        if (sw[i].contains("values")) fail(ErrorKind::Config, "field '" + where + ".values' needs 'param'");
        parse_policy(e.policy);
      }
      cfg.sweep.push_back(std::move(e));
    }
  }
  if (cfg.policy.is_null() && cfg.sweep.empty()) fail(ErrorKind::Config, "missing field 'policy'");
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  const std::string text = read_file(path);
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_experiment(text, parent.empty() ? "." : parent.string());
}

Stream configured_stream(const ExperimentConfig& cfg, std::uint64_t seed_index) {
  const EnvironmentSpec env = parse_environment(cfg.environment, cfg.base_dir);
  Stream s = make_stream(env, env_seed(cfg.base_seed, seed_index));
  if (cfg.horizon) {
    if (*cfg.horizon > s.rounds.size())
      fail(ErrorKind::Config, "field 'horizon' exceeds the environment length " + std::to_string(s.rounds.size()));
    s.rounds.resize(*cfg.horizon);
  }
  return s;
}

EpisodeLog run_configured(const ExperimentConfig& cfg, std::uint64_t seed_index) {
  if (cfg.policy.is_null()) fail(ErrorKind::Config, "missing field 'policy'");
  const EnvironmentSpec env = parse_environment(cfg.environment, cfg.base_dir);
  const Stream stream = configured_stream(cfg, seed_index);
  const PolicySpec spec = parse_policy(cfg.policy);
  const std::string name = spec.label.empty() ? policy_kind_name(spec.kind) : spec.label;
  EpisodeLog log = run_episode(stream, spec, policy_seed(cfg.base_seed, name, primary_param_value(spec), seed_index),
                               cfg.cost_c, env.table.get());
  log.seed = seed_index;
  log.config_snapshot = json{{"environment", cfg.environment}, {"policy", cfg.policy}}.dump();
  return log;
}

}  // namespace qufur

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

// Parameter sweeps, the lower-bound experiment and CSV output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "qufur/error.hpp"
#include "qufur/harness.hpp"

namespace qufur {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

std::string opt_mean(const std::optional<Moments>& m) { return m ? num(m->mean) : "NA"; }

struct Cell {
  PolicySpec spec;
  std::string name;
  std::string param_name;
  double param_value = 0.0;
};

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
  std::vector<SweepEntry> entries = cfg.sweep;
  if (entries.empty()) entries.push_back({cfg.policy, "", {}});

  std::vector<Cell> cells;
  std::set<std::tuple<std::string, std::string, double>> seen;
  for (const auto& e : entries) {
    std::vector<json> variants;
    if (e.param.empty()) {
      variants.push_back(e.policy);
    } else {
      for (double v : e.values) {
        json p = e.policy;
        if (e.param == "budget")
          p[e.param] = static_cast<std::size_t>(v);
        else
          p[e.param] = v;
        variants.push_back(p);
      }
    }
    for (std::size_t i = 0; i < variants.size(); ++i) {
      Cell c;
      c.spec = parse_policy(variants[i]);
      c.name = c.spec.label.empty() ? policy_kind_name(c.spec.kind) : c.spec.label;
      c.param_name = e.param.empty() ? primary_param_name(c.spec) : e.param;
      c.param_value = e.param.empty() ? primary_param_value(c.spec) : e.values[i];
      if (!seen.insert({c.name, c.param_name, c.param_value}).second)
        fail(ErrorKind::Config, "sweep repeats policy '" + c.name + "' at " + c.param_name + "=" + num(c.param_value));
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

SweepResult sweep(const ExperimentConfig& cfg) {
  const EnvironmentSpec env = parse_environment(cfg.environment, cfg.base_dir);
  const std::vector<Cell> cells = expand_cells(cfg);

  std::vector<Stream> streams;
  streams.reserve(cfg.seeds.size());
  for (std::uint64_t s : cfg.seeds) streams.push_back(configured_stream(cfg, s));

  SweepResult result;
  for (const auto& cell : cells) {
    SweepAggregate agg;
    agg.policy = cell.name;
    agg.param_name = cell.param_name;
    agg.param_value = cell.param_value;
    agg.seeds = cfg.seeds.size();
    std::vector<double> q, r, reg, loss, w;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      const std::uint64_t s = cfg.seeds[i];
      const EpisodeLog log = run_episode(streams[i], cell.spec, policy_seed(cfg.base_seed, cell.name, cell.param_value, s),
                                         cfg.cost_c, env.table.get());
      SweepRow row;
      row.policy = cell.name;
      row.param_name = cell.param_name;
      row.param_value = cell.param_value;
      row.seed = s;
      row.queries = log.totals.queries;
      row.regret_R = log.totals.regret_R;
      row.regret_Reg = log.totals.regret_Reg;
      row.total_loss = log.totals.total_loss;
      row.cost_W = log.totals.cost_W;
      row.stream_hash = log.stream_hash;
      result.rows.push_back(row);

      q.push_back(static_cast<double>(row.queries));
      if (row.regret_R) r.push_back(*row.regret_R);
      reg.push_back(row.regret_Reg);
      loss.push_back(row.total_loss);
      if (row.cost_W) w.push_back(*row.cost_W);
    }
    agg.queries = moments(q);
    if (r.size() == cfg.seeds.size()) agg.regret_R = moments(r);
    agg.regret_Reg = moments(reg);
    agg.total_loss = moments(loss);
    if (w.size() == cfg.seeds.size()) agg.cost_W = moments(w);
    result.aggregates.push_back(agg);
  }
  return result;
}

std::string format_sweep_csv(const SweepResult& result, const std::string& timestamp) {
  std::ostringstream out;
  out << "# generated_at=" << timestamp << "\n";
  out << "policy,param_name,param_value,seed,queries,regret_R,regret_Reg,cost_W,stream_hash\n";
  for (const auto& r : result.rows)
    out << r.policy << ',' << r.param_name << ',' << num(r.param_value) << ',' << r.seed << ',' << r.queries << ','
        << opt_num(r.regret_R) << ',' << num(r.regret_Reg) << ',' << opt_num(r.cost_W) << ',' << hex64(r.stream_hash)
        << '\n';
  for (const auto& a : result.aggregates) {
    out << a.policy << ',' << a.param_name << ',' << num(a.param_value) << ",mean," << num(a.queries.mean) << ','
        << opt_mean(a.regret_R) << ',' << num(a.regret_Reg.mean) << ',' << opt_mean(a.cost_W) << ",NA\n";
  }
  return out.str();
}

std::string format_aggregate_csv(const SweepResult& result, const std::string& timestamp) {
  std::ostringstream out;
  out << "# generated_at=" << timestamp << "\n";
  out << "policy,param_name,param_value,seeds,queries_mean,queries_std,regret_R_mean,regret_R_std,"
         "regret_Reg_mean,regret_Reg_std,total_loss_mean,total_loss_std,cost_W_mean,cost_W_std\n";
  auto pair = [](const std::optional<Moments>& m) {
    return m ? num(m->mean) + "," + num(m->stddev) : std::string("NA,NA");
  };
  for (const auto& a : result.aggregates)
    out << a.policy << ',' << a.param_name << ',' << num(a.param_value) << ',' << a.seeds << ','
        << num(a.queries.mean) << ',' << num(a.queries.stddev) << ',' << pair(a.regret_R) << ','
        << num(a.regret_Reg.mean) << ',' << num(a.regret_Reg.stddev) << ',' << num(a.total_loss.mean) << ','
        << num(a.total_loss.stddev) << ',' << pair(a.cost_W) << '\n';
  return out.str();
}

std::string format_runs_csv(const SweepResult& result, const std::string& timestamp) {
  std::ostringstream out;
  out << "# generated_at=" << timestamp << "\n";
  out << "policy,param_name,param_value,seed,queries,regret_R,regret_Reg,total_loss,cost_W,stream_hash\n";
  for (const auto& r : result.rows)
    out << r.policy << ',' << r.param_name << ',' << num(r.param_value) << ',' << r.seed << ',' << r.queries << ','
        << opt_num(r.regret_R) << ',' << num(r.regret_Reg) << ',' << num(r.total_loss) << ',' << opt_num(r.cost_W)
        << ',' << hex64(r.stream_hash) << '\n';
  return out.str();
}

void write_sweep(const SweepResult& result, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + out_dir + "': " + ec.message());
  const std::string ts = utc_timestamp();
  const std::filesystem::path dir(out_dir);
  write_text((dir / "sweep.csv").string(), format_sweep_csv(result, ts));
  write_text((dir / "sweep_aggregate.csv").string(), format_aggregate_csv(result, ts));
  write_text((dir / "runs_detail.csv").string(), format_runs_csv(result, ts));
}

std::string format_round_log_csv(const EpisodeLog& log) {
  std::ostringstream out;
  out << "t,domain_id,prediction,delta,query_prob,queried,loss\n";
  for (const auto& r : log.rounds)
    out << r.t << ',' << r.domain_id << ',' << num(r.prediction) << ',' << num(r.delta) << ',' << num(r.query_prob)
        << ',' << (r.queried ? 1 : 0) << ',' << num(r.loss) << '\n';
  return out.str();
}

LowerBoundResult lower_bound_experiment(const DomainSpec& spec, const std::vector<std::size_t>& budgets,
                                        std::size_t num_seeds, std::uint64_t base_seed,
                                        const json& policy_overrides) {
  spec.validate();
  require(!budgets.empty(), "at least one budget");
  require(num_seeds > 0, "at least one seed");

  json p = {{"kind", "fixed_budget"},
            {"eta", 1.0},
            {"C", std::sqrt(static_cast<double>(spec.total_dim()))}};
  if (!policy_overrides.is_object()) fail(ErrorKind::Config, "policy overrides must be an object");
  for (const auto& [k, v] : policy_overrides.items()) {
    if (k != "eta" && k != "C") fail(ErrorKind::Config, "unknown override '" + k + "'");
    p[k] = v;
  }

  std::vector<Stream> streams;
  for (std::size_t s = 0; s < num_seeds; ++s) streams.push_back(lower_bound_stream(spec, env_seed(base_seed, s)));

  double scale = 0.0;
  for (const auto& e : spec.entries) scale += std::sqrt(static_cast<double>(e.dim) * static_cast<double>(e.duration));

  LowerBoundResult out;
  out.budgets = budgets;
  std::vector<double> log_b, log_r;
  for (std::size_t b : budgets) {
    p["budget"] = b;
    const PolicySpec ps = parse_policy(p);
    double sum = 0.0;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      const EpisodeLog log =
          run_episode(streams[s], ps, policy_seed(base_seed, "fixed_budget", static_cast<double>(b), s));
      LowerBoundRow row;
      row.budget = b;
      row.seed = s;
      row.queries = log.totals.queries;
      row.regret_R = *log.totals.regret_R;
      row.regret_Reg = log.totals.regret_Reg;
      row.stream_hash = log.stream_hash;
      out.rows.push_back(row);
      sum += row.regret_R;
    }
    const double mean = sum / static_cast<double>(num_seeds);
    out.mean_R.push_back(mean);
    out.rate.push_back(b > 0 ? scale * scale / static_cast<double>(b) : std::numeric_limits<double>::infinity());
    log_b.push_back(std::log(static_cast<double>(b)));
    log_r.push_back(std::log(mean));
  }
  out.slope = budgets.size() > 1 ? ols_slope(log_b, log_r) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::string format_lower_bound_csv(const LowerBoundResult& result) {
  std::ostringstream out;
  out << "budget,seed,queries,regret_R,regret_Reg,stream_hash\n";
  for (const auto& r : result.rows)
    out << r.budget << ',' << r.seed << ',' << r.queries << ',' << num(r.regret_R) << ',' << num(r.regret_Reg) << ','
        << hex64(r.stream_hash) << '\n';
  for (std::size_t i = 0; i < result.budgets.size(); ++i)
    out << result.budgets[i] << ",mean,NA," << num(result.mean_R[i]) << ",NA,NA\n";
  out << "# slope=" << num(result.slope) << '\n';
  return out.str();
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, "slope needs distinct x values");
  return sxy / sxx;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace qufur

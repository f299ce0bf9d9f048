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

// Command-line front end over the C API.
// Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error.

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qufur/qufur.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code(qufur_status s) {
  switch (s) {
    case QUFUR_OK:
      return 0;
    case QUFUR_ERR_INVALID_ARGUMENT:
    case QUFUR_ERR_CONFIG:
    case QUFUR_ERR_PARSE:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

int report(qufur_status s) {
  if (s != QUFUR_OK) std::fprintf(stderr, "qufur: %s: %s\n", qufur_status_name(s), qufur_last_error());
  return exit_code(s);
}

struct BadInput {
  std::string what;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::size_t to_count(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw BadInput{"not a nonnegative integer: '" + s + "'"};
  }
  if (pos != s.size()) throw BadInput{"not a nonnegative integer: '" + s + "'"};
  return static_cast<std::size_t>(v);
}

void print_totals(const qufur_totals& t) {
  std::printf("rounds=%zu queries=%zu", t.rounds, t.queries);
  if (t.has_regret_R)
    std::printf(" regret_R=%.10g", t.regret_R);
  else
    std::printf(" regret_R=NA");
  std::printf(" regret_Reg=%.10g total_loss=%.10g", t.regret_Reg, t.total_loss);
  if (t.has_cost_W) std::printf(" cost_W=%.10g", t.cost_W);
  std::printf(" stream_hash=%016llx\n", static_cast<unsigned long long>(t.stream_hash));
}

int cmd_run(const std::string& config, std::uint64_t seed, const std::string& out) {
  qufur_experiment* exp = nullptr;
  if (auto s = qufur_experiment_load(config.c_str(), &exp); s != QUFUR_OK) return report(s);
  qufur_episode* ep = nullptr;
  qufur_status s = qufur_experiment_run(exp, seed, &ep);
  qufur_totals totals{};
  if (s == QUFUR_OK) s = qufur_episode_totals(ep, &totals);
  if (s == QUFUR_OK && !out.empty()) s = qufur_episode_write_rounds(ep, out.c_str());
  if (s == QUFUR_OK) print_totals(totals);
  qufur_episode_destroy(ep);
  qufur_experiment_destroy(exp);
  return report(s);
}

int cmd_sweep(const std::string& config, const std::string& out_dir) {
  qufur_experiment* exp = nullptr;
  if (auto s = qufur_experiment_load(config.c_str(), &exp); s != QUFUR_OK) return report(s);
  const qufur_status s = qufur_experiment_sweep(exp, out_dir.c_str());
  qufur_experiment_destroy(exp);
  if (s == QUFUR_OK) std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
  return report(s);
}

int cmd_export(const std::string& config, std::uint64_t seed, const std::string& out) {
  qufur_experiment* exp = nullptr;
  if (auto s = qufur_experiment_load(config.c_str(), &exp); s != QUFUR_OK) return report(s);
  const qufur_status s = qufur_experiment_export_stream(exp, seed, out.c_str());
  qufur_experiment_destroy(exp);
  return report(s);
}

// --spec "d1:T1,d2:T2,..."
int cmd_lowerbound(const std::string& spec, const std::string& budgets_text, std::size_t seeds,
                   std::uint64_t base_seed, const std::string& out) {
  std::vector<std::size_t> dims, durations, budgets;
  try {
    for (const auto& entry : split(spec, ',')) {
      const auto parts = split(entry, ':');
      if (parts.size() != 2) throw BadInput{"domain entries look like d:T, got '" + entry + "'"};
      dims.push_back(to_count(parts[0]));
      durations.push_back(to_count(parts[1]));
    }
    for (const auto& b : split(budgets_text, ',')) budgets.push_back(to_count(b));
  } catch (const BadInput& e) {
    std::fprintf(stderr, "qufur: %s\n", e.what.c_str());
    return kExitConfig;
  }
  if (dims.empty() || budgets.empty()) {
    std::fprintf(stderr, "qufur: --spec and --budgets must be non-empty\n");
    return kExitConfig;
  }
  double slope = 0.0;
  const qufur_status s = qufur_lower_bound(dims.data(), durations.data(), dims.size(), budgets.data(), budgets.size(),
                                           seeds, base_seed, out.empty() ? nullptr : out.c_str(), &slope);
  if (s == QUFUR_OK) std::printf("slope=%.6f\n", slope);
  return report(s);
}

int cmd_eluder(const std::string& path, double epsilon) {
  std::size_t dim = 0;
  const qufur_status s = qufur_eluder_dimension(path.c_str(), epsilon, &dim);
  if (s == QUFUR_OK) std::printf("%zu\n", dim);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qufur: selective-sampling experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qufur_version()));

  std::string config, out, out_dir, spec, budgets, class_path;
  std::uint64_t seed = 0, base_seed = 0;
  std::size_t seeds = 20;
  double epsilon = 0.0;

  auto* run = app.add_subcommand("run", "Run one episode");
  run->add_option("--config", config, "Experiment JSON")->required();
  run->add_option("--seed", seed, "Environment seed index");
  run->add_option("--out", out, "Per-round CSV output");

  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep and write CSVs");
  sw->add_option("--config", config, "Experiment JSON")->required();
  sw->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* lb = app.add_subcommand("lowerbound", "Fixed-budget runs on the block adversary");
  lb->add_option("--spec", spec, "Domains as d:T,d:T,...")->required();
  lb->add_option("--budgets", budgets, "Budgets as b1,b2,...")->required();
  lb->add_option("--seeds", seeds, "Number of seeds");
  lb->add_option("--base-seed", base_seed, "Base seed");
  lb->add_option("--out", out, "CSV output");

  auto* el = app.add_subcommand("eluder", "Eluder dimension of a finite class");
  el->add_option("--class", class_path, "Hypothesis table JSON")->required();
  el->add_option("--epsilon", epsilon, "Scale epsilon")->required();

  auto* ex = app.add_subcommand("export-stream", "Write an environment stream as replay CSV");
  ex->add_option("--config", config, "Experiment JSON")->required();
  ex->add_option("--seed", seed, "Environment seed index");
  ex->add_option("--out", out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*run) return cmd_run(config, seed, out);
  if (*sw) return cmd_sweep(config, out_dir);
  if (*lb) return cmd_lowerbound(spec, budgets, seeds, base_seed, out);
  if (*el) return cmd_eluder(class_path, epsilon);
  if (*ex) return cmd_export(config, seed, out);
  return kExitConfig;
}

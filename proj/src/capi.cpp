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

#include "qufur/qufur.h"

#include <fstream>
#include <new>
#include <string>

#include "qufur/error.hpp"
#include "qufur/harness.hpp"

struct qufur_rls {
  qufur::RlsState state;
};

struct qufur_policy {
  std::unique_ptr<qufur::Learner> learner;
  int dim = 0;
  bool pending_query = false;
  qufur::Vector pending_x;
};

struct qufur_experiment {
  qufur::ExperimentConfig cfg;
};

struct qufur_episode {
  qufur::EpisodeLog log;
};

namespace {

thread_local std::string g_last_error;

qufur_status status_for(qufur::ErrorKind kind) {
  switch (kind) {
    case qufur::ErrorKind::InvalidArgument: return QUFUR_ERR_INVALID_ARGUMENT;
    case qufur::ErrorKind::Config: return QUFUR_ERR_CONFIG;
    case qufur::ErrorKind::Parse: return QUFUR_ERR_PARSE;
    case qufur::ErrorKind::Numerical: return QUFUR_ERR_NUMERICAL;
    case qufur::ErrorKind::InvalidState: return QUFUR_ERR_INVALID_STATE;
    case qufur::ErrorKind::ResourceLimit: return QUFUR_ERR_RESOURCE_LIMIT;
    case qufur::ErrorKind::Io: return QUFUR_ERR_IO;
  }
  return QUFUR_ERR_INTERNAL;
}

template <typename F>
qufur_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return QUFUR_OK;
  } catch (const qufur::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return QUFUR_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QUFUR_ERR_RESOURCE_LIMIT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QUFUR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QUFUR_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) qufur::fail(qufur::ErrorKind::InvalidArgument, std::string(what) + " is NULL");
}

qufur::Vector copy_vector(const double* x, int dim) { return Eigen::Map<const qufur::Vector>(x, dim); }

void write_file(const char* path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) qufur::fail(qufur::ErrorKind::Io, std::string("cannot write '") + path + "'");
  out << text;
  if (!out) qufur::fail(qufur::ErrorKind::Io, std::string("write failed for '") + path + "'");
}

}  // namespace

extern "C" {

const char* qufur_version(void) { return "0.1.0"; }

const char* qufur_last_error(void) { return g_last_error.c_str(); }

const char* qufur_status_name(qufur_status status) {
  switch (status) {
    case QUFUR_OK: return "ok";
    case QUFUR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QUFUR_ERR_CONFIG: return "configuration error";
    case QUFUR_ERR_PARSE: return "parse error";
    case QUFUR_ERR_NUMERICAL: return "numerical error";
    case QUFUR_ERR_INVALID_STATE: return "invalid state";
    case QUFUR_ERR_RESOURCE_LIMIT: return "resource limit";
    case QUFUR_ERR_IO: return "i/o error";
    case QUFUR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

qufur_status qufur_rls_create(int dim, double norm_bound_C, qufur_rls** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto h = std::make_unique<qufur_rls>();
    h->state = qufur::init_state(dim, norm_bound_C);
    *out = h.release();
  });
}

void qufur_rls_destroy(qufur_rls* rls) { delete rls; }

qufur_status qufur_rls_absorb(qufur_rls* rls, const double* x, double y) {
  return guarded([&] {
    need(rls, "rls");
    need(x, "x");
    qufur::absorb(rls->state, copy_vector(x, rls->state.dim), y);
  });
}

qufur_status qufur_rls_quad_form(const qufur_rls* rls, const double* x, double* out) {
  return guarded([&] {
    need(rls, "rls");
    need(x, "x");
    need(out, "out");
    *out = qufur::quad_form(rls->state, copy_vector(x, rls->state.dim));
  });
}

qufur_status qufur_rls_theta(const qufur_rls* rls, double* theta_out) {
  return guarded([&] {
    need(rls, "rls");
    need(theta_out, "theta_out");
    const qufur::Vector th = qufur::theta_hat(rls->state);
    for (int i = 0; i < rls->state.dim; ++i) theta_out[i] = th(i);
  });
}

qufur_status qufur_rls_gram_inverse(const qufur_rls* rls, double* out) {
  return guarded([&] {
    need(rls, "rls");
    need(out, "out");
    const int d = rls->state.dim;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[i * d + j] = rls->state.gram_inv(i, j);
  });
}

qufur_status qufur_policy_create(const char* policy_json, int dim, size_t horizon, uint64_t seed,
                                 qufur_policy** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(policy_json, "policy_json");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(policy_json);
    } catch (const nlohmann::json::parse_error& e) {
      qufur::fail(qufur::ErrorKind::Config, std::string("policy is not valid JSON: ") + e.what());
    }
    const qufur::PolicySpec spec = qufur::parse_policy(j);
    auto h = std::make_unique<qufur_policy>();
    h->learner = qufur::make_learner(spec, dim, horizon, seed);
    h->dim = dim;
    *out = h.release();
  });
}

void qufur_policy_destroy(qufur_policy* policy) { delete policy; }

qufur_status qufur_policy_decide(qufur_policy* policy, const double* x, uint64_t round, qufur_decision* out) {
  return guarded([&] {
    need(policy, "policy");
    need(x, "x");
    need(out, "out");
    policy->pending_x = copy_vector(x, policy->dim);
    qufur::LearnerInput in;
    in.x = &policy->pending_x;
    const qufur::RoundDecision d = policy->learner->decide(in, round);
    policy->pending_query = d.queried;
    *out = {d.prediction, d.delta, d.query_prob, d.queried ? 1 : 0};
  });
}

qufur_status qufur_policy_observe(qufur_policy* policy, const double* x, double label) {
  return guarded([&] {
    need(policy, "policy");
    need(x, "x");
    if (!policy->pending_query)
      qufur::fail(qufur::ErrorKind::InvalidState, "observe called without a pending query");
    const qufur::Vector v = copy_vector(x, policy->dim);
    if (v != policy->pending_x) qufur::fail(qufur::ErrorKind::InvalidState, "observe called with a different input");
    qufur::LearnerInput in;
    in.x = &v;
    policy->learner->observe(in, label);
    policy->pending_query = false;
  });
}

qufur_status qufur_experiment_load(const char* path, qufur_experiment** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(path, "path");
    auto h = std::make_unique<qufur_experiment>();
    h->cfg = qufur::load_experiment(path);
    *out = h.release();
  });
}

qufur_status qufur_experiment_parse(const char* json_text, const char* base_dir, qufur_experiment** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(json_text, "json_text");
    auto h = std::make_unique<qufur_experiment>();
    h->cfg = qufur::parse_experiment(json_text, base_dir ? base_dir : ".");
    *out = h.release();
  });
}

void qufur_experiment_destroy(qufur_experiment* exp) { delete exp; }

qufur_status qufur_experiment_seed_count(const qufur_experiment* exp, size_t* out) {
  return guarded([&] {
    need(exp, "exp");
    need(out, "out");
    *out = exp->cfg.seeds.size();
  });
}

qufur_status qufur_experiment_run(const qufur_experiment* exp, uint64_t seed_index, qufur_episode** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(exp, "exp");
    auto h = std::make_unique<qufur_episode>();
    h->log = qufur::run_configured(exp->cfg, seed_index);
    *out = h.release();
  });
}

qufur_status qufur_experiment_sweep(const qufur_experiment* exp, const char* out_dir) {
  return guarded([&] {
    need(exp, "exp");
    need(out_dir, "out_dir");
    qufur::write_sweep(qufur::sweep(exp->cfg), out_dir);
  });
}

qufur_status qufur_experiment_export_stream(const qufur_experiment* exp, uint64_t seed_index, const char* path) {
  return guarded([&] {
    need(exp, "exp");
    need(path, "path");
    const qufur::Stream s = qufur::configured_stream(exp->cfg, seed_index);
    if (s.dim < 1) qufur::fail(qufur::ErrorKind::Config, "only vector-input streams can be exported");
    qufur::write_replay_csv(s, path);
  });
}

void qufur_episode_destroy(qufur_episode* ep) { delete ep; }

qufur_status qufur_episode_totals(const qufur_episode* ep, qufur_totals* out) {
  return guarded([&] {
    need(ep, "ep");
    need(out, "out");
    const auto& t = ep->log.totals;
    out->rounds = ep->log.rounds.size();
    out->queries = t.queries;
    out->has_regret_R = t.regret_R ? 1 : 0;
    out->regret_R = t.regret_R.value_or(0.0);
    out->regret_Reg = t.regret_Reg;
    out->total_loss = t.total_loss;
    out->has_cost_W = t.cost_W ? 1 : 0;
    out->cost_W = t.cost_W.value_or(0.0);
    out->stream_hash = ep->log.stream_hash;
  });
}

qufur_status qufur_episode_write_rounds(const qufur_episode* ep, const char* path) {
  return guarded([&] {
    need(ep, "ep");
    need(path, "path");
    write_file(path, qufur::format_round_log_csv(ep->log));
  });
}

qufur_status qufur_lower_bound(const size_t* dims, const size_t* durations, size_t m, const size_t* budgets,
                               size_t num_budgets, size_t num_seeds, uint64_t base_seed, const char* out_path,
                               double* slope_out) {
  return guarded([&] {
    need(dims, "dims");
    need(durations, "durations");
    need(budgets, "budgets");
    qufur::DomainSpec spec;
    for (size_t u = 0; u < m; ++u) spec.entries.push_back({static_cast<int>(dims[u]), durations[u]});
    const auto result =
        qufur::lower_bound_experiment(spec, std::vector<size_t>(budgets, budgets + num_budgets), num_seeds, base_seed);
    if (out_path) write_file(out_path, qufur::format_lower_bound_csv(result));
    if (slope_out) *slope_out = result.slope;
  });
}

qufur_status qufur_eluder_dimension(const char* class_path, double epsilon, size_t* out) {
  return guarded([&] {
    need(class_path, "class_path");
    need(out, "out");
    const qufur::HypothesisTable table = qufur::load_hypothesis_table(class_path);
    std::vector<size_t> all(table.support_size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    *out = qufur::eluder_dimension(table, all, epsilon);
  });
}

qufur_status qufur_effective_dimension(const double* eigvals, size_t n, double lambda, int s, int* out) {
  return guarded([&] {
    need(eigvals, "eigvals");
    need(out, "out");
    *out = qufur::effective_dimension(std::vector<double>(eigvals, eigvals + n), lambda, s);
  });
}

}  // extern "C"

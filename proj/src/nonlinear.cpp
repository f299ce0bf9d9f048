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

#include "qufur/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qufur/error.hpp"

namespace qufur {

void HypothesisTable::validate() const {
  if (values.rows() < 1 || values.cols() < 1)
    fail(ErrorKind::InvalidArgument, "hypothesis table needs at least one hypothesis and one input");
  if (support.size() != support_size())
    fail(ErrorKind::InvalidArgument, "support length does not match the value table width");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!std::isfinite(v) || v < -1.0 || v > 1.0)
      fail(ErrorKind::InvalidArgument, "hypothesis values must lie in [-1, 1]");
  }
  if (truth_index && *truth_index >= num_hypotheses())
    fail(ErrorKind::InvalidArgument, "truth_index out of range");
}

HypothesisTable parse_hypothesis_table(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("hypothesis table: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("support") || !doc.contains("values"))
    fail(ErrorKind::Parse, "hypothesis table needs 'support' and 'values'");

  HypothesisTable t;
  for (const auto& s : doc.at("support")) t.support.push_back(s.is_string() ? s.get<std::string>() : s.dump());
  const auto& rows = doc.at("values");
  if (!rows.is_array() || rows.empty()) fail(ErrorKind::Parse, "'values' must be a non-empty array");
  const auto n = static_cast<Eigen::Index>(t.support.size());
  t.values.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    if (!rows[f].is_array() || static_cast<Eigen::Index>(rows[f].size()) != n)
      fail(ErrorKind::Parse, "row " + std::to_string(f) + " of 'values' has the wrong length");
    for (Eigen::Index x = 0; x < n; ++x) {
      const auto& v = rows[f][static_cast<std::size_t>(x)];
      if (!v.is_number()) fail(ErrorKind::Parse, "non-numeric hypothesis value");
      t.values(static_cast<Eigen::Index>(f), x) = v.get<double>();
    }
  }
  if (doc.contains("truth_index") && !doc.at("truth_index").is_null())
    t.truth_index = doc.at("truth_index").get<std::size_t>();
  t.validate();
  return t;
}

HypothesisTable load_hypothesis_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open hypothesis table: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_hypothesis_table(ss.str());
}

bool ConfidenceSet::contains(std::size_t f) const {
  return std::binary_search(member_indices.begin(), member_indices.end(), f);
}

std::size_t erm(const HypothesisTable& table, std::span<const LabeledPoint> labeled) {
  if (table.num_hypotheses() == 0) fail(ErrorKind::InvalidArgument, "empty hypothesis table");
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < table.num_hypotheses(); ++f) {
    double loss = 0.0;
    for (const auto& p : labeled) {
      const double r = table.at(f, p.x_id) - p.y;
      loss += r * r;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = f;
    }
  }
  return best;
}

double beta_threshold(std::size_t k, std::size_t horizon, double eta, double delta, std::size_t cover_size) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
  require(horizon >= 1 && cover_size >= 1 && eta >= 0.0, "invalid beta_threshold arguments");
  const double eta2 = eta * eta;
  double beta = 8.0 * eta2 * std::log(4.0 * static_cast<double>(cover_size) / delta);
  if (k > 0) {
    const double kd = static_cast<double>(k);
    const double t2 = static_cast<double>(horizon) * static_cast<double>(horizon);
    beta += (2.0 * kd / t2) * (16.0 + std::sqrt(2.0 * eta2 * std::log(16.0 * kd * kd / delta)));
  }
  return beta;
}

ConfidenceSet confidence_set(const HypothesisTable& table, std::size_t center,
                             std::span<const LabeledPoint> labeled, double threshold) {
  require(center < table.num_hypotheses(), "center index out of range");
  ConfidenceSet set;
  set.center_index = center;
  set.threshold = threshold;
  for (std::size_t f = 0; f < table.num_hypotheses(); ++f) {
    double dist = 0.0;
    for (const auto& p : labeled) {
      const double r = table.at(f, p.x_id) - table.at(center, p.x_id);
      dist += r * r;
    }
    if (f == center || dist <= threshold) set.member_indices.push_back(f);
  }
  return set;
}

double disagreement(const HypothesisTable& table, const ConfidenceSet& set, std::size_t x_id) {
  if (set.member_indices.empty()) fail(ErrorKind::InvalidState, "disagreement over an empty confidence set");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t f : set.member_indices) {
    lo = std::min(lo, table.at(f, x_id));
    hi = std::max(hi, table.at(f, x_id));
  }
  return (hi - lo) * (hi - lo);
}

NonlinearView nonlinear_view(const HypothesisTable& table, std::span<const LabeledPoint> labeled,
                             const PolicyConfig& cfg, std::size_t cover_size, std::size_t x_id) {
  require(x_id < table.support_size(), "input id out of range");
  NonlinearView v;
  v.center = erm(table, labeled);
  const double beta =
      beta_threshold(labeled.size(), cfg.horizon, cfg.noise_level, cfg.confidence_delta, cover_size);
  v.set = confidence_set(table, v.center, labeled, beta);
  v.prediction = table.at(v.center, x_id);
  v.delta = disagreement(table, v.set, x_id);
  return v;
}

RoundDecision nonlinear_qufur_step(const HypothesisTable& table, std::span<const LabeledPoint> labeled,
                                   const PolicyConfig& cfg, std::size_t cover_size, std::size_t x_id,
                                   const RandomSource& rng, std::uint64_t round) {
  const NonlinearView v = nonlinear_view(table, labeled, cfg, cover_size, x_id);
  RoundDecision d;
  d.prediction = v.prediction;
  d.delta = v.delta;
  d.query_prob = std::min(1.0, cfg.alpha * v.delta);
  if (auto b = cfg.effective_budget(); b && labeled.size() >= *b) {
    d.query_prob = 0.0;
    return d;
  }
  d.queried = rng.bernoulli_at(d.query_prob, round, 0);
  return d;
}

NonlinearMaster make_nonlinear_master(const HypothesisTable& table, const PolicyConfig& cfg) {
  cfg.validate();
  if (!cfg.budget) fail(ErrorKind::Config, "general-class master requires a budget");
  NonlinearMaster m;
  m.bank = CopyBank::make(general_master_k(cfg.horizon), cfg.horizon, *cfg.effective_budget());
  const double t = static_cast<double>(cfg.horizon);
  m.cover_size = covering_number(table, 1.0 / (t * t));
  return m;
}

RoundDecision nonlinear_master_step(NonlinearMaster& master, const HypothesisTable& table,
                                    const PolicyConfig& cfg, std::size_t x_id, const RandomSource& rng,
                                    std::uint64_t round) {
  const NonlinearView v = nonlinear_view(table, master.labeled, cfg, master.cover_size, x_id);
  RoundDecision d;
  d.prediction = v.prediction;
  d.delta = v.delta;
  std::tie(d.query_prob, d.queried) = master.bank.decide(d.delta, rng, round);
  return d;
}

namespace {

// Longest eps'-independent sequence for one threshold. Elements never repeat
// usefully: a repeat x has (f1(x) - f2(x))^2 > eps'^2 among its own
// predecessors, so it is always eps'-dependent. The search is therefore a
// longest chain over subsets; independence depends only on the predecessor set.
std::size_t longest_independent_chain(const std::vector<std::vector<double>>& gaps, std::size_t n, double eps) {
  const std::size_t full = std::size_t{1} << n;
  // indep[mask] = bitmask of elements eps-independent of the elements in mask
  std::vector<std::uint32_t> indep(full, 0);
  for (const auto& g : gaps) {
    std::uint32_t big = 0;
    for (std::size_t x = 0; x < n; ++x)
      if (g[x] > eps) big |= 1u << x;
    if (big == 0) continue;
    for (std::size_t mask = 0; mask < full; ++mask) {
      double s = 0.0;
      for (std::size_t x = 0; x < n; ++x)
        if (mask & (std::size_t{1} << x)) s += g[x] * g[x];
      if (std::sqrt(s) <= eps) indep[mask] |= big;
    }
  }
  std::vector<char> reachable(full, 0);
  reachable[0] = 1;
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!reachable[mask]) continue;
    best = std::max<std::size_t>(best, static_cast<std::size_t>(__builtin_popcountll(mask)));
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t bit = std::size_t{1} << x;
      if (!(mask & bit) && (indep[mask] & bit)) reachable[mask | bit] = 1;
    }
  }
  return best;
}

}  // namespace

std::size_t eluder_dimension(const HypothesisTable& table, const std::vector<std::size_t>& support_subset,
                             double epsilon) {
  require(epsilon > 0.0, "epsilon must be positive");
  const std::size_t n = support_subset.size();
  if (n > kEluderMaxSupport || table.num_hypotheses() > kEluderMaxHypotheses)
    fail(ErrorKind::ResourceLimit, "eluder search limited to 8 inputs and 64 hypotheses");
  for (std::size_t x : support_subset) require(x < table.support_size(), "support id out of range");
  if (n == 0) return 0;

  // distinct absolute gap vectors over unordered hypothesis pairs
  std::set<std::vector<double>> unique_gaps;
  for (std::size_t a = 0; a < table.num_hypotheses(); ++a)
    for (std::size_t b = a + 1; b < table.num_hypotheses(); ++b) {
      std::vector<double> g(n);
      bool nonzero = false;
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::abs(table.at(a, support_subset[i]) - table.at(b, support_subset[i]));
        nonzero = nonzero || g[i] > 0.0;
      }
      if (nonzero) unique_gaps.insert(std::move(g));
    }
  if (unique_gaps.empty()) return 0;
  const std::vector<std::vector<double>> gaps(unique_gaps.begin(), unique_gaps.end());

  // The answer for eps' only changes where eps' crosses a single-input gap or
  // a predecessor-set norm, so those values and the midpoints between them
  // cover every distinct case.
  // Above the largest single-input gap nothing is independent of anything.
  double max_gap = 0.0;
  for (const auto& g : gaps) max_gap = std::max(max_gap, *std::max_element(g.begin(), g.end()));
  if (max_gap <= epsilon) return 0;

  std::set<double> critical;
  const std::size_t full = std::size_t{1} << n;
  for (const auto& g : gaps) {
    for (double v : g) critical.insert(v);
    for (std::size_t mask = 1; mask < full; ++mask) {
      double s = 0.0;
      for (std::size_t x = 0; x < n; ++x)
        if (mask & (std::size_t{1} << x)) s += g[x] * g[x];
      if (std::sqrt(s) < max_gap) critical.insert(std::sqrt(s));
    }
  }
  std::vector<double> candidates;
  double prev = epsilon;
  for (double c : critical) {
    if (c <= epsilon || c >= max_gap) continue;
    candidates.push_back(0.5 * (prev + c));
    candidates.push_back(c);
    prev = c;
  }
  candidates.push_back(0.5 * (prev + max_gap));

  std::size_t best = 0;
  for (double eps : candidates) {
    if (!(eps > epsilon)) continue;
    best = std::max(best, longest_independent_chain(gaps, n, eps));
    if (best == n) break;
  }
  return best;
}

std::size_t covering_number(const HypothesisTable& table, double epsilon) {
  require(table.num_hypotheses() > 0, "empty hypothesis table");
  const std::size_t m = table.num_hypotheses();
  std::vector<char> covered(m, 0);
  std::size_t centers = 0;
  for (std::size_t c = 0; c < m; ++c) {
    if (covered[c]) continue;
    ++centers;
    for (std::size_t f = 0; f < m; ++f) {
      if (covered[f]) continue;
      const double sup = (table.values.row(static_cast<Eigen::Index>(f)) -
                          table.values.row(static_cast<Eigen::Index>(c)))
                             .cwiseAbs()
                             .maxCoeff();
      if (sup <= epsilon) covered[f] = 1;
    }
  }
  return centers;
}

}  // namespace qufur

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
#include <span>
#include <string>
#include <vector>

#include "qufur/policy.hpp"

namespace qufur {

/// A finite hypothesis class stored as a value table over a finite support:
/// values(f, x) = f(x), every entry in [-1, 1].
struct HypothesisTable {
  std::vector<std::string> support;
  Matrix values;  // |F| x n
  std::optional<std::size_t> truth_index;

  std::size_t num_hypotheses() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t support_size() const noexcept { return static_cast<std::size_t>(values.cols()); }
  double at(std::size_t f, std::size_t x) const {
    return values(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(x));
  }

  void validate() const;
};

/// {"support": [...], "values": [[...], ...], "truth_index": n}
HypothesisTable parse_hypothesis_table(const std::string& json_text);
HypothesisTable load_hypothesis_table(const std::string& path);

struct LabeledPoint {
  std::size_t x_id = 0;
  double y = 0.0;
};

struct ConfidenceSet {
  std::vector<std::size_t> member_indices;
  std::size_t center_index = 0;
  double threshold = 0.0;

  bool contains(std::size_t f) const;
};

/// Empirical squared-loss minimizer; lowest index wins ties.
std::size_t erm(const HypothesisTable& table, std::span<const LabeledPoint> labeled);

/// 8 eta^2 ln(4 N / delta) + (2k / T^2)(16 + sqrt(2 eta^2 ln(16 k^2 / delta))), natural logs.
double beta_threshold(std::size_t k, std::size_t horizon, double eta, double delta, std::size_t cover_size);

ConfidenceSet confidence_set(const HypothesisTable& table, std::size_t center,
                             std::span<const LabeledPoint> labeled, double threshold);

/// sup over member pairs of |f1(x) - f2(x)|^2, i.e. the squared range at x.
double disagreement(const HypothesisTable& table, const ConfidenceSet& set, std::size_t x_id);

/// Everything the general-class learner computes before its coin flip.
struct NonlinearView {
  std::size_t center = 0;
  ConfidenceSet set;
  double prediction = 0.0;
  double delta = 0.0;
};

NonlinearView nonlinear_view(const HypothesisTable& table, std::span<const LabeledPoint> labeled,
                             const PolicyConfig& cfg, std::size_t cover_size, std::size_t x_id);

/// One round of QuFUR(alpha) over a finite class. `cover_size` is the
/// 1/T^2 sup-norm covering number fed to beta_threshold.
RoundDecision nonlinear_qufur_step(const HypothesisTable& table, std::span<const LabeledPoint> labeled,
                                   const PolicyConfig& cfg, std::size_t cover_size, std::size_t x_id,
                                   const RandomSource& rng, std::uint64_t round);

struct NonlinearMaster {
  CopyBank bank;
  std::vector<LabeledPoint> labeled;
  std::size_t cover_size = 1;
};

/// k = 3 ceil(log2 T) copies plus one; requires cfg.budget.
NonlinearMaster make_nonlinear_master(const HypothesisTable& table, const PolicyConfig& cfg);

/// The caller appends the revealed label to master.labeled on a query.
RoundDecision nonlinear_master_step(NonlinearMaster& master, const HypothesisTable& table,
                                    const PolicyConfig& cfg, std::size_t x_id, const RandomSource& rng,
                                    std::uint64_t round);

inline constexpr std::size_t kEluderMaxSupport = 8;
inline constexpr std::size_t kEluderMaxHypotheses = 64;

/// Exhaustive eluder dimension over `support_subset`, maximizing over the
/// finitely many distinct thresholds eps' > eps.
std::size_t eluder_dimension(const HypothesisTable& table, const std::vector<std::size_t>& support_subset,
                             double epsilon);

/// Greedy sup-norm cover size: repeatedly take the lowest-index uncovered
/// hypothesis as a center.
std::size_t covering_number(const HypothesisTable& table, double epsilon);

}  // namespace qufur

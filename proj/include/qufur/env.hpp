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
#include <string>
#include <utility>
#include <vector>

#include "qufur/linalg.hpp"
#include "qufur/nonlinear.hpp"
#include "qufur/policy.hpp"

namespace qufur {

enum class Ordering { Sequential, Interleaved, Shuffled };

Ordering parse_ordering(const std::string& name);
std::string ordering_name(Ordering o);

struct DomainSpec {
  std::vector<DomainSize> entries;
  Ordering ordering = Ordering::Sequential;

  std::size_t total_rounds() const;
  int total_dim() const;
  void validate() const;
};

/// One materialized round. The label is drawn up front by the environment;
/// the harness hands it to a learner only when the learner queries.
struct StreamRound {
  std::size_t t = 0;
  Vector x;
  std::size_t x_id = 0;  // finite-class environments only
  int domain_id = 0;
  std::optional<double> true_mean;
  double label = 0.0;
};

struct GroundTruth {
  Vector theta_star;
  std::optional<std::size_t> truth_index;
  double noise_eta = 0.0;
};

struct Stream {
  GroundTruth truth;
  std::vector<StreamRound> rounds;
  int dim = 0;
  std::size_t rescaled_rows = 0;

  bool has_true_mean() const;
  /// 64-bit content hash over inputs, labels, means and domain ids.
  std::uint64_t hash() const;
};

/// Hidden-domain linear stream. Domain u lives in its own block of d_u
/// coordinates, randomly rotated; x = V_u z with z uniform on the unit sphere;
/// theta* uniform on the unit sphere of R^d; y = <theta*, x> + N(0, eta^2).
Stream synthetic_stream(const DomainSpec& spec, int ambient_dim, double eta, std::uint64_t seed);

/// Block/subblock adversary: subblock (u, i) repeats the standard basis vector
/// c_{u,i}; theta* coordinates ~ U[0, 1]; labels ~ Bernoulli(theta*_{u,i}).
Stream lower_bound_stream(const DomainSpec& spec, std::uint64_t seed);

/// Lengths of the d_u subblocks of a block of length T_u.
std::vector<std::size_t> subblock_lengths(const DomainSize& domain);

/// Finite-class stream: inputs are support ids drawn uniformly (per domain
/// support when `domain_supports` is non-empty, with domain u lasting
/// domain_lengths[u] rounds), labels f*(x) + N(0, eta^2).
Stream finite_class_stream(const HypothesisTable& table, std::size_t truth_index, std::size_t horizon,
                           double eta, std::uint64_t seed,
                           const std::vector<std::vector<std::size_t>>& domain_supports = {},
                           const std::vector<std::size_t>& domain_lengths = {});

/// CSV replay: header t,domain_id,true_mean,y,x_0,...,x_{d-1}; true_mean may
/// be NA. Rows with ||x|| > 1 are rescaled to unit norm and counted.
Stream replay_stream(const std::string& path);
Stream parse_replay_csv(const std::string& text);

/// Inverse of replay_stream, with round-trip exact float formatting.
std::string format_replay_csv(const Stream& stream);
void write_replay_csv(const Stream& stream, const std::string& path);

/// (domain id, (d_u, T_u)) in ascending id order as observed in the stream:
/// T_u is the round count and d_u the numerical rank of the domain's inputs,
/// at least 1.
std::vector<std::pair<int, DomainSize>> observed_domains(const Stream& stream);

}  // namespace qufur

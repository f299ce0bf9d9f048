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

#include "qufur/env.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "qufur/error.hpp"
#include "qufur/random.hpp"

namespace qufur {

namespace {

Vector unit_sphere(int n, Engine& eng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = g(eng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Matrix random_rotation(int n, Engine& eng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = g(eng);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(n, n);
}

// Domain index of every round, in time order.
std::vector<int> domain_schedule(const DomainSpec& spec, Engine& eng) {
  std::vector<int> order;
  order.reserve(spec.total_rounds());
  switch (spec.ordering) {
    case Ordering::Sequential:
      for (std::size_t u = 0; u < spec.entries.size(); ++u)
        order.insert(order.end(), spec.entries[u].duration, static_cast<int>(u));
      break;
    case Ordering::Interleaved: {
      std::vector<std::size_t> left;
      for (const auto& e : spec.entries) left.push_back(e.duration);
      for (bool any = true; any;) {
        any = false;
        for (std::size_t u = 0; u < left.size(); ++u)
          if (left[u] > 0) {
            --left[u];
            order.push_back(static_cast<int>(u));
            any = true;
          }
      }
      break;
    }
    case Ordering::Shuffled:
      for (std::size_t u = 0; u < spec.entries.size(); ++u)
        order.insert(order.end(), spec.entries[u].duration, static_cast<int>(u));
      std::shuffle(order.begin(), order.end(), eng);
      break;
  }
  return order;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Ordering parse_ordering(const std::string& name) {
  if (name == "sequential") return Ordering::Sequential;
  if (name == "interleaved") return Ordering::Interleaved;
  if (name == "shuffled") return Ordering::Shuffled;
  fail(ErrorKind::Config, "unknown ordering '" + name + "'");
}

std::string ordering_name(Ordering o) {
  switch (o) {
    case Ordering::Sequential:
      return "sequential";
    case Ordering::Interleaved:
      return "interleaved";
    case Ordering::Shuffled:
      return "shuffled";
  }
  return "sequential";
}

std::size_t DomainSpec::total_rounds() const {
  std::size_t t = 0;
  for (const auto& e : entries) t += e.duration;
  return t;
}

int DomainSpec::total_dim() const {
  int d = 0;
  for (const auto& e : entries) d += e.dim;
  return d;
}

void DomainSpec::validate() const {
  if (entries.empty()) fail(ErrorKind::InvalidArgument, "domain spec has no domains");
  for (const auto& e : entries)
    if (e.dim < 1 || e.duration < static_cast<std::size_t>(e.dim))
      fail(ErrorKind::InvalidArgument, "each domain needs 1 <= d_u <= T_u");
}

bool Stream::has_true_mean() const {
  return std::all_of(rounds.begin(), rounds.end(), [](const StreamRound& r) { return r.true_mean.has_value(); });
}

std::uint64_t Stream::hash() const {
  std::uint64_t h = hash64(static_cast<std::uint64_t>(dim), rounds.size());
  for (const auto& r : rounds) {
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(r.domain_id)));
    h = hash_combine(h, r.x_id);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) h = hash_combine(h, std::bit_cast<std::uint64_t>(r.x[i]));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(r.label));
    h = hash_combine(h, r.true_mean ? std::bit_cast<std::uint64_t>(*r.true_mean) : 0x7ff8dead0000beefULL);
  }
  return h;
}

Stream synthetic_stream(const DomainSpec& spec, int ambient_dim, double eta, std::uint64_t seed) {
  spec.validate();
  if (spec.total_dim() > ambient_dim)
    fail(ErrorKind::InvalidArgument, "sum of domain dimensions exceeds the ambient dimension");
  require(eta >= 0.0 && std::isfinite(eta), "eta must be >= 0");

  Engine eng(seed);
  Stream s;
  s.dim = ambient_dim;
  s.truth.noise_eta = eta;
  s.truth.theta_star = unit_sphere(ambient_dim, eng);

  std::vector<int> offset;
  std::vector<Matrix> basis;
  int off = 0;
  for (const auto& e : spec.entries) {
    offset.push_back(off);
    basis.push_back(random_rotation(e.dim, eng));
    off += e.dim;
  }

  const std::vector<int> schedule = domain_schedule(spec, eng);
  std::normal_distribution<double> noise(0.0, eta > 0.0 ? eta : 1.0);
  s.rounds.reserve(schedule.size());
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const int u = schedule[t];
    const int du = spec.entries[static_cast<std::size_t>(u)].dim;
    StreamRound r;
    r.t = t;
    r.domain_id = u;
    r.x = Vector::Zero(ambient_dim);
    r.x.segment(offset[static_cast<std::size_t>(u)], du) = basis[static_cast<std::size_t>(u)] * unit_sphere(du, eng);
    r.true_mean = s.truth.theta_star.dot(r.x);
    r.label = *r.true_mean + (eta > 0.0 ? noise(eng) : 0.0);
    s.rounds.push_back(std::move(r));
  }
  return s;
}

std::vector<std::size_t> subblock_lengths(const DomainSize& domain) {
  require(domain.dim >= 1 && domain.duration >= static_cast<std::size_t>(domain.dim), "need 1 <= d_u <= T_u");
  const auto d = static_cast<std::size_t>(domain.dim);
  const std::size_t base = domain.duration / d;
  std::vector<std::size_t> len(d, base);
  len.back() = domain.duration - (d - 1) * base;
  return len;
}

Stream lower_bound_stream(const DomainSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int d = spec.total_dim();
  Engine eng(seed);
  Stream s;
  s.dim = d;
  s.truth.noise_eta = 0.5;  // Bernoulli noise is 1/4 sub-Gaussian
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  s.truth.theta_star = Vector(d);
  for (int j = 0; j < d; ++j) s.truth.theta_star[j] = unif(eng);

  std::size_t t = 0;
  int coord = 0;
  for (std::size_t u = 0; u < spec.entries.size(); ++u) {
    const auto lengths = subblock_lengths(spec.entries[u]);
    for (std::size_t i = 0; i < lengths.size(); ++i, ++coord) {
      const double mean = s.truth.theta_star[coord];
      std::bernoulli_distribution coin(mean);
      for (std::size_t k = 0; k < lengths[i]; ++k) {
        StreamRound r;
        r.t = t++;
        r.domain_id = static_cast<int>(u);
        r.x = Vector::Unit(d, coord);
        r.true_mean = mean;
        r.label = coin(eng) ? 1.0 : 0.0;
        s.rounds.push_back(std::move(r));
      }
    }
  }
  return s;
}

Stream finite_class_stream(const HypothesisTable& table, std::size_t truth_index, std::size_t horizon,
                           double eta, std::uint64_t seed,
                           const std::vector<std::vector<std::size_t>>& domain_supports,
                           const std::vector<std::size_t>& domain_lengths) {
  table.validate();
  require(truth_index < table.num_hypotheses(), "truth index out of range");
  require(eta >= 0.0 && std::isfinite(eta), "eta must be >= 0");
  require(domain_supports.size() == domain_lengths.size(), "one length per domain support");

  std::vector<int> schedule;
  std::vector<std::vector<std::size_t>> supports = domain_supports;
  if (supports.empty()) {
    require(horizon >= 1, "horizon must be >= 1");
    std::vector<std::size_t> all(table.support_size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    supports.push_back(std::move(all));
    schedule.assign(horizon, 0);
  } else {
    for (std::size_t u = 0; u < supports.size(); ++u) {
      require(!supports[u].empty(), "domain support must be non-empty");
      for (std::size_t x : supports[u]) require(x < table.support_size(), "domain support id out of range");
      schedule.insert(schedule.end(), domain_lengths[u], static_cast<int>(u));
    }
  }

  Engine eng(seed);
  Stream s;
  s.dim = 0;
  s.truth.truth_index = truth_index;
  s.truth.noise_eta = eta;
  std::normal_distribution<double> noise(0.0, eta > 0.0 ? eta : 1.0);
  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const auto& sup = supports[static_cast<std::size_t>(schedule[t])];
    std::uniform_int_distribution<std::size_t> pick(0, sup.size() - 1);
    StreamRound r;
    r.t = t;
    r.domain_id = schedule[t];
    r.x_id = sup[pick(eng)];
    r.true_mean = table.at(truth_index, r.x_id);
    r.label = *r.true_mean + (eta > 0.0 ? noise(eng) : 0.0);
    s.rounds.push_back(std::move(r));
  }
  return s;
}

Stream parse_replay_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  auto parse_number = [&](const std::string& cell, const char* what) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (cell.empty() || end != begin + cell.size() || errno == ERANGE || !std::isfinite(v))
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad " + what + " '" + cell + "'");
    return v;
  };

  if (!std::getline(in, line)) fail(ErrorKind::Parse, "replay file is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 5 || header[0] != "t" || header[1] != "domain_id" || header[2] != "true_mean" ||
      header[3] != "y")
    fail(ErrorKind::Parse, "line 1: header must start with t,domain_id,true_mean,y,x_0");
  const int d = static_cast<int>(header.size() - 4);
  for (int i = 0; i < d; ++i)
    if (header[static_cast<std::size_t>(i) + 4] != "x_" + std::to_string(i))
      fail(ErrorKind::Parse, "line 1: expected column x_" + std::to_string(i));

  Stream s;
  s.dim = d;
  long long prev_t = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(cells.size()));
    const double tv = parse_number(cells[0], "t");
    const double dv = parse_number(cells[1], "domain_id");
    if (tv != std::floor(tv) || tv < 0 || dv != std::floor(dv))
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": t and domain_id must be integers");
    if (static_cast<long long>(tv) <= prev_t)
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": rows must be sorted by t");
    prev_t = static_cast<long long>(tv);

    StreamRound r;
    r.t = static_cast<std::size_t>(tv);
    r.domain_id = static_cast<int>(dv);
    if (cells[2] != "NA") r.true_mean = parse_number(cells[2], "true_mean");
    r.label = parse_number(cells[3], "y");
    r.x = Vector(d);
    for (int i = 0; i < d; ++i) r.x[i] = parse_number(cells[static_cast<std::size_t>(i) + 4], "x");
    const double norm = r.x.norm();
    if (norm > 1.0 + 1e-9) {
      r.x /= norm;
      ++s.rescaled_rows;
    }
    s.rounds.push_back(std::move(r));
  }
  return s;
}

Stream replay_stream(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open replay file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_replay_csv(ss.str());
}

std::string format_replay_csv(const Stream& stream) {
  std::string out = "t,domain_id,true_mean,y";
  for (int i = 0; i < stream.dim; ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (const auto& r : stream.rounds) {
    out += std::to_string(r.t) + ',' + std::to_string(r.domain_id) + ',';
    out += r.true_mean ? format_double(*r.true_mean) : "NA";
    out += ',' + format_double(r.label);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out += ',' + format_double(r.x[i]);
    out += '\n';
  }
  return out;
}

void write_replay_csv(const Stream& stream, const std::string& path) {
  if (stream.dim == 0) fail(ErrorKind::InvalidArgument, "only vector-input streams can be exported");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << format_replay_csv(stream);
}

std::vector<std::pair<int, DomainSize>> observed_domains(const Stream& stream) {
  std::map<int, std::vector<const StreamRound*>> by_domain;
  for (const auto& r : stream.rounds) by_domain[r.domain_id].push_back(&r);
  std::vector<std::pair<int, DomainSize>> out;
  for (const auto& [id, rows] : by_domain) {
    DomainSize ds;
    ds.duration = rows.size();
    ds.dim = 1;
    if (stream.dim > 0) {
      Matrix xs(static_cast<Eigen::Index>(rows.size()), stream.dim);
      for (std::size_t i = 0; i < rows.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = rows[i]->x.transpose();
      Eigen::ColPivHouseholderQR<Matrix> qr(xs);
      qr.setThreshold(1e-9);
      ds.dim = std::max<int>(1, static_cast<int>(qr.rank()));
      ds.dim = std::min<int>(ds.dim, static_cast<int>(ds.duration));
    }
    out.emplace_back(id, ds);
  }
  return out;
}

}  // namespace qufur

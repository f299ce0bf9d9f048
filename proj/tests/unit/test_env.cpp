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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "qufur/env.hpp"
#include "qufur/error.hpp"

namespace {

qufur::DomainSpec spec_of(std::vector<qufur::DomainSize> e, qufur::Ordering o = qufur::Ordering::Sequential) {
  qufur::DomainSpec s;
  s.entries = std::move(e);
  s.ordering = o;
  return s;
}

TEST(DomainSpec, Validation) {
  EXPECT_THROW(spec_of({}).validate(), qufur::Error);
  EXPECT_THROW(spec_of({{3, 2}}).validate(), qufur::Error);
  EXPECT_THROW(spec_of({{0, 2}}).validate(), qufur::Error);
  EXPECT_NO_THROW(spec_of({{2, 2}, {1, 9}}).validate());
  EXPECT_EQ(spec_of({{2, 2}, {1, 9}}).total_rounds(), 11u);
  EXPECT_EQ(spec_of({{2, 2}, {1, 9}}).total_dim(), 3);
}

TEST(Ordering, NamesRoundTrip) {
  for (auto o : {qufur::Ordering::Sequential, qufur::Ordering::Interleaved, qufur::Ordering::Shuffled})
    EXPECT_EQ(qufur::parse_ordering(qufur::ordering_name(o)), o);
  EXPECT_THROW(qufur::parse_ordering("random"), qufur::Error);
}

TEST(Synthetic, PaperConfigShape) {
  std::vector<qufur::DomainSize> e;
  for (int i = 0; i < 20; ++i) e.push_back(i % 2 == 0 ? qufur::DomainSize{6, 100} : qufur::DomainSize{3, 50});
  // 10*6 + 10*3 = 90 coordinates are needed for disjoint blocks
  EXPECT_THROW(qufur::synthetic_stream(spec_of(e), 88, std::sqrt(0.1), 3), qufur::Error);
  const auto s = qufur::synthetic_stream(spec_of(e), 90, std::sqrt(0.1), 3);
  EXPECT_EQ(s.rounds.size(), 1500u);
  EXPECT_EQ(s.dim, 90);
  EXPECT_NEAR(s.truth.theta_star.norm(), 1.0, 1e-12);
  EXPECT_NEAR(s.truth.noise_eta * s.truth.noise_eta, 0.1, 1e-12);
}

TEST(Synthetic, UnitInputsOnOrthogonalSubspaces) {
  for (auto o : {qufur::Ordering::Sequential, qufur::Ordering::Interleaved, qufur::Ordering::Shuffled}) {
    const auto s = qufur::synthetic_stream(spec_of({{3, 40}, {2, 30}, {4, 50}}, o), 12, 0.3, 9);
    std::map<int, std::vector<qufur::Vector>> by_domain;
    for (const auto& r : s.rounds) {
      EXPECT_NEAR(r.x.norm(), 1.0, 1e-9);
      EXPECT_LE(std::fabs(*r.true_mean), 1.0);
      EXPECT_NEAR(*r.true_mean, s.truth.theta_star.dot(r.x), 1e-15);
      by_domain[r.domain_id].push_back(r.x);
    }
    ASSERT_EQ(by_domain.size(), 3u);
    EXPECT_EQ(by_domain[0].size(), 40u);
    EXPECT_EQ(by_domain[2].size(), 50u);
    // Gram check across domains.
    for (const auto& [u, xs] : by_domain)
      for (const auto& [v, ys] : by_domain) {
        if (u == v) continue;
        for (const auto& a : xs)
          for (const auto& b : ys) EXPECT_LE(std::fabs(a.dot(b)), 1e-9);
      }
  }
}

TEST(Synthetic, OrderingSchedules) {
  const auto seq = qufur::synthetic_stream(spec_of({{1, 3}, {1, 2}}), 2, 0.0, 1);
  std::vector<int> ids;
  for (const auto& r : seq.rounds) ids.push_back(r.domain_id);
  EXPECT_EQ(ids, (std::vector<int>{0, 0, 0, 1, 1}));
  const auto il = qufur::synthetic_stream(spec_of({{1, 3}, {1, 2}}, qufur::Ordering::Interleaved), 2, 0.0, 1);
  ids.clear();
  for (const auto& r : il.rounds) ids.push_back(r.domain_id);
  EXPECT_EQ(ids, (std::vector<int>{0, 1, 0, 1, 0}));
}

TEST(Synthetic, NoiseFreeLabelsEqualMeans) {
  const auto s = qufur::synthetic_stream(spec_of({{2, 10}}), 2, 0.0, 4);
  for (const auto& r : s.rounds) EXPECT_EQ(r.label, *r.true_mean);
}

TEST(Synthetic, NoiseVarianceMatches) {
  const auto s = qufur::synthetic_stream(spec_of({{2, 20000}}), 2, 0.5, 4);
  double ss = 0.0;
  for (const auto& r : s.rounds) ss += std::pow(r.label - *r.true_mean, 2);
  EXPECT_NEAR(ss / 20000.0, 0.25, 0.01);
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto spec = spec_of({{3, 30}, {2, 20}}, qufur::Ordering::Shuffled);
  const auto a = qufur::synthetic_stream(spec, 6, 0.2, 12);
  const auto b = qufur::synthetic_stream(spec, 6, 0.2, 12);
  const auto c = qufur::synthetic_stream(spec, 6, 0.2, 13);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  for (std::size_t t = 0; t < a.rounds.size(); ++t) EXPECT_EQ(a.rounds[t].x, b.rounds[t].x);
}

TEST(Synthetic, DimensionOverflowIsInvalidArgument) {
  try {
    qufur::synthetic_stream(spec_of({{3, 5}, {3, 5}}), 5, 0.1, 1);
    FAIL();
  } catch (const qufur::Error& e) {
    EXPECT_EQ(e.kind(), qufur::ErrorKind::InvalidArgument);
  }
}

TEST(LowerBound, SingleCoordinate) {
  const auto s = qufur::lower_bound_stream(spec_of({{1, 4}}), 5);
  ASSERT_EQ(s.rounds.size(), 4u);
  for (const auto& r : s.rounds) {
    EXPECT_EQ(r.x, qufur::Vector::Unit(1, 0));
    EXPECT_TRUE(r.label == 0.0 || r.label == 1.0);
    EXPECT_EQ(*r.true_mean, s.truth.theta_star[0]);
  }
}

TEST(LowerBound, SubblockLengths) {
  EXPECT_EQ(qufur::subblock_lengths({3, 10}), (std::vector<std::size_t>{3, 3, 4}));
  for (int d = 1; d <= 9; ++d)
    for (std::size_t T = static_cast<std::size_t>(d); T < 60; ++T) {
      const auto len = qufur::subblock_lengths({d, T});
      std::size_t sum = 0;
      for (auto l : len) {
        sum += l;
        EXPECT_GE(2.0 * static_cast<double>(l) * d, static_cast<double>(T));
      }
      EXPECT_EQ(sum, T);
    }
}

TEST(LowerBound, BlockStructureAndMeans) {
  const auto s = qufur::lower_bound_stream(spec_of({{2, 100}, {4, 400}}), 8);
  ASSERT_EQ(s.rounds.size(), 500u);
  EXPECT_LE(s.truth.theta_star.norm(), std::sqrt(6.0));
  for (int j = 0; j < 6; ++j) {
    EXPECT_GE(s.truth.theta_star[j], 0.0);
    EXPECT_LE(s.truth.theta_star[j], 1.0);
  }
  // subblock (0,1) is rounds 50..99 on coordinate 1; (1,0) starts at 100
  EXPECT_EQ(s.rounds[50].x, qufur::Vector::Unit(6, 1));
  EXPECT_EQ(s.rounds[99].x, qufur::Vector::Unit(6, 1));
  EXPECT_EQ(s.rounds[100].x, qufur::Vector::Unit(6, 2));
  EXPECT_EQ(s.rounds[100].domain_id, 1);
  EXPECT_EQ(s.rounds[499].x, qufur::Vector::Unit(6, 5));
}

TEST(LowerBound, BernoulliLabelsHaveTheRightMean) {
  const auto s = qufur::lower_bound_stream(spec_of({{1, 40000}}), 2);
  double sum = 0.0;
  for (const auto& r : s.rounds) sum += r.label;
  EXPECT_NEAR(sum / 40000.0, s.truth.theta_star[0], 0.01);
}

TEST(Replay, ParsesSmallFileBitExact) {
  const auto s = qufur::parse_replay_csv(
      "t,domain_id,true_mean,y,x_0,x_1\n"
      "0,0,0.25,0.5,0.1,0.2\n"
      "1,1,NA,-0.75,0.30000000000000004,0\n"
      "2,0,0,1e-3,-0.5,0.5\n");
  ASSERT_EQ(s.rounds.size(), 3u);
  EXPECT_EQ(s.dim, 2);
  EXPECT_EQ(s.rounds[1].x[0], 0.30000000000000004);
  EXPECT_EQ(s.rounds[2].label, 1e-3);
  EXPECT_FALSE(s.rounds[1].true_mean.has_value());
  EXPECT_FALSE(s.has_true_mean());
  EXPECT_EQ(s.rounds[1].domain_id, 1);
  EXPECT_EQ(s.rescaled_rows, 0u);
}

TEST(Replay, RescalesLongRows) {
  const auto s = qufur::parse_replay_csv("t,domain_id,true_mean,y,x_0,x_1\n0,0,NA,0,3,4\n");
  EXPECT_EQ(s.rescaled_rows, 1u);
  EXPECT_NEAR(s.rounds[0].x.norm(), 1.0, 1e-15);
}

TEST(Replay, ErrorsNameTheLine) {
  auto expect_parse = [](const std::string& text, const std::string& needle) {
    try {
      qufur::parse_replay_csv(text);
      FAIL() << text;
    } catch (const qufur::Error& e) {
      EXPECT_EQ(e.kind(), qufur::ErrorKind::Parse);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_parse("", "empty");
  expect_parse("t,domain,true_mean,y,x_0\n", "line 1");
  expect_parse("t,domain_id,true_mean,y,x_0\n0,0,NA,0.1,abc\n", "line 2");
  expect_parse("t,domain_id,true_mean,y,x_0\n0,0,NA,0.1,0\n1,0,NA,0.1\n", "line 3");
  expect_parse("t,domain_id,true_mean,y,x_0\n1,0,NA,0.1,0\n0,0,NA,0.1,0\n", "line 3");
}

TEST(Replay, MissingFileIsIoError) {
  try {
    qufur::replay_stream("/nonexistent/stream.csv");
    FAIL();
  } catch (const qufur::Error& e) {
    EXPECT_EQ(e.kind(), qufur::ErrorKind::Io);
  }
}

TEST(Replay, SyntheticRoundTripIsExact) {
  const auto s = qufur::synthetic_stream(spec_of({{3, 30}, {2, 20}}, qufur::Ordering::Shuffled), 7, 0.3, 21);
  const auto path = (std::filesystem::temp_directory_path() / "qufur_env_roundtrip.csv").string();
  qufur::write_replay_csv(s, path);
  const auto r = qufur::replay_stream(path);
  std::remove(path.c_str());
  ASSERT_EQ(r.rounds.size(), s.rounds.size());
  for (std::size_t t = 0; t < s.rounds.size(); ++t) {
    EXPECT_EQ(r.rounds[t].x, s.rounds[t].x);
    EXPECT_EQ(r.rounds[t].label, s.rounds[t].label);
    EXPECT_EQ(*r.rounds[t].true_mean, *s.rounds[t].true_mean);
    EXPECT_EQ(r.rounds[t].domain_id, s.rounds[t].domain_id);
  }
  EXPECT_EQ(r.hash(), s.hash());
}

TEST(ObservedDomains, CountsAndRanks) {
  const auto s = qufur::synthetic_stream(spec_of({{3, 30}, {1, 20}}, qufur::Ordering::Interleaved), 4, 0.1, 2);
  const auto d = qufur::observed_domains(s);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].first, 0);
  EXPECT_EQ(d[0].second.dim, 3);
  EXPECT_EQ(d[0].second.duration, 30u);
  EXPECT_EQ(d[1].second.dim, 1);
  EXPECT_EQ(d[1].second.duration, 20u);
}

TEST(FiniteClass, LabelsFollowTruth) {
  qufur::HypothesisTable t;
  t.support = {"a", "b", "c"};
  t.values.resize(2, 3);
  t.values << 0.5, -0.5, 0.0, 1.0, 1.0, 1.0;
  const auto s = qufur::finite_class_stream(t, 0, 50, 0.0, 3);
  ASSERT_EQ(s.rounds.size(), 50u);
  EXPECT_EQ(s.dim, 0);
  for (const auto& r : s.rounds) {
    EXPECT_LT(r.x_id, 3u);
    EXPECT_EQ(r.label, t.at(0, r.x_id));
    EXPECT_EQ(*r.true_mean, t.at(0, r.x_id));
  }
  const auto dom = qufur::finite_class_stream(t, 1, 0, 0.2, 3, {{0}, {1, 2}}, {5, 7});
  ASSERT_EQ(dom.rounds.size(), 12u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(dom.rounds[i].x_id, 0u);
  for (std::size_t i = 5; i < 12; ++i) EXPECT_NE(dom.rounds[i].x_id, 0u);
  EXPECT_THROW(qufur::finite_class_stream(t, 2, 5, 0.0, 1), qufur::Error);
}

}  // namespace

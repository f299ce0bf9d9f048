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
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qufur/error.hpp"
#include "qufur/linalg.hpp"

namespace {

using qufur::Vector;

Vector vec(const oracle::Vec& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

Vector e(int d, int i) { return Vector::Unit(d, i); }

double max_abs_vs(const qufur::Matrix& a, const oracle::Mat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      m = std::max(m, std::fabs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - b[i][j]));
  return m;
}

TEST(InitState, UnitNormBoundGivesIdentity) {
  const auto s = qufur::init_state(2, 1.0);
  EXPECT_EQ(s.gram_inv, qufur::Matrix::Identity(2, 2));
  EXPECT_EQ(s.xty, Vector::Zero(2));
  EXPECT_EQ(s.query_count, 0u);
}

TEST(InitState, InverseScalesWithCSquared) {
  EXPECT_DOUBLE_EQ(qufur::init_state(1, 2.0).gram_inv(0, 0), 4.0);
  const auto s = qufur::init_state(3, 0.5);
  EXPECT_DOUBLE_EQ(s.lambda, 4.0);
  EXPECT_TRUE(s.gram_inv.isApprox(0.25 * qufur::Matrix::Identity(3, 3)));
}

TEST(InitState, RejectsBadArguments) {
  EXPECT_THROW(qufur::init_state(0, 1.0), qufur::Error);
  EXPECT_THROW(qufur::init_state(2, 0.0), qufur::Error);
  EXPECT_THROW(qufur::init_state(2, -1.0), qufur::Error);
}

TEST(Absorb, ScalarCase) {
  auto s = qufur::init_state(1, 1.0);
  qufur::absorb(s, e(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.gram_inv(0, 0), 0.5);
  EXPECT_EQ(s.query_count, 1u);
}

TEST(Absorb, ZeroVectorLeavesInverseAndSum) {
  auto s = qufur::init_state(3, 1.0);
  qufur::absorb(s, e(3, 1), 0.7);
  const auto before = s;
  qufur::absorb(s, Vector::Zero(3), 5.0);
  EXPECT_EQ(s.gram_inv, before.gram_inv);
  EXPECT_EQ(s.xty, before.xty);
}

TEST(Absorb, MatchesDirectInverseAfterFiveUpdates) {
  std::mt19937_64 eng(11);
  auto s = qufur::init_state(3, 1.3);
  std::vector<oracle::Vec> xs;
  for (int i = 0; i < 5; ++i) {
    xs.push_back(oracle::random_unit(3, eng));
    qufur::absorb(s, vec(xs.back()), 0.1 * i);
  }
  EXPECT_LE(max_abs_vs(s.gram_inv, oracle::inverse(oracle::ridge_gram(xs, 3, 1.0 / (1.3 * 1.3)))), 1e-8);
}

TEST(Absorb, StaysConsistentAcrossRebuilds) {
  std::mt19937_64 eng(5);
  auto s = qufur::init_state(4, 1.0);
  std::vector<oracle::Vec> xs;
  for (std::size_t i = 0; i < qufur::kRebuildPeriod * 2 + 17; ++i) {
    xs.push_back(oracle::random_unit(4, eng));
    qufur::absorb(s, vec(xs.back()), 0.0);
  }
  EXPECT_LT(s.updates_since_rebuild, qufur::kRebuildPeriod);
  EXPECT_LE(max_abs_vs(s.gram_inv, oracle::inverse(oracle::ridge_gram(xs, 4, 1.0))), 1e-8);
}

TEST(Absorb, RejectsNonFinite) {
  auto s = qufur::init_state(2, 1.0);
  Vector x = e(2, 0);
  EXPECT_THROW(qufur::absorb(s, x, std::numeric_limits<double>::quiet_NaN()), qufur::Error);
  x(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(qufur::absorb(s, x, 0.0), qufur::Error);
  EXPECT_THROW(qufur::absorb(s, e(3, 0), 0.0), qufur::Error);
}

TEST(QuadForm, FreshAndAfterOneUpdate) {
  auto s = qufur::init_state(2, 1.0);
  EXPECT_DOUBLE_EQ(qufur::quad_form(s, e(2, 0)), 1.0);
  qufur::absorb(s, e(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(qufur::quad_form(s, e(2, 0)), 0.5);
  EXPECT_DOUBLE_EQ(qufur::quad_form(s, e(2, 1)), 1.0);
}

TEST(QuadForm, DimensionMismatchIsInvalidArgument) {
  const auto s = qufur::init_state(2, 1.0);
  try {
    qufur::quad_form(s, e(3, 0));
    FAIL();
  } catch (const qufur::Error& err) {
    EXPECT_EQ(err.kind(), qufur::ErrorKind::InvalidArgument);
  }
}

TEST(QuadForm, NonIncreasingAndBoundedAlongUpdates) {
  std::mt19937_64 eng(3);
  auto s = qufur::init_state(5, 0.8);
  const Vector probe = vec(oracle::random_unit(5, eng));
  double prev = qufur::quad_form(s, probe);
  EXPECT_LE(prev, 1.0 / s.lambda + 1e-12);
  for (int i = 0; i < 60; ++i) {
    qufur::absorb(s, vec(oracle::random_unit(5, eng)), 0.0);
    const double q = qufur::quad_form(s, probe);
    EXPECT_LE(q, prev + 1e-12);
    EXPECT_GE(q, 0.0);
    prev = q;
    EXPECT_LE((s.gram_inv - s.gram_inv.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ThetaHat, FreshIsExactlyZero) { EXPECT_EQ(qufur::theta_hat(qufur::init_state(4, 2.0)), Vector::Zero(4)); }

TEST(ThetaHat, HandExamples) {
  auto s = qufur::init_state(1, 1.0);
  qufur::absorb(s, e(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(qufur::theta_hat(s)(0), 1.0);

  auto t = qufur::init_state(2, 1.0);
  qufur::absorb(t, e(2, 0), 1.0);
  qufur::absorb(t, e(2, 1), -1.0);
  EXPECT_DOUBLE_EQ(qufur::theta_hat(t)(0), 0.5);
  EXPECT_DOUBLE_EQ(qufur::theta_hat(t)(1), -0.5);
}

TEST(ThetaHat, MatchesNormalEquations) {
  std::mt19937_64 eng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  auto s = qufur::init_state(6, 1.0);
  std::vector<oracle::Vec> xs;
  oracle::Vec ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(oracle::random_unit(6, eng));
    ys.push_back(n(eng));
    qufur::absorb(s, vec(xs.back()), ys.back());
  }
  const auto ref = oracle::ridge_theta(xs, ys, 6, 1.0);
  const Vector th = qufur::theta_hat(s);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(th(i), ref[static_cast<std::size_t>(i)], 1e-9);
}

}  // namespace

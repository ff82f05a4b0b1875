// Copyright 2026 The FOLNet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "folnet/mp_oracle.hpp"

namespace folnet::mp {
namespace {

ClausePartition clause(std::size_t M, std::vector<std::size_t> pos, std::vector<std::size_t> neg) {
  return ClausePartition{M, std::move(pos), std::move(neg)};
}

// Independent of the library: walks the event over all assignments with
// explicit per-literal truth checks.
double event_prob(const std::vector<double>& p, const ClausePartition& c) {
  double total = 0;
  for (std::uint32_t bits = 0; bits < (1u << c.M); ++bits) {
    bool ok = true;
    for (auto m : c.pos) ok = ok && ((bits >> m) & 1u);
    for (auto m : c.neg) ok = ok && !((bits >> m) & 1u);
    if (!ok) continue;
    double pr = 1;
    for (std::size_t m = 0; m < c.M; ++m) pr *= ((bits >> m) & 1u) ? p[m] : 1 - p[m];
    total += pr;
  }
  return total;
}

TEST(BodyProb, Examples) {
  std::vector<double> p{0.9, 0.8};
  EXPECT_NEAR(body_prob_exact(p, clause(2, {0}, {1})), 0.18, 1e-15);
  EXPECT_EQ(body_prob_exact(p, clause(2, {}, {})), 1.0);
  const double eps = 1e-9;
  std::vector<double> q{1 - eps};
  EXPECT_EQ(body_prob_exact(q, clause(1, {0}, {})), 1 - eps);
}

TEST(BodyProb, Errors) {
  std::vector<double> p{0.5, 1.0};
  EXPECT_THROW(body_prob_exact(p, clause(2, {0}, {})), std::domain_error);
  std::vector<double> ok{0.5, 0.5};
  EXPECT_THROW(body_prob_exact(ok, clause(2, {0}, {0})), std::invalid_argument);
  EXPECT_THROW(body_prob_exact(ok, clause(2, {2}, {})), std::invalid_argument);
  EXPECT_THROW(body_prob_exact(ok, clause(3, {0}, {})), std::invalid_argument);
}

TEST(BodyProb, ExhaustiveAgreementWithEnumeration) {
  RngState rng(1);
  for (std::size_t M = 0; M <= 4; ++M) {
    auto parts = all_partitions(M);
    EXPECT_EQ(parts.size(), std::size_t(std::pow(3, M)));
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> p(M);
      for (auto& x : p) x = 0.001 + 0.998 * rng.uniform();
      for (const auto& c : parts) {
        const double e = body_prob_exact(p, c);
        EXPECT_NEAR(e, body_prob_enumerate(p, c), 1e-12);
        EXPECT_NEAR(e, event_prob(p, c), 1e-12);
      }
    }
  }
}

TEST(BodyProb, NegationIsComplement) {
  RngState rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p{rng.uniform() * 0.98 + 0.01, rng.uniform() * 0.98 + 0.01};
    auto q = p;
    q[1] = 1 - p[1];
    EXPECT_EQ(body_prob_exact(p, clause(2, {0}, {1})), body_prob_exact(q, clause(2, {0, 1}, {})));
  }
}

TEST(LogitBound, Examples) {
  std::vector<double> v{0.7};
  EXPECT_NEAR(body_logit_bound(v, clause(1, {0}, {})), 1 / (1 + std::exp(-0.7)), 1e-15);
  std::vector<double> z{0.0, 0.0};
  EXPECT_EQ(body_logit_bound(z, clause(2, {0, 1}, {})), 0.5);
  EXPECT_EQ(body_prob_exact(std::vector<double>{0.5, 0.5}, clause(2, {0, 1}, {})), 0.25);
}

TEST(LogitBound, DominatesAndIsTightOnSingleLiterals) {
  RngState rng(3);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t M = 1 + rng.index(6);
    std::vector<int> w(M);
    do {
      for (auto& x : w) x = int(rng.index(3)) - 1;
    } while (std::all_of(w.begin(), w.end(), [](int x) { return x == 0; }));
    auto c = ClausePartition::from_signs(w);
    std::vector<double> p(M), v(M);
    for (std::size_t m = 0; m < M; ++m) {
      v[m] = rng.normal(0, 3);
      p[m] = 1 / (1 + std::exp(-v[m]));
    }
    const double b = body_logit_bound(v, c), e = event_prob(p, c);
    ASSERT_GE(b + 1e-12, e);
    if (c.literals() == 1) {
      EXPECT_NEAR(b, e, 1e-12);
    } else {
      EXPECT_GT(b - e, 1e-12);
    }
  }
}

TEST(LogitBound, EmptyClauseIsNotBounded) {
  // Exact probability of the empty conjunction is 1; the bound reads sigmoid(0).
  std::vector<double> v{1.0, -2.0};
  EXPECT_EQ(body_logit_bound(v, clause(2, {}, {})), 0.5);
}

TEST(SoftBodyLogit, Examples) {
  std::vector<double> v{1.5, -2.0, 0.25};
  EXPECT_EQ(soft_body_logit(std::vector<double>{0, 1, 0}, v), -2.0);
  EXPECT_EQ(soft_body_logit(std::vector<double>{0, 0, 0}, v), 0.0);
  EXPECT_EQ(sigmoid(0.0), 0.5);
  std::vector<double> k{1, -1, 0};
  EXPECT_NEAR(sigmoid(soft_body_logit(k, v)), body_logit_bound(v, clause(3, {0}, {1})), 1e-15);
  EXPECT_THROW(soft_body_logit(std::vector<double>{1, 0}, v), std::invalid_argument);
  EXPECT_THROW(soft_body_logit(std::vector<double>{1.5, 0, 0}, v), std::invalid_argument);
}

TEST(ConcentrationGap, VanishesOnHardClauses) {
  std::vector<double> v{0.3, -1.2};
  EXPECT_NEAR(concentration_gap(std::vector<double>{1, 0}, std::vector<double>{0, 1}, v), 0.0,
              1e-15);
  // Spread mass gives a nonzero gap that shrinks as it concentrates.
  const double wide =
      std::abs(concentration_gap(std::vector<double>{0.5, 0.2}, std::vector<double>{0.3, 0.6}, v));
  const double narrow = std::abs(
      concentration_gap(std::vector<double>{0.98, 0.01}, std::vector<double>{0.01, 0.98}, v));
  EXPECT_GT(wide, narrow);
}

TEST(Implication, Examples) {
  EXPECT_EQ(implication_exact(1.0), 1.0);
  EXPECT_EQ(implication_exact(0.0), 0.5);
  EXPECT_NEAR(implication_exact(0.6), 0.8, 1e-15);
  EXPECT_NEAR(implication_enumerate(0.6), 0.8, 1e-15);
  EXPECT_THROW(implication_exact(1.5), std::domain_error);
  EXPECT_THROW(implication_enumerate(-0.1), std::domain_error);
}

TEST(ImplicationLogit, Examples) {
  EXPECT_NEAR(implication_logit(0.0), std::log(3.0), 1e-15);
  EXPECT_NEAR(implication_logit(50.0), 50.0 + std::numbers::ln2, 1e-12);
  EXPECT_TRUE(std::isfinite(implication_logit(800.0)));
  EXPECT_NEAR(implication_logit(-800.0), 0.0, 1e-300);
}

TEST(ImplicationLogit, IdentityOnGrid) {
  for (int i = 0; i <= 6000; ++i) {
    const double z = -30 + i * 0.01;
    const double p = 1 / (1 + std::exp(-z));
    const double u = implication_logit(z);
    EXPECT_NEAR(1 / (1 + std::exp(-u)), 0.5 + 0.5 * p, 1e-12) << z;
  }
}

TEST(ReluBound, PointsAndGrid) {
  std::vector<double> z0{0.0};
  EXPECT_NEAR(verify_relu_bound(z0).min_gap, std::log(3.0) - std::numbers::ln2, 1e-15);
  std::vector<double> z1{-std::numbers::ln2};
  EXPECT_NEAR(verify_relu_bound(z1).min_gap, std::numbers::ln2, 1e-15);
  std::vector<double> g;
  for (int i = 0; i <= 40000; ++i) g.push_back(-20 + i * 1e-3);
  auto r = verify_relu_bound(g);
  EXPECT_TRUE(r.holds);
  EXPECT_GE(r.min_gap, 0.0);
  EXPECT_LT(r.gap_at_max_z, 1e-8);
  EXPECT_NEAR(r.max_gap, std::log(2.0), 1e-3);
}

TEST(ArityForms, OperatorsMatchSharedKernels) {
  RngState rng(4);
  for (int t = 0; t < 20; ++t) {
    auto in = ArityInputs::random(rng, 1 + rng.index(4), 1 + rng.index(3), 1 + rng.index(3));
    auto res = arity_form_check(in);
    ASSERT_EQ(res.size(), 6u);
    for (const auto& r : res) {
      EXPECT_LT(r.max_diff, 1e-12) << r.op;
      EXPECT_GT(r.max_abs_out, 0.0) << r.op;
    }
  }
}

TEST(ArityForms, ZeroKernelsGiveZero) {
  for (const auto& r : arity_form_check(ArityInputs::zeros(4, 3, 3))) {
    EXPECT_EQ(r.max_abs_out, 0.0);
    EXPECT_EQ(r.max_diff, 0.0);
  }
  EXPECT_THROW(arity_form_check(ArityInputs::zeros(5, 1, 1)), std::invalid_argument);
}

TEST(Report, AllPropertiesPass) {
  auto rep = verification_report(7);
  EXPECT_GE(rep.size(), 8u);
  for (const auto& r : rep) EXPECT_TRUE(r.pass) << r.name << " " << r.detail;
  auto text = format_report(rep);
  EXPECT_EQ(text.find("FAIL"), std::string::npos);
}

}  // namespace
}  // namespace folnet::mp

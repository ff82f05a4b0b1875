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

#include <algorithm>
#include <map>
#include <set>

#include "folnet/tasks.hpp"

namespace folnet::tasks {
namespace {

TEST(CopyTask, LayoutAndLossMask) {
  RngState rng(1);
  auto ex = gen_copy_task(rng, 8, 8, 50);
  for (const auto& e : ex) {
    ASSERT_EQ(e.tokens.size(), 8u);
    EXPECT_EQ(e.tokens[0], kBos);
    EXPECT_EQ(e.tokens[4], kSep);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_GE(e.tokens[1 + i], kFirstFree);
      EXPECT_LT(e.tokens[1 + i], 8);
      EXPECT_EQ(e.tokens[5 + i], e.tokens[1 + i]);
    }
    const std::vector<double> want{0, 0, 0, 0, 0, 1, 1, 1};
    EXPECT_EQ(e.loss_mask, want);
  }
}

TEST(CopyTask, ReverseMirrorsPayload) {
  RngState rng(2);
  for (const auto& e : gen_reverse_task(rng, 20, 11, 30)) {
    ASSERT_EQ(e.tokens.size(), 10u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(e.tokens[6 + i], e.tokens[4 - i]);
  }
}

TEST(CopyTask, Deterministic) {
  RngState a(7), b(7);
  auto x = gen_copy_task(a, 12, 16, 20), y = gen_copy_task(b, 12, 16, 20);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].tokens, y[i].tokens);
}

TEST(CopyTask, PayloadUniform) {
  RngState rng(3);
  const std::size_t vocab = 15, cells = vocab - kFirstFree;
  std::vector<double> counts(cells, 0.0);
  double total = 0;
  for (const auto& e : gen_copy_task(rng, vocab, 4, 10000)) {
    counts[e.tokens[1] - kFirstFree] += 1;
    total += 1;
  }
  double chi2 = 0;
  for (double c : counts) chi2 += (c - total / cells) * (c - total / cells) / (total / cells);
  EXPECT_LT(chi2, 27.88);  // 0.999 quantile, 9 dof
}

TEST(CopyTask, RejectsTinyInputs) {
  RngState rng(0);
  EXPECT_THROW(gen_copy_task(rng, 5, 8, 1), std::invalid_argument);
  EXPECT_THROW(gen_copy_task(rng, 8, 3, 1), std::invalid_argument);
}

TEST(MlmTask, MaskFractionAndCorruption) {
  RngState rng(4);
  auto g = Grammar::for_vocab(30);
  const auto words = g.all_words();
  const std::set<int> vocab(words.begin(), words.end());
  double selected = 0, eligible = 0, masked = 0, kept = 0, replaced = 0;
  for (const auto& e : gen_mlm_task(rng, g, 32, 0.15, 3000)) {
    EXPECT_EQ(e.tokens.front(), kCls);
    EXPECT_EQ(e.tokens.back(), kSep);
    for (std::size_t t = 0; t < e.tokens.size(); ++t) {
      if (e.loss_mask[t] == 0.0) {
        EXPECT_EQ(e.tokens[t], e.targets[t]);
        continue;
      }
      selected += 1;
      EXPECT_TRUE(vocab.count(e.targets[t]));
      if (e.tokens[t] == kMask) masked += 1;
      else if (e.tokens[t] == e.targets[t]) kept += 1;
      else replaced += 1;
    }
    eligible += static_cast<double>(e.tokens.size() - 2);
  }
  EXPECT_NEAR(selected / eligible, 0.15, 0.02);
  EXPECT_NEAR(masked / selected, 0.8, 0.03);
  EXPECT_GT(kept, 0);
  EXPECT_GT(replaced, 0);
}

TEST(MlmTask, ZeroRateSelectsNothing) {
  RngState rng(5);
  for (const auto& e : gen_mlm_task(rng, Grammar::for_vocab(20), 24, 0.0, 200)) {
    EXPECT_EQ(std::count(e.loss_mask.begin(), e.loss_mask.end(), 1.0), 0);
    EXPECT_EQ(e.tokens, e.targets);
  }
}

TEST(MlmTask, FitsLength) {
  RngState rng(6);
  for (const auto& e : gen_mlm_task(rng, Grammar::for_vocab(20), 12, 0.5, 200))
    EXPECT_LE(e.tokens.size(), 12u);
  EXPECT_THROW(gen_mlm_task(rng, Grammar::for_vocab(20), 8, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(Grammar::for_vocab(8), std::invalid_argument);
}

TEST(Kinship, CompositionTable) {
  using R = Relation;
  using K = KinLabel;
  EXPECT_EQ(compose(R::kParent, R::kParent), K::kGrandparent);
  EXPECT_EQ(compose(R::kChild, R::kChild), K::kGrandchild);
  EXPECT_EQ(compose(R::kSibling, R::kParent), K::kAuntUncle);
  EXPECT_EQ(compose(R::kChild, R::kSibling), K::kNibling);
  EXPECT_EQ(compose(R::kSpouse, R::kParent), K::kParent);
  EXPECT_EQ(compose(R::kSibling, R::kChild), K::kChild);
  EXPECT_FALSE(composable(R::kParent, R::kChild));
  EXPECT_THROW(compose(R::kParent, R::kChild), std::invalid_argument);
  std::set<K> covered;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (composable(R(a), R(b))) covered.insert(compose(R(a), R(b)));
  EXPECT_EQ(covered.size(), kKinLabels);
}

// Decodes the chain from the facts and checks the label follows from it.
TEST(Kinship, LabelFollowsFromChain) {
  RngState rng(8);
  const int first_rel = kFirstFree + 2, first_ent = first_rel + 4;
  for (const auto& e : gen_kinship2hop(rng, 12, 3, 500)) {
    ASSERT_EQ(e.tokens.size(), kinship_length(3));
    const std::size_t q = e.tokens.size() - 4;
    const int A = e.tokens[q], C = e.tokens[q + 2];
    std::map<int, std::vector<std::pair<int, int>>> out_edges;
    for (std::size_t f = 1; f + 4 <= q; f += 4) out_edges[e.tokens[f]].push_back({e.tokens[f + 1], e.tokens[f + 2]});
    int found = 0;
    for (auto [r1, B] : out_edges[A])
      for (auto [r2, z] : out_edges[B])
        if (z == C) {
          ++found;
          EXPECT_EQ(static_cast<int>(compose(Relation(r1 - first_rel), Relation(r2 - first_rel))),
                    e.label);
        }
    EXPECT_EQ(found, 1);
    for (std::size_t t = 0; t < e.tokens.size(); ++t) {
      EXPECT_EQ(e.segments[t], t >= q ? 1 : 0);
      if (t >= 1 && t < q - 1 && (t - 1) % 4 != 1 && (t - 1) % 4 != 3) EXPECT_GE(e.tokens[t], first_ent);
    }
  }
}

TEST(Kinship, DistractorsAvoidQueryEntities) {
  RngState rng(9);
  for (const auto& e : gen_kinship2hop(rng, 10, 4, 300)) {
    const std::size_t q = e.tokens.size() - 4;
    const int A = e.tokens[q], C = e.tokens[q + 2];
    int mentions_a = 0, mentions_c = 0;
    for (std::size_t f = 1; f + 4 <= q; f += 4) {
      mentions_a += (e.tokens[f] == A) + (e.tokens[f + 2] == A);
      mentions_c += (e.tokens[f] == C) + (e.tokens[f + 2] == C);
    }
    EXPECT_EQ(mentions_a, 1);
    EXPECT_EQ(mentions_c, 1);
  }
}

TEST(Kinship, LabelsBalanced) {
  RngState rng(10);
  std::vector<double> counts(kKinLabels, 0);
  const std::size_t n = 14000;
  for (const auto& e : gen_kinship2hop(rng, 12, 2, n)) counts[e.label] += 1;
  for (double c : counts) EXPECT_NEAR(c / n, 1.0 / kKinLabels, 0.05 / kKinLabels);
}

TEST(Kinship, Errors) {
  RngState rng(0);
  EXPECT_THROW(gen_kinship2hop(rng, 2, 0, 1), std::invalid_argument);
  EXPECT_THROW(gen_kinship2hop(rng, 4, 1, 1), std::invalid_argument);
  EXPECT_EQ(kinship_vocab(12), 23u);
}

TEST(PairClass, LabelsMatchContent) {
  RngState rng(11);
  std::size_t pos = 0;
  const std::size_t n = 4000;
  for (const auto& e : gen_pairclass(rng, 10, 11, n)) {
    ASSERT_EQ(e.tokens.size(), 11u);
    std::vector<int> a(e.tokens.begin() + 1, e.tokens.begin() + 5);
    std::vector<int> b(e.tokens.begin() + 6, e.tokens.begin() + 10);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < 4; ++i) diff += a[i] != b[i];
    EXPECT_EQ(diff, e.label == 1 ? 0u : 1u);
    pos += e.label == 1;
    EXPECT_EQ(e.segments[5], 0);
    EXPECT_EQ(e.segments[6], 1);
  }
  EXPECT_NEAR(static_cast<double>(pos) / n, 0.5, 0.03);
}

TEST(Batch, PadsAndContinuesSegment) {
  TaskExample e;
  e.tokens = {kCls, 7, kSep, 8};
  e.segments = {0, 0, 0, 1};
  auto b = make_batch({e}, 6);
  EXPECT_EQ(b.token_ids, (std::vector<int>{kCls, 7, kSep, 8, kPad, kPad}));
  EXPECT_EQ(b.seq_ids, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(b.pad_mask, (std::vector<double>{1, 1, 1, 1, 0, 0}));
  EXPECT_THROW(make_batch({e}, 3), std::invalid_argument);
  EXPECT_THROW(make_batch({}, 3), std::invalid_argument);
}

TEST(TaskNames, RoundTrip) {
  for (auto k : {TaskKind::kCopy, TaskKind::kReverse, TaskKind::kMlmSynthetic,
                 TaskKind::kKinship2Hop, TaskKind::kPairClass})
    EXPECT_EQ(parse_task(task_name(k)), k);
  EXPECT_THROW(parse_task("nope"), std::invalid_argument);
}

}  // namespace
}  // namespace folnet::tasks

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

#include "folnet/gradcheck.hpp"
#include "folnet/logic.hpp"
#include "folnet/masks.hpp"
#include "folnet/ops.hpp"
#include "folnet/text2text.hpp"
#include "support/naive_ops.hpp"
#include "support/soundness.hpp"

namespace folnet::text2text {
namespace {

using testing::max_abs_diff;

std::vector<double> flat(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

TEST(BuildMasks, CausalIsLowerTriangular) {
  auto m = build_masks(MaskMode::kCausal, 3);
  EXPECT_EQ(flat(m.flow), (std::vector<double>{1, 0, 0, 1, 1, 0, 1, 1, 1}));
  for (char op : std::string("cjmpt")) {
    ASSERT_TRUE(m.masks(op)) << op;
    EXPECT_EQ(flat(m.op_masks.at(op)), flat(m.flow));
  }
  EXPECT_FALSE(m.masks('a'));
}

TEST(BuildMasks, PrefixBlock) {
  auto m = build_masks(MaskMode::kPrefix, 4, 2);
  EXPECT_EQ(flat(m.flow),
            (std::vector<double>{1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 1, 0, 1, 1, 1, 1}));
  EXPECT_EQ(m.prefix_len, 2u);
}

TEST(BuildMasks, NoneIsAllOnes) {
  auto m = build_masks(MaskMode::kNone, 3);
  for (double v : m.flow.values()) EXPECT_EQ(v, 1.0);
}

TEST(BuildMasks, Errors) {
  EXPECT_THROW(build_masks(MaskMode::kCausal, 0), std::invalid_argument);
  EXPECT_THROW(build_masks(MaskMode::kPrefix, 3, 3), std::invalid_argument);
  EXPECT_THROW(build_masks(MaskMode::kEncDec, 3, 0), std::invalid_argument);
  EXPECT_THROW(parse_mask_mode("sideways"), std::invalid_argument);
  EXPECT_EQ(parse_mask_mode(mask_mode_name(MaskMode::kEncDec)), MaskMode::kEncDec);
}

TEST(DecoderForward, CausalSuffixPerturbation) {
  double moved = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto r = testing::run_suffix_perturbation(s, MaskMode::kCausal);
    EXPECT_LE(r.max_diff, 1e-12) << s;
    moved = std::max(moved, r.moved);
  }
  EXPECT_GT(moved, 1e-6);
}

TEST(DecoderForward, PrefixBlockPerturbation) {
  double moved = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto r = testing::run_suffix_perturbation(1000 + s, MaskMode::kPrefix);
    EXPECT_LE(r.max_diff, 1e-12) << s;
    moved = std::max(moved, r.moved);
  }
  EXPECT_GT(moved, 1e-6);
}

TEST(DecoderForward, PrefixPositionsSeeWholePrefix) {
  RngState rng(3);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  std::vector<int> ids{5, 6, 7, 8, 9};
  auto other = ids;
  other[2] = 11;
  auto ms = build_masks(MaskMode::kPrefix, 5, 3);
  auto a = next_token_logits(atoms::InputBatch::from_tokens(1, 5, ids), p, c, ms);
  auto b = next_token_logits(atoms::InputBatch::from_tokens(1, 5, other), p, c, ms);
  double d0 = 0;
  for (std::size_t v = 0; v < c.vocab; ++v) d0 = std::max(d0, std::abs(a.at({0, 0, v}) - b.at({0, 0, v})));
  EXPECT_GT(d0, 1e-9);
}

TEST(DecoderForward, SingleTokenEqualsUnmasked) {
  RngState rng(4);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  auto b = atoms::InputBatch::from_tokens(1, 1, {7});
  auto [u, U] = decoder_forward(b, p, c, build_masks(MaskMode::kCausal, 1));
  auto [u2, U2] = model::model_forward(b, p, c);
  EXPECT_EQ(max_abs_diff(u, u2), 0.0);
  EXPECT_EQ(max_abs_diff(U, U2), 0.0);
}

TEST(DecoderForward, BinaryAtomsZeroAboveDiagonal) {
  RngState rng(5);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  auto b = atoms::InputBatch::from_tokens(1, 4, {5, 6, 7, 8});
  auto [u, U] = decoder_forward(b, p, c, build_masks(MaskMode::kCausal, 4));
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t y = x + 1; y < 4; ++y)
      for (std::size_t d = 0; d < c.d2; ++d) EXPECT_EQ(U.at({0, x, y, d}), 0.0);
}

TEST(DecoderForward, RejectsNonDecoderModes) {
  RngState rng(6);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  auto b = atoms::InputBatch::from_tokens(1, 3, {5, 6, 7});
  EXPECT_THROW(decoder_forward(b, p, c, build_masks(MaskMode::kNone, 3)), std::invalid_argument);
}

TEST(NextTokenLogits, Shape) {
  RngState rng(7);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  auto b = atoms::InputBatch::from_tokens(2, 3, {5, 6, 7, 8, 9, 10});
  EXPECT_EQ(next_token_logits(b, p, c, build_masks(MaskMode::kCausal, 3)).shape(),
            (Shape{2, 3, 12}));
}

// Two-case formula, written out.
Tensor naive_encdec(const Tensor& K, const Tensor& ve, const Tensor& vd) {
  const auto B = K.dim(0), H = K.dim(1), To = K.dim(2), Ti = ve.dim(2), N = Ti + To;
  std::vector<double> y(B * H * To * N, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t x = 0; x < To; ++x)
        for (std::size_t yy = 0; yy < N; ++yy) {
          double acc = 0;
          for (std::size_t a = 0; a < To; ++a) acc += K.at({b, h, x, Ti + a}) * vd.at({b, h, a, yy});
          if (yy < Ti)
            for (std::size_t a = 0; a < Ti; ++a) acc += K.at({b, h, x, a}) * ve.at({b, h, a, yy});
          y[((b * H + h) * To + x) * N + yy] = acc;
        }
  return Tensor::from({B, H, To, N}, y);
}

TEST(EncDecTrans, MatchesTwoCaseLoop) {
  RngState rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = 1 + rng.index(2), H = 1 + rng.index(3), Ti = 1 + rng.index(4),
                      To = 1 + rng.index(4);
    auto K = Tensor::randn({B, H, To, Ti + To}, rng);
    auto ve = Tensor::randn({B, H, Ti, Ti}, rng);
    auto vd = Tensor::randn({B, H, To, Ti + To}, rng);
    EXPECT_LT(max_abs_diff(encdec_trans(K, ve, vd), naive_encdec(K, ve, vd)), 1e-12);
  }
}

TEST(EncDecTrans, EmptyInputReducesToTrans) {
  RngState rng(9);
  auto K = Tensor::randn({2, 2, 3, 3}, rng);
  auto vd = Tensor::randn({2, 2, 3, 3}, rng);
  auto out = encdec_trans(K, Tensor::zeros({2, 2, 0, 0}), vd);
  EXPECT_EQ(max_abs_diff(out, logic::op_trans(K, vd)), 0.0);
}

TEST(EncDecTrans, ZeroDecoderPremisesLeaveEncoderPart) {
  RngState rng(10);
  auto K = Tensor::randn({1, 2, 2, 5}, rng);
  auto ve = Tensor::randn({1, 2, 3, 3}, rng);
  auto out = encdec_trans(K, ve, Tensor::zeros({1, 2, 2, 5}));
  auto ve2 = Tensor::randn({1, 2, 3, 3}, rng);
  auto out2 = encdec_trans(K, ve2, Tensor::zeros({1, 2, 2, 5}));
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t y = 3; y < 5; ++y) EXPECT_EQ(out.at({0, h, x, y}), 0.0);
      double expect = 0;
      for (std::size_t a = 0; a < 3; ++a) expect += K.at({0, h, x, a}) * ve.at({0, h, a, 1});
      EXPECT_NEAR(out.at({0, h, x, 1}), expect, 1e-12);
      EXPECT_NE(out.at({0, h, x, 1}), out2.at({0, h, x, 1}));
    }
}

TEST(EncDecTrans, BoundaryMismatch) {
  EXPECT_THROW(encdec_trans(Tensor::zeros({1, 1, 2, 4}), Tensor::zeros({1, 1, 3, 3}),
                            Tensor::zeros({1, 1, 2, 4})),
               ShapeError);
}

TEST(EncDecTrans, Gradients) {
  RngState rng(11);
  auto K = Tensor::randn({1, 2, 2, 5}, rng, 1.0, true);
  auto ve = Tensor::randn({1, 2, 3, 3}, rng, 1.0, true);
  auto vd = Tensor::randn({1, 2, 2, 5}, rng, 1.0, true);
  auto w = Tensor::randn({1, 2, 2, 5}, rng);
  auto loss = [&] { return sum(mul(encdec_trans(K, ve, vd), w)); };
  for (Tensor* t : {&K, &ve, &vd}) {
    t->zero_grad();
    loss().backward();
    std::vector<double> ga(t->grad().begin(), t->grad().end());
    auto fd = finite_diff_grad([&] { return loss().item(); }, *t);
    EXPECT_LT(relative_error(ga, fd), 1e-6);
  }
}

TEST(GreedyGenerate, MaxLenEqualsPromptReturnsPrompt) {
  RngState rng(12);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  std::vector<int> prompt{4, 5, 6};
  EXPECT_EQ(greedy_generate(prompt, p, c, 3), prompt);
  EXPECT_THROW(greedy_generate({}, p, c, 3), std::invalid_argument);
}

TEST(GreedyGenerate, DeterministicAndMatchesStepwiseArgmax) {
  RngState rng(13);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  std::vector<int> prompt{4, 7};
  auto a = greedy_generate(prompt, p, c, 7);
  EXPECT_EQ(a, greedy_generate(prompt, p, c, 7));
  ASSERT_EQ(a.size(), 7u);
  std::vector<int> seq = prompt;
  while (seq.size() < 7) {
    const std::size_t T = seq.size();
    auto l = next_token_logits(atoms::InputBatch::from_tokens(1, T, seq), p, c,
                               build_masks(MaskMode::kCausal, T));
    int best = 0;
    for (std::size_t v = 1; v < c.vocab; ++v)
      if (l.at({0, T - 1, v}) > l.at({0, T - 1, std::size_t(best)})) best = int(v);
    seq.push_back(best);
  }
  EXPECT_EQ(a, seq);
}

TEST(GreedyGenerate, StopsAtEndToken) {
  RngState rng(14);
  auto c = testing::small_decoder_config(rng);
  auto p = model::init_params(c, rng);
  auto full = greedy_generate({4, 7}, p, c, 6);
  auto stopped = greedy_generate({4, 7}, p, c, 6, full[2]);
  EXPECT_EQ(stopped.size(), 3u);
  auto pre = greedy_generate({4, 7}, p, c, 6, -1, MaskMode::kPrefix);
  EXPECT_EQ(pre.size(), 6u);
}

}  // namespace
}  // namespace folnet::text2text

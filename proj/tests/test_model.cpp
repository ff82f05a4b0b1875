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

#include "folnet/gradcheck.hpp"
#include "folnet/model.hpp"
#include "folnet/ops.hpp"
#include "support/degeneration.hpp"
#include "support/naive_folnet.hpp"

namespace folnet::model {
namespace {

using testing::max_abs_diff;

ModelConfig tiny(const std::string& ops = "jmc.atp") {
  ModelConfig c;
  c.layers = 2;
  c.d1 = 8;
  c.d2 = 4;
  c.heads = 2;
  c.head_size = 4;
  c.delta = 3;
  c.vocab = 10;
  c.ffn1 = 12;
  c.ffn2 = 6;
  c.ops = parse_operator_spec(ops);
  c.dropout = 0.0;
  c.attn_dropout = 0.0;
  c.init_std = 0.3;
  return c;
}

atoms::InputBatch random_batch(RngState& rng, std::size_t B, std::size_t T, std::size_t V) {
  std::vector<int> ids(B * T);
  for (auto& id : ids) id = static_cast<int>(rng.index(V));
  auto b = atoms::InputBatch::from_tokens(B, T, ids);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t t = T / 2; t < T; ++t) b.seq_ids[i * T + t] = 1;
  return b;
}

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Kernel biases that are constant along a softmax axis have zero gradient; there
// only finite-difference noise remains to compare.
::testing::AssertionResult grads_agree(const std::vector<double>& ga, const std::vector<double>& fd) {
  const double rel = relative_error(ga, fd);
  if (rel < 1e-4) return ::testing::AssertionSuccess();
  if (norm(ga) < 1e-10 && norm(fd) < 1e-8) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "rel " << rel << " |analytic| " << norm(ga)
                                       << " |numeric| " << norm(fd);
}

TEST(OperatorSpec, Parses) {
  auto a = parse_operator_spec("j.a");
  EXPECT_EQ(a.unary, "j");
  EXPECT_EQ(a.binary, "a");
  auto b = parse_operator_spec("jmc.atp");
  EXPECT_TRUE(b.has('m') && b.has('c') && b.has('t') && b.has('p'));
  EXPECT_EQ(b.str(), "jmc.atp");
  EXPECT_EQ(parse_operator_spec(".t").unary, "");
}

TEST(OperatorSpec, Errors) {
  EXPECT_THROW(parse_operator_spec("x.a"), std::invalid_argument);
  EXPECT_THROW(parse_operator_spec("ja"), std::invalid_argument);
  EXPECT_THROW(parse_operator_spec("jj.a"), std::invalid_argument);
  EXPECT_THROW(parse_operator_spec("a.j"), std::invalid_argument);
  EXPECT_THROW(parse_operator_spec("j.a.t"), std::invalid_argument);
}

TEST(Config, ValidationAndFieldRoundTrip) {
  auto c = tiny();
  c.use_ape = true;
  c.dropout = 0.123456789012345;
  auto back = ModelConfig::from_fields(c.to_fields());
  EXPECT_EQ(back.to_fields(), c.to_fields());
  c.d1 = 9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  auto e = tiny();
  e.ops = OperatorSpec{"", ""};
  EXPECT_THROW(e.validate(), std::invalid_argument);
}

TEST(InitParams, DeterministicPerSeed) {
  RngState r1(5), r2(5);
  auto a = init_params(tiny(), r1).named();
  auto b = init_params(tiny(), r2).named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    auto va = a[i].second.values(), vb = b[i].second.values();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin(), vb.end()));
  }
}

TEST(InitParams, SampleStdNearTarget) {
  ModelConfig c = tiny();
  c.init_std = 0.02;
  c.d1 = 64;
  c.heads = 4;
  c.head_size = 16;
  c.ffn1 = 256;
  RngState rng(6);
  auto p = init_params(c, rng);
  const auto& w = p.layers[0].unary.ffn_in.w;
  ASSERT_GE(w.numel(), 10000u);
  double s = 0, s2 = 0;
  for (double v : w.values()) {
    s += v;
    s2 += v * v;
    EXPECT_LE(std::abs(v), 0.04);
  }
  const double n = double(w.numel());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  // Truncation at 2 std shrinks the spread by about 12%.
  EXPECT_NEAR(sd, 0.02 * 0.8796, 0.02 * 0.1);
  for (double v : p.layers[0].unary.ln1.gain.values()) EXPECT_EQ(v, 1.0);
  for (double v : p.layers[0].unary.out.b.values()) EXPECT_EQ(v, 0.0);
}

TEST(InitParams, ZeroLayers) {
  auto c = tiny();
  c.layers = 0;
  RngState rng(7);
  EXPECT_TRUE(init_params(c, rng).layers.empty());
}

TEST(InitParams, ShapesFollowOperatorTyping) {
  RngState rng(8);
  auto c = tiny();
  auto p = init_params(c, rng);
  const auto& L = p.layers[0];
  EXPECT_EQ(L.ops.at('c').kernel.w.shape(), (Shape{8, 8}));
  EXPECT_EQ(L.ops.at('c').premise.w.shape(), (Shape{4, 2}));
  EXPECT_EQ(L.ops.at('j').kernel.w.shape(), (Shape{4, 2}));
  EXPECT_EQ(L.ops.at('m').premise.w.shape(), (Shape{4, 4}));
  EXPECT_EQ(L.ops.at('p').kernel.w.shape(), (Shape{8, 8}));
  EXPECT_EQ(L.ops.at('t').premise.w.shape(), (Shape{4, 2}));
  EXPECT_EQ(L.binary.out.w.shape(), (Shape{2, 4}));
  EXPECT_EQ(p.emb.reldist.shape(), (Shape{8, 4}));
}

TEST(InitParams, FullSizeShapesConstruct) {
  ModelConfig c;
  c.layers = 1;
  c.d1 = 768;
  c.heads = 12;
  c.head_size = 64;
  c.d2 = 64;
  c.ffn1 = 3072;
  c.ffn2 = 256;
  c.delta = 64;
  c.vocab = 100;
  RngState rng(9);
  auto p = init_params(c, rng);
  EXPECT_EQ(p.layers[0].unary.ffn_in.w.shape(), (Shape{768, 3072}));
  EXPECT_EQ(p.emb.reldist.shape(), (Shape{130, 64}));
}

TEST(LayerForward, ZeroProjectionsGiveNormalizedResidual) {
  auto c = tiny();
  RngState rng(10);
  auto p = init_params(c, rng);
  p.visit([](const std::string& n, Tensor& t) {
    if (n.rfind("layer0.", 0) == 0 && n.find(".ln") == std::string::npos)
      for (auto& v : t.mutable_values()) v = 0.0;
  });
  auto u = Tensor::randn({2, 4, 8}, rng);
  auto U = Tensor::randn({2, 4, 4, 4}, rng);
  auto [u1, U1] = layer_forward(u, U, p.layers[0], c);
  const auto& L = p.layers[0];
  auto eu = testing::naive_ln(testing::naive_ln(u, L.unary.ln1, c.ln_eps), L.unary.ln2, c.ln_eps);
  auto eU = testing::naive_ln(testing::naive_ln(U, L.binary.ln1, c.ln_eps), L.binary.ln2, c.ln_eps);
  EXPECT_LT(max_abs_diff(u1, eu), 1e-12);
  EXPECT_LT(max_abs_diff(U1, eU), 1e-12);
  for (double v : u1.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(LayerForward, ShapeMismatch) {
  auto c = tiny();
  RngState rng(11);
  auto p = init_params(c, rng);
  EXPECT_THROW(layer_forward(Tensor::zeros({1, 3, 8}), Tensor::zeros({1, 3, 3, 5}), p.layers[0], c),
               ShapeError);
}

TEST(LayerForward, EmptyBranchPassesAtomsThrough) {
  auto c = tiny(".atp");
  RngState rng(12);
  auto p = init_params(c, rng);
  auto u = Tensor::randn({1, 3, 8}, rng);
  auto U = Tensor::randn({1, 3, 3, 4}, rng);
  auto [u1, U1] = layer_forward(u, U, p.layers[0], c);
  EXPECT_EQ(u1.impl(), u.impl());
}

TEST(LayerForward, MatchesStraightLineReimplementation) {
  for (const std::string ops : {"jmc.atp", "j.a", "c.p", "m.t", "jc.", ".at"}) {
    auto c = tiny(ops);
    RngState rng(13);
    auto p = init_params(c, rng);
    auto u = Tensor::randn({2, 5, 8}, rng);
    auto U = Tensor::randn({2, 5, 5, 4}, rng);
    auto [u1, U1] = layer_forward(u, U, p.layers[0], c);
    auto [nu, nU] = testing::naive_layer(u, U, p.layers[0], c);
    EXPECT_LT(max_abs_diff(u1, nu), 1e-12) << ops;
    EXPECT_LT(max_abs_diff(U1, nU), 1e-12) << ops;
  }
}

TEST(LayerForward, MaskedMatchesStraightLineReimplementation) {
  auto c = tiny();
  RngState rng(14);
  auto p = init_params(c, rng);
  const std::size_t T = 5;
  auto ms = build_masks(MaskMode::kPrefix, T, 2);
  atoms::InputBatch b = atoms::InputBatch::from_tokens(2, T, std::vector<int>(2 * T, 1));
  auto am = combine_masks(&ms, b);
  auto u = Tensor::randn({2, T, 8}, rng);
  auto U = Tensor::randn({2, T, T, 4}, rng);
  auto [u1, U1] = layer_forward(u, U, p.layers[0], c, am);
  auto [nu, nU] = testing::naive_layer(u, U, p.layers[0], c, ms.flow);
  EXPECT_LT(max_abs_diff(u1, nu), 1e-12);
  EXPECT_LT(max_abs_diff(U1, nU), 1e-12);
}

TEST(LayerForward, TransformerDegeneration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(testing::run_degeneration(seed).max_diff, 1e-10) << seed;
  }
}

TEST(LayerForward, GradientsMatchFiniteDifferences) {
  auto c = tiny();
  RngState rng(15);
  auto p = init_params(c, rng);
  auto u = Tensor::randn({1, 4, 8}, rng, 1.0, true);
  auto U = Tensor::randn({1, 4, 4, 4}, rng, 1.0, true);
  auto ru = Tensor::randn({1, 4, 8}, rng);
  auto rU = Tensor::randn({1, 4, 4, 4}, rng);
  auto loss = [&] {
    auto [a, b] = layer_forward(u, U, p.layers[0], c);
    return add(mean(mul(a, ru)), mean(mul(b, rU)));
  };
  std::vector<std::pair<std::string, Tensor>> all = p.named();
  all.emplace_back("u", u);
  all.emplace_back("U", U);
  for (auto& [name, t] : all) {
    if (name.rfind("layer0.", 0) != 0 && name != "u" && name != "U") continue;
    t.zero_grad();
    loss().backward();
    std::vector<double> ga(t.grad().begin(), t.grad().end());
    ga.resize(t.numel(), 0.0);
    auto fd = finite_diff_grad([&] { return loss().item(); }, t);
    EXPECT_TRUE(grads_agree(ga, fd)) << name;
  }
}

TEST(ModelForward, ZeroLayersReturnsBaseAtoms) {
  auto c = tiny();
  c.layers = 0;
  RngState rng(16);
  auto p = init_params(c, rng);
  auto b = random_batch(rng, 2, 4, c.vocab);
  auto [u, U] = model_forward(b, p, c);
  auto [u0, U0] = atoms::encode_base_atoms(b, p.emb, c.delta);
  EXPECT_EQ(max_abs_diff(u, u0), 0.0);
  EXPECT_EQ(max_abs_diff(U, U0), 0.0);
}

TEST(ModelForward, EqualsLayersAppliedInSequence) {
  auto c = tiny();
  RngState rng(17);
  auto p = init_params(c, rng);
  auto b = random_batch(rng, 2, 5, c.vocab);
  auto [u, U] = model_forward(b, p, c);
  auto [u0, U0] = atoms::encode_base_atoms(b, p.emb, c.delta);
  auto [u1, U1] = layer_forward(u0, U0, p.layers[0], c);
  auto [u2, U2] = layer_forward(u1, U1, p.layers[1], c);
  EXPECT_EQ(max_abs_diff(u, u2), 0.0);
  EXPECT_EQ(max_abs_diff(U, U2), 0.0);
  auto [ua, Ua] = model_forward(b, p, c);
  EXPECT_EQ(max_abs_diff(u, ua), 0.0);
}

TEST(ModelForward, MatchesStraightLineModel) {
  auto c = tiny();
  RngState rng(18);
  auto p = init_params(c, rng);
  auto b = random_batch(rng, 1, 4, c.vocab);
  auto [u, U] = model_forward(b, p, c);
  Tensor nu = Tensor::zeros({1, 4, 8}), nU = Tensor::zeros({1, 4, 4, 4});
  {
    auto nuv = nu.mutable_values();
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t d = 0; d < 8; ++d)
        nuv[t * 8 + d] = p.emb.token.at({std::size_t(b.token_ids[t]), d}) +
                         p.emb.seq.at({std::size_t(b.seq_ids[t]), d});
    auto nUv = nU.mutable_values();
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t s = 0; s < 4; ++s) {
        const int id = atoms::clipped_rel_dist(t, s, b.seq_ids[t], b.seq_ids[s], c.delta);
        for (std::size_t d = 0; d < 4; ++d)
          nUv[(t * 4 + s) * 4 + d] = p.emb.reldist.at({std::size_t(id + c.delta), d});
      }
  }
  for (const auto& L : p.layers) std::tie(nu, nU) = testing::naive_layer(nu, nU, L, c);
  EXPECT_LT(max_abs_diff(u, nu), 1e-12);
  EXPECT_LT(max_abs_diff(U, nU), 1e-12);
}

TEST(ModelForward, FiniteOnRandomInputsAtInit) {
  ModelConfig c = tiny();
  c.init_std = 0.02;
  RngState rng(19);
  auto p = init_params(c, rng);
  for (int i = 0; i < 1000; ++i) {
    auto b = random_batch(rng, 1, 1 + rng.index(6), c.vocab);
    auto [u, U] = model_forward(b, p, c);
    for (double v : u.values()) ASSERT_TRUE(std::isfinite(v));
    for (double v : U.values()) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(ModelForward, PaddingExcludedFromSoftmaxKernels) {
  auto c = tiny();
  RngState rng(20);
  auto p = init_params(c, rng);
  auto b = random_batch(rng, 1, 6, c.vocab);
  b.pad_mask = {1, 1, 1, 1, 0, 0};
  b.seq_ids = {0, 0, 1, 1, 1, 1};
  auto [u, U] = model_forward(b, p, c);
  auto b2 = b;
  b2.token_ids[4] = (b.token_ids[4] + 1) % int(c.vocab);
  b2.token_ids[5] = (b.token_ids[5] + 3) % int(c.vocab);
  auto [u2, U2] = model_forward(b2, p, c);
  // Real-token unary atoms ignore pad contents.
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(u.at({0, t, d}), u2.at({0, t, d}), 1e-12);
}

TEST(ModelForward, DropoutOnlyInTraining) {
  auto c = tiny();
  c.dropout = 0.2;
  c.attn_dropout = 0.2;
  RngState rng(21);
  auto p = init_params(c, rng);
  auto b = random_batch(rng, 1, 4, c.vocab);
  auto [e1, E1] = model_forward(b, p, c);
  auto [e2, E2] = model_forward(b, p, c);
  EXPECT_EQ(max_abs_diff(e1, e2), 0.0);
  RngState d1(3), d2(3);
  auto [t1, T1] = model_forward(b, p, c, nullptr, {true, &d1});
  auto [t2, T2] = model_forward(b, p, c, nullptr, {true, &d2});
  EXPECT_EQ(max_abs_diff(t1, t2), 0.0);
  EXPECT_GT(max_abs_diff(t1, e1), 1e-6);
  EXPECT_THROW(model_forward(b, p, c, nullptr, {true, nullptr}), std::invalid_argument);
}

TEST(ModelForward, TokenOutOfRange) {
  auto c = tiny();
  RngState rng(22);
  auto p = init_params(c, rng);
  auto b = atoms::InputBatch::from_tokens(1, 2, {1, 10});
  EXPECT_THROW(model_forward(b, p, c), std::out_of_range);
}

TEST(Heads, ZeroMlmHeadIsUniform) {
  auto c = tiny();
  c.tie_mlm = false;
  RngState rng(23);
  auto p = init_params(c, rng);
  p.visit([](const std::string& n, Tensor& t) {
    if (n.rfind("mlm.", 0) == 0 && n.find(".ln.") == std::string::npos)
      for (auto& v : t.mutable_values()) v = 0.0;
  });
  auto b = random_batch(rng, 2, 4, c.vocab);
  auto [u, U] = model_forward(b, p, c);
  std::vector<int> pos{0, 3, 7};
  auto logits = mlm_logits(u, pos, p, c);
  EXPECT_EQ(logits.shape(), (Shape{3, 10}));
  auto probs = softmax_axis(logits, -1);
  for (double v : probs.values()) EXPECT_NEAR(v, 0.1, 1e-15);
  std::vector<int> bad{8};
  EXPECT_THROW(mlm_logits(u, bad, p, c), std::out_of_range);
}

TEST(Heads, TiedDecoderUsesTokenTable) {
  auto c = tiny();
  RngState rng(24);
  auto p = init_params(c, rng);
  EXPECT_FALSE(p.mlm.decoder.defined());
  auto u = Tensor::randn({1, 2, 8}, rng);
  std::vector<int> pos{1};
  auto logits = mlm_logits(u, pos, p, c);
  // Recompute the head by loops.
  std::vector<double> x(8), h(8);
  for (std::size_t d = 0; d < 8; ++d) x[d] = u.at({0, 1, d});
  for (std::size_t o = 0; o < 8; ++o) {
    double acc = p.mlm.dense.b.values()[o];
    for (std::size_t i = 0; i < 8; ++i) acc += x[i] * p.mlm.dense.w.at({i, o});
    h[o] = testing::naive_gelu(acc);
  }
  auto hn = testing::naive_ln(Tensor::from({1, 8}, h), p.mlm.ln, c.ln_eps);
  for (std::size_t v = 0; v < 10; ++v) {
    double acc = p.mlm.bias.values()[v];
    for (std::size_t d = 0; d < 8; ++d) acc += hn.values()[d] * p.emb.token.at({v, d});
    EXPECT_NEAR(logits.at({0, v}), acc, 1e-12);
  }
}

TEST(Heads, ClsZeroWeightsAndShape) {
  auto c = tiny();
  c.num_classes = 3;
  RngState rng(25);
  auto p = init_params(c, rng);
  auto u = Tensor::randn({4, 3, 8}, rng);
  EXPECT_EQ(cls_logits(u, p).shape(), (Shape{4, 3}));
  for (Tensor* t : {&p.cls.pooler.w, &p.cls.pooler.b, &p.cls.classifier.w, &p.cls.classifier.b})
    for (auto& v : t->mutable_values()) v = 0.0;
  auto zero = cls_logits(u, p);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(cls_logits(Tensor::zeros({2, 0, 8}), p), ShapeError);
}

// Loss touching both heads and the final binary atoms.
Tensor full_loss(const ModelParams& p, const ModelConfig& c, const atoms::InputBatch& b,
                 const Tensor& rU) {
  auto [u, U] = model_forward(b, p, c);
  std::vector<int> pos{1, 2, 5, 7};
  std::vector<int> tgt{3, 4, 9, 0};
  std::vector<double> w{1, 1, 1, 1};
  auto mlm = cross_entropy(mlm_logits(u, pos, p, c), tgt, w);
  std::vector<int> cls_t{1, 0};
  std::vector<double> cw{1, 1};
  auto cls = cross_entropy(cls_logits(u, p), cls_t, cw);
  return add(add(mlm, cls), mean(mul(U, rU)));
}

TEST(Gradients, EveryParameterEndToEnd) {
  for (bool tie : {true, false}) {
    auto c = tiny();
    c.tie_mlm = tie;
    RngState rng(26);
    auto p = init_params(c, rng);
    auto b = random_batch(rng, 2, 4, c.vocab);
    auto rU = Tensor::randn({2, 4, 4, 4}, rng);
    for (auto& [name, t] : p.named()) {
      Tensor h = t;
      for (auto& [n2, t2] : p.named()) t2.zero_grad();
      full_loss(p, c, b, rU).backward();
      std::vector<double> ga(h.grad().begin(), h.grad().end());
      ga.resize(h.numel(), 0.0);
      auto fd = finite_diff_grad([&] { return full_loss(p, c, b, rU).item(); }, h);
      EXPECT_TRUE(grads_agree(ga, fd)) << name;
    }
  }
}

}  // namespace
}  // namespace folnet::model

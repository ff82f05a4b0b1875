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

#include "folnet/model.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "folnet/logic.hpp"
#include "folnet/ops.hpp"

namespace folnet::model {
namespace {

constexpr const char* kUnaryOps = "cjm";
constexpr const char* kBinaryOps = "apt";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Tensor apply_affine(const Tensor& x, const Affine& a) { return linear(x, a.w, &a.b); }

Tensor maybe_dropout(const Tensor& x, double rate, const ForwardOptions& opts) {
  if (!opts.train || rate == 0.0) return x;
  if (!opts.rng) throw std::invalid_argument("dropout in training mode needs an rng");
  return dropout(x, rate, *opts.rng);
}

Tensor mask_for(const AtomMasks& m, char op) {
  auto it = m.op.find(op);
  return it == m.op.end() ? Tensor{} : it->second;
}

Tensor to_head_major(const Tensor& pairs) {
  // [B, X, A, C] -> [B, C, X, A]
  return permute(pairs, {0, 3, 1, 2});
}

Tensor run_branch(const Tensor& x, const Tensor& mixed, const BranchParams& p,
                  const ModelConfig& c, const ForwardOptions& opts) {
  auto h = add(x, maybe_dropout(apply_affine(mixed, p.out), c.dropout, opts));
  h = layer_norm(h, p.ln1.gain, p.ln1.bias, c.ln_eps);
  auto f = apply_affine(elementwise(apply_affine(h, p.ffn_in), Activation::kGelu), p.ffn_out);
  f = maybe_dropout(f, c.dropout, opts);
  return layer_norm(add(h, f), p.ln2.gain, p.ln2.bias, c.ln_eps);
}

Tensor binary_multiplier(const Tensor& m) {
  const auto& s = m.shape();
  return reshape(m, {s[0], s[1], s[2], 1});
}

}  // namespace

OperatorSpec parse_operator_spec(const std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos || s.find('.', dot + 1) != std::string::npos) {
    throw std::invalid_argument("operator spec '" + s + "' needs exactly one '.'");
  }
  OperatorSpec spec{s.substr(0, dot), s.substr(dot + 1)};
  std::set<char> seen;
  auto check = [&](const std::string& part, const std::string& allowed) {
    for (char c : part) {
      if (allowed.find(c) == std::string::npos) {
        throw std::invalid_argument(std::string("unknown operator '") + c + "' in '" + s + "'");
      }
      if (!seen.insert(c).second) {
        throw std::invalid_argument(std::string("duplicate operator '") + c + "' in '" + s + "'");
      }
    }
  };
  check(spec.unary, kUnaryOps);
  check(spec.binary, kBinaryOps);
  return spec;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("ModelConfig: " + m); };
  if (d1 == 0 || d2 == 0 || heads == 0 || head_size == 0 || vocab == 0 || ffn1 == 0 ||
      ffn2 == 0 || num_classes == 0 || max_len == 0) {
    fail("all sizes must be positive");
  }
  if (d1 != heads * head_size) fail("d1 must equal heads * head_size");
  if (delta < 2) fail("delta must be >= 2");
  if (ops.unary.empty() && ops.binary.empty()) fail("operator set is empty");
  parse_operator_spec(ops.str());
  if (dropout < 0.0 || dropout >= 1.0 || attn_dropout < 0.0 || attn_dropout >= 1.0) {
    fail("dropout rates must be in [0, 1)");
  }
  for (char c : attn_dropout_ops) {
    if (std::string("cjmt").find(c) == std::string::npos) fail("attn_dropout_ops takes c, j, m, t");
  }
}

std::map<std::string, std::string> ModelConfig::to_fields() const {
  return {
      {"layers", std::to_string(layers)},
      {"d1", std::to_string(d1)},
      {"d2", std::to_string(d2)},
      {"heads", std::to_string(heads)},
      {"head_size", std::to_string(head_size)},
      {"delta", std::to_string(delta)},
      {"vocab", std::to_string(vocab)},
      {"ffn1", std::to_string(ffn1)},
      {"ffn2", std::to_string(ffn2)},
      {"ops", ops.str()},
      {"dropout", fmt_double(dropout)},
      {"attn_dropout", fmt_double(attn_dropout)},
      {"attn_dropout_ops", attn_dropout_ops},
      {"use_ape", use_ape ? "1" : "0"},
      {"max_len", std::to_string(max_len)},
      {"tie_mlm", tie_mlm ? "1" : "0"},
      {"num_classes", std::to_string(num_classes)},
      {"init_std", fmt_double(init_std)},
      {"ln_eps", fmt_double(ln_eps)},
  };
}

ModelConfig ModelConfig::from_fields(const std::map<std::string, std::string>& f) {
  auto get = [&](const char* k) -> const std::string& {
    auto it = f.find(k);
    if (it == f.end()) throw std::invalid_argument(std::string("missing config field ") + k);
    return it->second;
  };
  ModelConfig c;
  c.layers = std::stoul(get("layers"));
  c.d1 = std::stoul(get("d1"));
  c.d2 = std::stoul(get("d2"));
  c.heads = std::stoul(get("heads"));
  c.head_size = std::stoul(get("head_size"));
  c.delta = std::stoi(get("delta"));
  c.vocab = std::stoul(get("vocab"));
  c.ffn1 = std::stoul(get("ffn1"));
  c.ffn2 = std::stoul(get("ffn2"));
  c.ops = parse_operator_spec(get("ops"));
  c.dropout = std::stod(get("dropout"));
  c.attn_dropout = std::stod(get("attn_dropout"));
  c.attn_dropout_ops = f.count("attn_dropout_ops") ? f.at("attn_dropout_ops") : "";
  c.use_ape = get("use_ape") == "1";
  c.max_len = std::stoul(get("max_len"));
  c.tie_mlm = get("tie_mlm") == "1";
  c.num_classes = std::stoul(get("num_classes"));
  c.init_std = std::stod(get("init_std"));
  c.ln_eps = std::stod(get("ln_eps"));
  c.validate();
  return c;
}

void ModelParams::visit(const std::function<void(const std::string&, Tensor&)>& fn) {
  auto affine = [&](const std::string& n, Affine& a) {
    fn(n + ".w", a.w);
    fn(n + ".b", a.b);
  };
  auto norm = [&](const std::string& n, Norm& a) {
    fn(n + ".gain", a.gain);
    fn(n + ".bias", a.bias);
  };
  auto branch = [&](const std::string& n, BranchParams& b) {
    if (!b.out.w.defined()) return;
    affine(n + ".out", b.out);
    norm(n + ".ln1", b.ln1);
    affine(n + ".ffn_in", b.ffn_in);
    affine(n + ".ffn_out", b.ffn_out);
    norm(n + ".ln2", b.ln2);
  };
  fn("emb.token", emb.token);
  fn("emb.seq", emb.seq);
  fn("emb.reldist", emb.reldist);
  if (emb.ape.defined()) fn("emb.ape", emb.ape);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "layer" + std::to_string(i);
    for (auto& [op, w] : layers[i].ops) {
      affine(p + "." + op + ".kernel", w.kernel);
      affine(p + "." + op + ".premise", w.premise);
    }
    branch(p + ".unary", layers[i].unary);
    branch(p + ".binary", layers[i].binary);
  }
  affine("mlm.dense", mlm.dense);
  norm("mlm.ln", mlm.ln);
  if (mlm.decoder.defined()) fn("mlm.decoder", mlm.decoder);
  fn("mlm.bias", mlm.bias);
  affine("cls.pooler", cls.pooler);
  affine("cls.classifier", cls.classifier);
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  const_cast<ModelParams*>(this)->visit(
      [&](const std::string& n, Tensor& t) { out.emplace_back(n, t); });
  return out;
}

ModelParams init_params(const ModelConfig& c, RngState& rng) {
  c.validate();
  auto weight = [&](std::size_t in, std::size_t out) {
    std::vector<double> v(in * out);
    for (auto& x : v) x = rng.truncated_normal(c.init_std);
    return Tensor::from({in, out}, std::move(v), true);
  };
  auto zeros = [](std::size_t n) { return Tensor::zeros({n}, true); };
  auto affine = [&](std::size_t in, std::size_t out) { return Affine{weight(in, out), zeros(out)}; };
  auto norm = [&](std::size_t n) { return Norm{Tensor::full({n}, 1.0, true), zeros(n)}; };
  auto branch = [&](std::size_t width, std::size_t mixed, std::size_t ffn) {
    BranchParams b;
    b.out = affine(mixed, width);
    b.ln1 = norm(width);
    b.ffn_in = affine(width, ffn);
    b.ffn_out = affine(ffn, width);
    b.ln2 = norm(width);
    return b;
  };
  const std::size_t H = c.heads, S = c.head_size, D1 = c.d1, D2 = c.d2;
  ModelParams p;
  p.emb.token = weight(c.vocab, D1);
  p.emb.seq = weight(2, D1);
  p.emb.reldist = weight(static_cast<std::size_t>(2 * c.delta + 2), D2);
  if (c.use_ape) p.emb.ape = weight(c.max_len, D1);
  for (std::size_t l = 0; l < c.layers; ++l) {
    LayerParams L;
    // Input/output widths of each operator's kernel and premise projection.
    const std::map<char, std::pair<std::pair<std::size_t, std::size_t>,
                                   std::pair<std::size_t, std::size_t>>>
        dims = {
            {'c', {{D1, H * S}, {D2, H}}},  {'j', {{D2, H}, {D1, H * S}}},
            {'m', {{D2, H}, {D2, S}}},      {'a', {{D1, H * S}, {D1, H * S}}},
            {'p', {{D1, H * D2}, {D2, D2}}}, {'t', {{D2, H}, {D2, H}}},
        };
    for (const std::string& part : {c.ops.unary, c.ops.binary}) {
      for (char op : part) {
        const auto& d = dims.at(op);
        OperatorParams w;
        w.kernel = affine(d.first.first, d.first.second);
        w.premise = affine(d.second.first, d.second.second);
        L.ops[op] = std::move(w);
      }
    }
    if (!c.ops.unary.empty()) L.unary = branch(D1, H * S, c.ffn1);
    if (!c.ops.binary.empty()) L.binary = branch(D2, H, c.ffn2);
    p.layers.push_back(std::move(L));
  }
  p.mlm.dense = affine(D1, D1);
  p.mlm.ln = norm(D1);
  if (!c.tie_mlm) p.mlm.decoder = weight(D1, c.vocab);
  p.mlm.bias = zeros(c.vocab);
  p.cls.pooler = affine(D1, D1);
  p.cls.classifier = affine(D1, c.num_classes);
  return p;
}

AtomMasks combine_masks(const MaskSet* masks, const atoms::InputBatch& batch) {
  const std::size_t B = batch.batch, T = batch.T;
  AtomMasks out;
  const bool flow = masks && masks->mode != MaskMode::kNone;
  if (flow && masks->T != T) {
    throw ShapeError("mask built for T=" + std::to_string(masks->T) + " but batch has T=" +
                     std::to_string(T));
  }
  const bool padded = std::any_of(batch.pad_mask.begin(), batch.pad_mask.end(),
                                  [](double v) { return v == 0.0; });
  Tensor pad;
  if (padded) {
    std::vector<double> v(B * T * T);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t x = 0; x < T; ++x)
        for (std::size_t a = 0; a < T; ++a) v[(b * T + x) * T + a] = batch.pad_mask[b * T + a];
    pad = Tensor::from({B, T, T}, std::move(v));
  }
  for (char op : std::string("cjmpt")) {
    Tensor m = flow && masks->masks(op) ? masks->op_masks.at(op) : Tensor{};
    // Padding enters every softmax kernel.
    if (pad.defined() && op != 'p') m = m.defined() ? mul(m, pad) : pad;
    if (m.defined()) out.op[op] = m;
  }
  if (flow) out.binary = masks->flow;
  return out;
}

std::pair<Tensor, Tensor> layer_forward(const Tensor& u, const Tensor& U,
                                        const LayerParams& params, const ModelConfig& c,
                                        const AtomMasks& masks, const ForwardOptions& opts) {
  if (u.ndim() != 3 || u.dim(2) != c.d1 || U.ndim() != 4 || U.dim(3) != c.d2 ||
      U.dim(0) != u.dim(0) || U.dim(1) != u.dim(1) || U.dim(2) != u.dim(1)) {
    throw ShapeError("layer_forward: atoms " + shape_str(u.shape()) + " / " +
                     shape_str(U.shape()) + " do not match d1=" + std::to_string(c.d1) +
                     ", d2=" + std::to_string(c.d2));
  }
  const std::size_t B = u.dim(0), T = u.dim(1), H = c.heads, S = c.head_size;
  auto attn_rate = [&](char op) {
    return c.attn_dropout_ops.find(op) != std::string::npos ? c.attn_dropout : 0.0;
  };
  auto kernel_from_pairs = [&](char op) {
    const auto& w = params.ops.at(op);
    auto K = logic::softmax_kernel(to_head_major(apply_affine(U, w.kernel)), mask_for(masks, op));
    return maybe_dropout(K, attn_rate(op), opts);
  };

  Tensor u_next = u;
  if (!c.ops.unary.empty()) {
    std::vector<Tensor> outs;
    for (char op : c.ops.unary) {
      const auto& w = params.ops.at(op);
      const Tensor m = mask_for(masks, op);
      if (op == 'c') {
        auto k = reshape(apply_affine(u, w.kernel), {B, T, H, S});
        auto v = to_head_major(apply_affine(U, w.premise));
        const double rate = opts.train ? attn_rate('c') : 0.0;
        outs.push_back(logic::op_cjoin_normalized(k, v, m, rate, opts.rng));
      } else if (op == 'j') {
        auto v = reshape(apply_affine(u, w.premise), {B, T, H, S});
        outs.push_back(logic::op_join(kernel_from_pairs('j'), v, m));
      } else {
        auto v = to_head_major(apply_affine(U, w.premise));
        outs.push_back(logic::op_mu(kernel_from_pairs('m'), v, m));
      }
    }
    Tensor mixed = outs[0];
    for (std::size_t i = 1; i < outs.size(); ++i) mixed = add(mixed, outs[i]);
    u_next = run_branch(u, reshape(mixed, {B, T, H * S}), params.unary, c, opts);
  }

  Tensor U_next = U;
  if (!c.ops.binary.empty()) {
    std::vector<Tensor> outs;
    for (char op : c.ops.binary) {
      const auto& w = params.ops.at(op);
      const Tensor m = mask_for(masks, op);
      if (op == 'a') {
        auto k = reshape(apply_affine(u, w.kernel), {B, T, H, S});
        auto v = reshape(apply_affine(u, w.premise), {B, T, H, S});
        outs.push_back(logic::op_assoc(k, v));
      } else if (op == 'p') {
        auto k = reshape(apply_affine(u, w.kernel), {B, T, H, c.d2});
        auto v = to_head_major(apply_affine(U, w.premise));
        outs.push_back(logic::op_prod(k, v, m));
      } else {
        auto v = to_head_major(apply_affine(U, w.premise));
        outs.push_back(logic::op_trans(kernel_from_pairs('t'), v, m));
      }
    }
    Tensor mixed = outs[0];
    for (std::size_t i = 1; i < outs.size(); ++i) mixed = add(mixed, outs[i]);
    U_next = run_branch(U, permute(mixed, {0, 2, 3, 1}), params.binary, c, opts);
  }
  if (masks.binary.defined()) U_next = mul(U_next, binary_multiplier(masks.binary));
  return {u_next, U_next};
}

std::pair<Tensor, Tensor> model_forward(const atoms::InputBatch& batch,
                                        const ModelParams& params, const ModelConfig& config,
                                        const MaskSet* masks, const ForwardOptions& opts) {
  if (params.layers.size() != config.layers) {
    throw std::invalid_argument("model_forward: parameter layer count differs from config");
  }
  for (int id : batch.token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab) {
      throw std::out_of_range("model_forward: token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(config.vocab));
    }
  }
  auto [u, U] = atoms::encode_base_atoms(batch, params.emb, config.delta);
  const AtomMasks am = combine_masks(masks, batch);
  if (am.binary.defined()) U = mul(U, binary_multiplier(am.binary));
  u = maybe_dropout(u, config.dropout, opts);
  for (const auto& layer : params.layers) {
    std::tie(u, U) = layer_forward(u, U, layer, config, am, opts);
  }
  return {u, U};
}

Tensor mlm_logits(const Tensor& uL, std::span<const int> positions, const ModelParams& params,
                  const ModelConfig& config) {
  if (uL.ndim() != 3) throw ShapeError("mlm_logits: expected [batch, T, D1] atoms");
  const std::size_t rows = uL.dim(0) * uL.dim(1);
  auto flat = reshape(uL, {rows, uL.dim(2)});
  auto x = embedding(flat, positions, {positions.size()});
  auto h = elementwise(apply_affine(x, params.mlm.dense), Activation::kGelu);
  h = layer_norm(h, params.mlm.ln.gain, params.mlm.ln.bias, config.ln_eps);
  const Tensor dec = params.mlm.decoder.defined() ? params.mlm.decoder
                                                  : permute(params.emb.token, {1, 0});
  return linear(h, dec, &params.mlm.bias);
}

Tensor cls_logits(const Tensor& uL, const ModelParams& params) {
  if (uL.ndim() != 3) throw ShapeError("cls_logits: expected [batch, T, D1] atoms");
  if (uL.dim(1) == 0) throw ShapeError("cls_logits: empty sequence");
  auto first = reshape(slice(uL, 1, 0, 1), {uL.dim(0), uL.dim(2)});
  auto pooled = elementwise(apply_affine(first, params.cls.pooler), Activation::kTanh);
  return apply_affine(pooled, params.cls.classifier);
}

}  // namespace folnet::model

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

#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "folnet/atoms.hpp"
#include "folnet/masks.hpp"
#include "folnet/tensor.hpp"

namespace folnet::model {

/// Enabled operators, e.g. "jmc.atp": unary {j, m, c}, binary {a, t, p}.
struct OperatorSpec {
  std::string unary;
  std::string binary;

  bool has(char op) const {
    return unary.find(op) != std::string::npos || binary.find(op) != std::string::npos;
  }
  std::string str() const { return unary + "." + binary; }
};

OperatorSpec parse_operator_spec(const std::string& s);

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t d1 = 64;
  std::size_t d2 = 8;
  std::size_t heads = 4;
  std::size_t head_size = 16;
  int delta = 8;
  std::size_t vocab = 16;
  std::size_t ffn1 = 128;
  std::size_t ffn2 = 32;
  OperatorSpec ops{"jmc", "atp"};
  double dropout = 0.1;
  double attn_dropout = 0.1;
  std::string attn_dropout_ops = "jcmt";  // softmax kernels that get dropout
  bool use_ape = false;
  std::size_t max_len = 512;  // rows of the absolute position table
  bool tie_mlm = true;
  std::size_t num_classes = 2;
  double init_std = 0.02;
  double ln_eps = 1e-12;

  void validate() const;
  std::map<std::string, std::string> to_fields() const;
  static ModelConfig from_fields(const std::map<std::string, std::string>& f);
};

struct Affine {
  Tensor w;  // [in, out]
  Tensor b;  // [out]
};

struct Norm {
  Tensor gain;
  Tensor bias;
};

/// Kernel and premise projections of one operator.
struct OperatorParams {
  Affine kernel;
  Affine premise;
};

/// One branch's merge: output projection, two norms and the Boolean FFN.
struct BranchParams {
  Affine out;
  Norm ln1;
  Affine ffn_in;
  Affine ffn_out;
  Norm ln2;
};

struct LayerParams {
  std::map<char, OperatorParams> ops;
  BranchParams unary;   // unused when no unary operator is enabled
  BranchParams binary;  // unused when no binary operator is enabled
};

struct MlmHead {
  Affine dense;
  Norm ln;
  Tensor decoder;  // [D1, V]; undefined when tied to the token table
  Tensor bias;     // [V]
};

struct ClsHead {
  Affine pooler;
  Affine classifier;
};

struct ModelParams {
  atoms::EmbeddingTables emb;
  std::vector<LayerParams> layers;
  MlmHead mlm;
  ClsHead cls;

  /// Visits every trainable tensor with a stable hierarchical name.
  void visit(const std::function<void(const std::string&, Tensor&)>& fn);
  std::vector<std::pair<std::string, Tensor>> named() const;
};

ModelParams init_params(const ModelConfig& config, RngState& rng);

/// Masks combined with padding, ready for one forward pass.
struct AtomMasks {
  std::map<char, Tensor> op;  // [B or 1, T, T] per masked operator
  Tensor binary;              // [B or 1, T, T] multiplier for binary atoms
};

AtomMasks combine_masks(const MaskSet* masks, const atoms::InputBatch& batch);

struct ForwardOptions {
  bool train = false;       // enables dropout
  RngState* rng = nullptr;  // required when train is set and a rate is nonzero
};

std::pair<Tensor, Tensor> layer_forward(const Tensor& u, const Tensor& U,
                                        const LayerParams& params, const ModelConfig& config,
                                        const AtomMasks& masks = {},
                                        const ForwardOptions& opts = {});

std::pair<Tensor, Tensor> model_forward(const atoms::InputBatch& batch,
                                        const ModelParams& params, const ModelConfig& config,
                                        const MaskSet* masks = nullptr,
                                        const ForwardOptions& opts = {});

/// Vocabulary logits [n, V] for flat positions b * T + t of u_L.
Tensor mlm_logits(const Tensor& uL, std::span<const int> positions, const ModelParams& params,
                  const ModelConfig& config);

/// Class logits [batch, num_classes] from the tanh-pooled position-0 atoms.
Tensor cls_logits(const Tensor& uL, const ModelParams& params);

}  // namespace folnet::model

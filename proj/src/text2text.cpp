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

#include "folnet/text2text.hpp"

#include <algorithm>
#include <stdexcept>

#include "folnet/logic.hpp"
#include "folnet/ops.hpp"

namespace folnet::text2text {

std::pair<Tensor, Tensor> decoder_forward(const atoms::InputBatch& batch,
                                          const model::ModelParams& params,
                                          const model::ModelConfig& config,
                                          const MaskSet& masks,
                                          const model::ForwardOptions& opts) {
  if (masks.mode != MaskMode::kCausal && masks.mode != MaskMode::kPrefix) {
    throw std::invalid_argument("decoder_forward: mask mode must be causal or prefix");
  }
  return model::model_forward(batch, params, config, &masks, opts);
}

Tensor next_token_logits(const atoms::InputBatch& batch, const model::ModelParams& params,
                         const model::ModelConfig& config, const MaskSet& masks) {
  auto [u, U] = decoder_forward(batch, params, config, masks);
  std::vector<int> pos(batch.batch * batch.T);
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int>(i);
  auto logits = model::mlm_logits(u, pos, params, config);
  return reshape(logits, {batch.batch, batch.T, config.vocab});
}

Tensor encdec_trans(const Tensor& kernel, const Tensor& v_enc, const Tensor& v_dec) {
  if (kernel.ndim() != 4 || v_enc.ndim() != 4 || v_dec.ndim() != 4) {
    throw ShapeError("encdec_trans: operands must be rank 4");
  }
  const std::size_t B = kernel.dim(0), H = kernel.dim(1), To = kernel.dim(2);
  const std::size_t Ti = v_enc.dim(2);
  const bool ok = v_enc.dim(0) == B && v_enc.dim(1) == H && v_enc.dim(3) == Ti &&
                  kernel.dim(3) == Ti + To && v_dec.dim(0) == B && v_dec.dim(1) == H &&
                  v_dec.dim(2) == To && v_dec.dim(3) == Ti + To;
  if (!ok) {
    throw ShapeError("encdec_trans: kernel " + shape_str(kernel.shape()) + ", encoder " +
                     shape_str(v_enc.shape()) + ", decoder " + shape_str(v_dec.shape()) +
                     " disagree on the input/target boundary");
  }
  if (Ti == 0) return logic::op_trans(kernel, v_dec);
  // Premise rows: input a -> [v_enc(a, input), 0]; target a -> v_dec(a, all).
  auto enc_rows = concat({v_enc, Tensor::zeros({B, H, Ti, To})}, 3);
  return logic::op_trans(kernel, concat({enc_rows, v_dec}, 2));
}

std::vector<int> greedy_generate(const std::vector<int>& prompt,
                                 const model::ModelParams& params,
                                 const model::ModelConfig& config, std::size_t max_len,
                                 int end_token, MaskMode mode) {
  if (prompt.empty()) throw std::invalid_argument("greedy_generate: empty prompt");
  if (mode != MaskMode::kCausal && mode != MaskMode::kPrefix) {
    throw std::invalid_argument("greedy_generate: mode must be causal or prefix");
  }
  std::vector<int> seq = prompt;
  while (seq.size() < max_len) {
    const std::size_t T = seq.size();
    auto batch = atoms::InputBatch::from_tokens(1, T, seq);
    MaskSet masks;
    if (mode == MaskMode::kCausal) {
      masks = build_masks(mode, T);
    } else if (prompt.size() < T) {
      masks = build_masks(mode, T, prompt.size());
    } else {
      // The whole sequence is prefix: fully bidirectional.
      masks = build_masks(MaskMode::kNone, T);
      masks.mode = MaskMode::kPrefix;
      masks.prefix_len = T;
    }
    auto logits = next_token_logits(batch, params, config, masks);
    auto row = logits.values().subspan((T - 1) * config.vocab, config.vocab);
    const int next = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    seq.push_back(next);
    if (next == end_token) break;
  }
  return seq;
}

}  // namespace folnet::text2text

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

#include <vector>

#include "folnet/masks.hpp"
#include "folnet/model.hpp"

namespace folnet::text2text {

/// model_forward under a causal or prefix MaskSet.
std::pair<Tensor, Tensor> decoder_forward(const atoms::InputBatch& batch,
                                          const model::ModelParams& params,
                                          const model::ModelConfig& config,
                                          const MaskSet& masks,
                                          const model::ForwardOptions& opts = {});

/// Next-token logits [batch, T, V] from the decoder's unary atoms.
Tensor next_token_logits(const atoms::InputBatch& batch, const model::ModelParams& params,
                         const model::ModelConfig& config, const MaskSet& masks);

/// Decoder trans-operator over columns [input; target]:
///   kernel [b,H,To,Ti+To], v_enc [b,H,Ti,Ti], v_dec [b,H,To,Ti+To]
///   y in target: sum over target a of K(x,a) v_dec(a,y)
///   y in input:  sum over input a of K(x,a) v_enc(a,y) + sum over target a of K(x,a) v_dec(a,y)
Tensor encdec_trans(const Tensor& kernel, const Tensor& v_enc, const Tensor& v_dec);

/// Greedy decoding by full re-forward each step. Stops at max_len tokens or
/// after emitting end_token (when end_token >= 0). kPrefix treats the prompt
/// as the bidirectional prefix.
std::vector<int> greedy_generate(const std::vector<int>& prompt,
                                 const model::ModelParams& params,
                                 const model::ModelConfig& config, std::size_t max_len,
                                 int end_token = -1, MaskMode mode = MaskMode::kCausal);

}  // namespace folnet::text2text

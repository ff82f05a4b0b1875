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

#include <cstdint>
#include <utility>
#include <vector>

#include "folnet/tensor.hpp"

namespace folnet::atoms {

/// Token batch in row-major [batch, T] order.
struct InputBatch {
  std::size_t batch = 0;
  std::size_t T = 0;
  std::vector<int> token_ids;
  std::vector<int> seq_ids;     // 0 or 1
  std::vector<double> pad_mask;  // 1 for real tokens, 0 for padding

  /// Single-segment batch without padding.
  static InputBatch from_tokens(std::size_t batch, std::size_t T, std::vector<int> ids);
  void validate() const;
};

struct EmbeddingTables {
  Tensor token;    // [V, D1]
  Tensor seq;      // [2, D1]
  Tensor reldist;  // [2 delta + 2, D2]
  Tensor ape;      // optional [T_max, D1]
};

/// Clipped distance id in {-delta, ..., delta + 1}:
///   0                          t = tau = 0
///   delta                      t = 0, tau > 0
///   -delta                     t > 0, tau = 0
///   clamp(tau - t, 1-delta, delta-1)   both > 0, same segment
///   delta + 1                  both > 0, different segments
int clipped_rel_dist(std::int64_t t, std::int64_t tau, int seq_t, int seq_tau, int delta);

/// Row index into the reldist table for a distance id.
inline std::size_t rel_dist_row(int id, int delta) { return static_cast<std::size_t>(id + delta); }

/// Distance ids for every (t, tau), shape [batch, T, T].
std::vector<int> build_rel_dist_matrix(const InputBatch& batch, int delta);

/// u0 = token[ids] + seq[seq_ids] (+ ape[t]), shape [batch, T, D1];
/// U0 = reldist[rel dist rows], shape [batch, T, T, D2].
std::pair<Tensor, Tensor> encode_base_atoms(const InputBatch& batch,
                                            const EmbeddingTables& tables, int delta);

}  // namespace folnet::atoms

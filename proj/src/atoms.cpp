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

#include "folnet/atoms.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "folnet/ops.hpp"

namespace folnet::atoms {

InputBatch InputBatch::from_tokens(std::size_t batch, std::size_t T, std::vector<int> ids) {
  InputBatch b;
  b.batch = batch;
  b.T = T;
  b.token_ids = std::move(ids);
  b.seq_ids.assign(batch * T, 0);
  b.pad_mask.assign(batch * T, 1.0);
  b.validate();
  return b;
}

void InputBatch::validate() const {
  const std::size_t n = batch * T;
  if (token_ids.size() != n || seq_ids.size() != n || pad_mask.size() != n) {
    throw ShapeError("InputBatch: expected " + std::to_string(n) + " entries per field");
  }
  for (int s : seq_ids) {
    if (s != 0 && s != 1) throw std::invalid_argument("InputBatch: seq id must be 0 or 1");
  }
}

int clipped_rel_dist(std::int64_t t, std::int64_t tau, int seq_t, int seq_tau, int delta) {
  if (t < 0 || tau < 0) throw std::invalid_argument("clipped_rel_dist: negative position");
  if (delta < 2) throw std::invalid_argument("clipped_rel_dist: delta must be >= 2");
  if (t == 0 && tau == 0) return 0;
  if (t == 0) return delta;
  if (tau == 0) return -delta;
  if (seq_t != seq_tau) return delta + 1;
  const std::int64_t d = std::clamp<std::int64_t>(tau - t, 1 - delta, delta - 1);
  return static_cast<int>(d);
}

std::vector<int> build_rel_dist_matrix(const InputBatch& batch, int delta) {
  batch.validate();
  const std::size_t T = batch.T;
  std::vector<int> ids(batch.batch * T * T);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const int* seq = batch.seq_ids.data() + b * T;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t tau = 0; tau < T; ++tau)
        ids[(b * T + t) * T + tau] = clipped_rel_dist(static_cast<std::int64_t>(t),
                                                      static_cast<std::int64_t>(tau),
                                                      seq[t], seq[tau], delta);
  }
  return ids;
}

std::pair<Tensor, Tensor> encode_base_atoms(const InputBatch& batch,
                                            const EmbeddingTables& tables, int delta) {
  batch.validate();
  const std::size_t B = batch.batch, T = batch.T;
  if (tables.reldist.dim(0) != static_cast<std::size_t>(2 * delta + 2)) {
    throw ShapeError("encode_base_atoms: reldist table has " +
                     std::to_string(tables.reldist.dim(0)) + " rows, expected " +
                     std::to_string(2 * delta + 2));
  }
  Tensor u = add(embedding(tables.token, batch.token_ids, {B, T}),
                 embedding(tables.seq, batch.seq_ids, {B, T}));
  if (tables.ape.defined()) {
    if (tables.ape.dim(0) < T) {
      throw ShapeError("encode_base_atoms: absolute position table shorter than T");
    }
    std::vector<int> pos(T);
    for (std::size_t t = 0; t < T; ++t) pos[t] = static_cast<int>(t);
    u = add(u, embedding(tables.ape, pos, {1, T}));
  }
  auto ids = build_rel_dist_matrix(batch, delta);
  for (auto& id : ids) id = static_cast<int>(rel_dist_row(id, delta));
  Tensor U = embedding(tables.reldist, ids, {B, T, T});
  return {u, U};
}

}  // namespace folnet::atoms

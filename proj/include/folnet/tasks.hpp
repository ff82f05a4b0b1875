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

#include <string>
#include <vector>

#include "folnet/atoms.hpp"
#include "folnet/tensor.hpp"

namespace folnet::tasks {

inline constexpr int kPad = 0;
inline constexpr int kCls = 1;
inline constexpr int kSep = 2;
inline constexpr int kMask = 3;
inline constexpr int kBos = 4;
inline constexpr int kFirstFree = 5;  // first non-special id

enum class TaskKind { kCopy, kReverse, kMlmSynthetic, kKinship2Hop, kPairClass };

TaskKind parse_task(const std::string& s);
std::string task_name(TaskKind k);

enum class TaskFormat { kDecoder, kMlm, kClassify };
TaskFormat task_format(TaskKind k);

/// One example. For decoder tasks loss_mask marks the tokens to be predicted
/// (position t is predicted from the logits at t - 1). For MLM, targets holds
/// the uncorrupted tokens and loss_mask the selected positions. For
/// classification only label is used.
struct TaskExample {
  std::vector<int> tokens;
  std::vector<int> targets;
  std::vector<double> loss_mask;
  std::vector<int> segments;  // 0/1 per token
  int label = -1;
};

/// BOS payload SEP payload; payload length (T - 2) / 2 over ids [5, vocab).
std::vector<TaskExample> gen_copy_task(RngState& rng, std::size_t vocab, std::size_t T,
                                       std::size_t n);
/// Same layout with the second payload reversed.
std::vector<TaskExample> gen_reverse_task(RngState& rng, std::size_t vocab, std::size_t T,
                                          std::size_t n);

/// Word classes of a toy grammar S -> NP VERB NP, NP -> DET [ADJ] NOUN.
struct Grammar {
  std::vector<int> det, adj, noun, verb;
  double adj_prob = 0.5;

  static Grammar for_vocab(std::size_t vocab);
  std::vector<int> sentence(RngState& rng) const;
  std::vector<int> all_words() const;
};

/// [CLS] sentences... [SEP] padded to T, with BERT-style 80/10/10 corruption
/// of each word selected with probability mask_rate.
std::vector<TaskExample> gen_mlm_task(RngState& rng, const Grammar& grammar, std::size_t T,
                                      double mask_rate, std::size_t n);

/// Kinship composition.
enum class Relation { kParent, kChild, kSibling, kSpouse };
enum class KinLabel { kGrandparent, kGrandchild, kParent, kChild, kAuntUncle, kNibling, kSibling };
inline constexpr std::size_t kKinLabels = 7;
inline constexpr std::size_t kKinRelations = 4;

/// Label of x ? z given "x r1 y" and "y r2 z"; throws for pairs outside the table.
KinLabel compose(Relation r1, Relation r2);
bool composable(Relation r1, Relation r2);

/// Vocabulary size the kinship layout needs.
std::size_t kinship_vocab(std::size_t n_entities);
/// Length of every kinship example.
std::size_t kinship_length(std::size_t distractors);

/// [CLS] facts [SEP] A ? C [SEP], each fact "x r y ." with the two chain facts
/// and `distractors` unrelated facts in random order. Entities are drawn per
/// example; distractors never mention A, B or C.
std::vector<TaskExample> gen_kinship2hop(RngState& rng, std::size_t n_entities,
                                         std::size_t distractors, std::size_t n);

/// [CLS] s [SEP] s' [SEP]; label 1 when s' == s, 0 when one token differs.
std::vector<TaskExample> gen_pairclass(RngState& rng, std::size_t vocab, std::size_t T,
                                       std::size_t n);

/// Packs examples into a right-padded batch of length T.
atoms::InputBatch make_batch(const std::vector<TaskExample>& examples, std::size_t T);

}  // namespace folnet::tasks

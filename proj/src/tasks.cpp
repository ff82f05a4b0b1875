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

#include "folnet/tasks.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace folnet::tasks {

namespace {

int draw(RngState& rng, const std::vector<int>& from) { return from[rng.index(from.size())]; }

int payload_token(RngState& rng, std::size_t vocab) {
  return kFirstFree + static_cast<int>(rng.index(vocab - kFirstFree));
}

std::vector<TaskExample> gen_seq2seq(RngState& rng, std::size_t vocab, std::size_t T,
                                     std::size_t n, bool reverse) {
  if (vocab <= static_cast<std::size_t>(kFirstFree)) {
    throw std::invalid_argument("copy/reverse task needs vocab > " + std::to_string(kFirstFree));
  }
  if (T < 4) throw std::invalid_argument("copy/reverse task needs T >= 4");
  const std::size_t L = (T - 2) / 2;
  std::vector<TaskExample> out(n);
  for (auto& ex : out) {
    std::vector<int> payload(L);
    for (auto& t : payload) t = payload_token(rng, vocab);
    ex.tokens.push_back(kBos);
    ex.tokens.insert(ex.tokens.end(), payload.begin(), payload.end());
    ex.tokens.push_back(kSep);
    if (reverse) std::reverse(payload.begin(), payload.end());
    ex.tokens.insert(ex.tokens.end(), payload.begin(), payload.end());
    ex.targets = ex.tokens;
    ex.loss_mask.assign(ex.tokens.size(), 0.0);
    std::fill(ex.loss_mask.end() - static_cast<std::ptrdiff_t>(L), ex.loss_mask.end(), 1.0);
    ex.segments.assign(ex.tokens.size(), 0);
  }
  return out;
}

}  // namespace

TaskKind parse_task(const std::string& s) {
  if (s == "copy") return TaskKind::kCopy;
  if (s == "reverse") return TaskKind::kReverse;
  if (s == "mlm_synthetic") return TaskKind::kMlmSynthetic;
  if (s == "kinship2hop") return TaskKind::kKinship2Hop;
  if (s == "pairclass") return TaskKind::kPairClass;
  throw std::invalid_argument("unknown task '" + s + "'");
}

std::string task_name(TaskKind k) {
  switch (k) {
    case TaskKind::kCopy: return "copy";
    case TaskKind::kReverse: return "reverse";
    case TaskKind::kMlmSynthetic: return "mlm_synthetic";
    case TaskKind::kKinship2Hop: return "kinship2hop";
    case TaskKind::kPairClass: return "pairclass";
  }
  return "copy";
}

TaskFormat task_format(TaskKind k) {
  switch (k) {
    case TaskKind::kCopy:
    case TaskKind::kReverse: return TaskFormat::kDecoder;
    case TaskKind::kMlmSynthetic: return TaskFormat::kMlm;
    default: return TaskFormat::kClassify;
  }
}

std::vector<TaskExample> gen_copy_task(RngState& rng, std::size_t vocab, std::size_t T,
                                       std::size_t n) {
  return gen_seq2seq(rng, vocab, T, n, false);
}

std::vector<TaskExample> gen_reverse_task(RngState& rng, std::size_t vocab, std::size_t T,
                                          std::size_t n) {
  return gen_seq2seq(rng, vocab, T, n, true);
}

Grammar Grammar::for_vocab(std::size_t vocab) {
  if (vocab < static_cast<std::size_t>(kFirstFree) + 4) {
    throw std::invalid_argument("grammar needs vocab >= " + std::to_string(kFirstFree + 4));
  }
  Grammar g;
  const int free = static_cast<int>(vocab) - kFirstFree;
  // Split the free ids into four contiguous classes; nouns get the remainder.
  const int q = free / 4;
  int id = kFirstFree;
  for (int i = 0; i < q; ++i) g.det.push_back(id++);
  for (int i = 0; i < q; ++i) g.adj.push_back(id++);
  for (int i = 0; i < q; ++i) g.verb.push_back(id++);
  while (id < static_cast<int>(vocab)) g.noun.push_back(id++);
  return g;
}

std::vector<int> Grammar::sentence(RngState& rng) const {
  std::vector<int> s;
  auto np = [&] {
    s.push_back(draw(rng, det));
    if (rng.uniform() < adj_prob) s.push_back(draw(rng, adj));
    s.push_back(draw(rng, noun));
  };
  np();
  s.push_back(draw(rng, verb));
  np();
  return s;
}

std::vector<int> Grammar::all_words() const {
  std::vector<int> w;
  for (const auto* c : {&det, &adj, &noun, &verb}) w.insert(w.end(), c->begin(), c->end());
  std::sort(w.begin(), w.end());
  return w;
}

std::vector<TaskExample> gen_mlm_task(RngState& rng, const Grammar& grammar, std::size_t T,
                                      double mask_rate, std::size_t n) {
  if (T < 9) throw std::invalid_argument("mlm task needs T >= 9 for one sentence");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) {
    throw std::invalid_argument("mask_rate outside [0, 1]");
  }
  const auto words = grammar.all_words();
  std::vector<TaskExample> out(n);
  for (auto& ex : out) {
    std::vector<int> body;
    for (;;) {
      auto s = grammar.sentence(rng);
      if (!body.empty() && body.size() + s.size() + 2 > T) break;
      body.insert(body.end(), s.begin(), s.end());
    }
    ex.targets.push_back(kCls);
    ex.targets.insert(ex.targets.end(), body.begin(), body.end());
    ex.targets.push_back(kSep);
    ex.tokens = ex.targets;
    ex.loss_mask.assign(ex.tokens.size(), 0.0);
    ex.segments.assign(ex.tokens.size(), 0);
    for (std::size_t t = 1; t + 1 < ex.tokens.size(); ++t) {
      if (rng.uniform() >= mask_rate) continue;
      ex.loss_mask[t] = 1.0;
      const double r = rng.uniform();
      if (r < 0.8) {
        ex.tokens[t] = kMask;
      } else if (r < 0.9) {
        ex.tokens[t] = draw(rng, words);
      }
    }
  }
  return out;
}

bool composable(Relation r1, Relation r2) {
  using R = Relation;
  switch (r1) {
    case R::kParent: return r2 == R::kParent || r2 == R::kSibling;
    case R::kChild: return r2 == R::kChild || r2 == R::kSpouse || r2 == R::kSibling;
    case R::kSibling: return r2 == R::kParent || r2 == R::kChild || r2 == R::kSibling;
    case R::kSpouse: return r2 == R::kParent;
  }
  return false;
}

KinLabel compose(Relation r1, Relation r2) {
  using R = Relation;
  using K = KinLabel;
  if (!composable(r1, r2)) throw std::invalid_argument("relation pair has no single composition");
  if (r1 == R::kParent) return r2 == R::kParent ? K::kGrandparent : K::kParent;
  if (r1 == R::kChild) {
    if (r2 == R::kChild) return K::kGrandchild;
    return r2 == R::kSpouse ? K::kChild : K::kNibling;
  }
  if (r1 == R::kSibling) {
    if (r2 == R::kParent) return K::kAuntUncle;
    return r2 == R::kChild ? K::kChild : K::kSibling;
  }
  return K::kParent;  // spouse of a parent
}

// Token layout: specials, '.', '?', relations, entities.
namespace {
constexpr int kDot = kFirstFree;
constexpr int kQuery = kFirstFree + 1;
constexpr int kFirstRelation = kFirstFree + 2;
constexpr int kFirstEntity = kFirstRelation + static_cast<int>(kKinRelations);
}  // namespace

std::size_t kinship_vocab(std::size_t n_entities) { return kFirstEntity + n_entities; }

std::size_t kinship_length(std::size_t distractors) { return 1 + 4 * (2 + distractors) + 5; }

std::vector<TaskExample> gen_kinship2hop(RngState& rng, std::size_t n_entities,
                                         std::size_t distractors, std::size_t n) {
  if (n_entities < 3) throw std::invalid_argument("kinship task needs at least 3 entities");
  if (distractors > 0 && n_entities < 5) {
    throw std::invalid_argument("kinship distractors need at least 5 entities");
  }
  std::vector<std::pair<Relation, Relation>> by_label[kKinLabels];
  for (int a = 0; a < static_cast<int>(kKinRelations); ++a)
    for (int b = 0; b < static_cast<int>(kKinRelations); ++b) {
      auto r1 = static_cast<Relation>(a), r2 = static_cast<Relation>(b);
      if (composable(r1, r2)) by_label[static_cast<int>(compose(r1, r2))].emplace_back(r1, r2);
    }
  std::vector<TaskExample> out(n);
  std::vector<int> ent(n_entities);
  for (auto& ex : out) {
    const std::size_t label = rng.index(kKinLabels);
    const auto [r1, r2] = by_label[label][rng.index(by_label[label].size())];
    for (std::size_t i = 0; i < n_entities; ++i) ent[i] = kFirstEntity + static_cast<int>(i);
    // Partial Fisher-Yates: A, B, C first.
    for (std::size_t i = 0; i < 3; ++i) std::swap(ent[i], ent[i + rng.index(n_entities - i)]);
    const int A = ent[0], B = ent[1], C = ent[2];
    std::vector<std::array<int, 3>> facts{{A, kFirstRelation + static_cast<int>(r1), B},
                                          {B, kFirstRelation + static_cast<int>(r2), C}};
    for (std::size_t d = 0; d < distractors; ++d) {
      const std::size_t rest = n_entities - 3;
      const std::size_t i = rng.index(rest), j0 = rng.index(rest - 1);
      const std::size_t j = j0 >= i ? j0 + 1 : j0;
      facts.push_back({ent[3 + i], kFirstRelation + static_cast<int>(rng.index(kKinRelations)),
                       ent[3 + j]});
    }
    for (std::size_t i = facts.size(); i-- > 1;) std::swap(facts[i], facts[rng.index(i + 1)]);
    ex.tokens.push_back(kCls);
    for (const auto& f : facts) {
      ex.tokens.insert(ex.tokens.end(), f.begin(), f.end());
      ex.tokens.push_back(kDot);
    }
    ex.tokens.push_back(kSep);
    const std::size_t seg_start = ex.tokens.size();
    ex.tokens.insert(ex.tokens.end(), {A, kQuery, C, kSep});
    ex.segments.assign(ex.tokens.size(), 0);
    std::fill(ex.segments.begin() + static_cast<std::ptrdiff_t>(seg_start), ex.segments.end(), 1);
    ex.label = static_cast<int>(label);
  }
  return out;
}

std::vector<TaskExample> gen_pairclass(RngState& rng, std::size_t vocab, std::size_t T,
                                       std::size_t n) {
  if (vocab < static_cast<std::size_t>(kFirstFree) + 2) {
    throw std::invalid_argument("pairclass needs vocab >= " + std::to_string(kFirstFree + 2));
  }
  if (T < 5) throw std::invalid_argument("pairclass needs T >= 5");
  const std::size_t k = (T - 3) / 2;
  std::vector<TaskExample> out(n);
  for (auto& ex : out) {
    std::vector<int> s(k);
    for (auto& t : s) t = payload_token(rng, vocab);
    auto s2 = s;
    ex.label = static_cast<int>(rng.index(2));
    if (ex.label == 0) {
      const std::size_t i = rng.index(k);
      const int shift = 1 + static_cast<int>(rng.index(vocab - kFirstFree - 1));
      s2[i] = kFirstFree + (s2[i] - kFirstFree + shift) % static_cast<int>(vocab - kFirstFree);
    }
    ex.tokens.push_back(kCls);
    ex.tokens.insert(ex.tokens.end(), s.begin(), s.end());
    ex.tokens.push_back(kSep);
    ex.segments.assign(ex.tokens.size(), 0);
    ex.tokens.insert(ex.tokens.end(), s2.begin(), s2.end());
    ex.tokens.push_back(kSep);
    ex.segments.resize(ex.tokens.size(), 1);
  }
  return out;
}

atoms::InputBatch make_batch(const std::vector<TaskExample>& examples, std::size_t T) {
  if (examples.empty()) throw std::invalid_argument("make_batch: no examples");
  atoms::InputBatch b;
  b.batch = examples.size();
  b.T = T;
  b.token_ids.assign(b.batch * T, kPad);
  b.seq_ids.assign(b.batch * T, 0);
  b.pad_mask.assign(b.batch * T, 0.0);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.tokens.size() > T) {
      throw std::invalid_argument("example of length " + std::to_string(ex.tokens.size()) +
                                  " exceeds T=" + std::to_string(T));
    }
    for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
      b.token_ids[i * T + t] = ex.tokens[t];
      b.seq_ids[i * T + t] = ex.segments.empty() ? 0 : ex.segments[t];
      b.pad_mask[i * T + t] = 1.0;
    }
    // Padding continues the last segment so distances stay in-segment.
    if (!ex.segments.empty())
      for (std::size_t t = ex.tokens.size(); t < T; ++t) b.seq_ids[i * T + t] = ex.segments.back();
  }
  b.validate();
  return b;
}

}  // namespace folnet::tasks

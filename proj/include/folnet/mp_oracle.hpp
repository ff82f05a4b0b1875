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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "folnet/tensor.hpp"

namespace folnet::mp {

/// Premise indices (0-based) used positively and negated; the rest are ignored.
struct ClausePartition {
  std::size_t M = 0;
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;

  void validate() const;
  std::size_t literals() const { return pos.size() + neg.size(); }
  /// Sign vector W in {-1, 0, +1}^M.
  std::vector<int> signs() const;
  static ClausePartition from_signs(std::span<const int> w);
};

/// Every partition of M premises, 3^M of them, in base-3 order of W.
std::vector<ClausePartition> all_partitions(std::size_t M);

double sigmoid(double z);
double logit(double p);

/// prod_{pos} p_m * prod_{neg} (1 - p_m); probabilities must lie in (0, 1).
double body_prob_exact(std::span<const double> probs, const ClausePartition& part);

/// Sum over all 2^M truth assignments inside the clause's event. M <= 12.
double body_prob_enumerate(std::span<const double> probs, const ClausePartition& part);

/// sigmoid(sum_{pos} v_m - sum_{neg} v_m).
double body_logit_bound(std::span<const double> logits, const ClausePartition& part);

/// <kappa, v> with |kappa_m| <= 1.
double soft_body_logit(std::span<const double> kappa, std::span<const double> logits);

/// E_W[sigmoid(<W, v>)] - sigmoid(<E W, v>) for independent W_m with
/// Pr{+1} = kappa_plus[m], Pr{-1} = kappa_minus[m]; exact over 3^M outcomes.
double concentration_gap(std::span<const double> kappa_plus, std::span<const double> kappa_minus,
                         std::span<const double> logits);

/// Pr{Q = T | C = T} for C = (Q <- P) with a uniform prior on Q.
double implication_exact(double p_true);

/// The same quantity by Bayes' rule over (P, Q) with P independent of C.
double implication_enumerate(double p_true);

/// ln(1 + 2 e^z); z + ln 2 above 30.
double implication_logit(double z);

struct ReluBoundReport {
  bool holds = true;
  double min_gap = 0.0;
  double max_gap = 0.0;
  double gap_at_max_z = 0.0;
};

/// ln(1 + 2 e^z) - max(0, z + ln 2) over a grid.
ReluBoundReport verify_relu_bound(std::span<const double> z_grid);

/// Operator kernels and premises for one arity comparison, batch 1.
/// Layouts match folnet::logic.
struct ArityInputs {
  std::size_t T = 3, H = 2, S = 2;
  Tensor join_k, join_v;    // [1,H,T,T], [1,T,H,S]
  Tensor cjoin_k, cjoin_v;  // [1,T,H,S], [1,H,T,T]
  Tensor mu_k, mu_v;        // [1,H,T,T], [1,S,T,T]
  Tensor assoc_k, assoc_v;  // [1,T,H,S], [1,T,H,S]
  Tensor prod_k, prod_v;    // [1,T,H,S], [1,S,T,T]
  Tensor trans_k, trans_v;  // [1,H,T,T], [1,H,T,T]

  static ArityInputs random(RngState& rng, std::size_t T, std::size_t H, std::size_t S);
  static ArityInputs zeros(std::size_t T, std::size_t H, std::size_t S);
};

struct ArityResult {
  std::string op;
  std::string form;          // UU, UB, BU or BB
  double max_diff = 0.0;     // operator vs unrestricted form under sharing
  double max_abs_out = 0.0;  // magnitude of the unrestricted form's output
};

/// Lifts each operator's kernel into a full unrestricted kernel with the
/// operator's sharing pattern, evaluates the four general forms by loops and
/// compares against the operators. Requires T <= 4 and H, S <= 3.
std::vector<ArityResult> arity_form_check(const ArityInputs& in);

struct PropertyResult {
  std::string name;
  bool pass = true;
  double max_gap = 0.0;
  std::string detail;
};

/// All oracle properties, checked on seeded draws.
std::vector<PropertyResult> verification_report(std::uint64_t seed = 0);
std::string format_report(const std::vector<PropertyResult>& results);

}  // namespace folnet::mp

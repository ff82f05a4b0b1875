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

#include "folnet/mp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "folnet/logic.hpp"

namespace folnet::mp {

namespace {

void check_prob_open(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("probability " + std::to_string(p) + " outside (0, 1)");
  }
}

void check_len(std::size_t n, const ClausePartition& part, const char* what) {
  part.validate();
  if (n != part.M) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(n) +
                                " values for a clause over " + std::to_string(part.M) +
                                " premises");
  }
}

}  // namespace

void ClausePartition::validate() const {
  std::vector<char> seen(M, 0);
  for (const auto* set : {&pos, &neg}) {
    for (std::size_t m : *set) {
      if (m >= M) throw std::invalid_argument("clause index " + std::to_string(m) + " >= M");
      if (seen[m]) throw std::invalid_argument("premise " + std::to_string(m) + " listed twice");
      seen[m] = 1;
    }
  }
}

std::vector<int> ClausePartition::signs() const {
  validate();
  std::vector<int> w(M, 0);
  for (std::size_t m : pos) w[m] = 1;
  for (std::size_t m : neg) w[m] = -1;
  return w;
}

ClausePartition ClausePartition::from_signs(std::span<const int> w) {
  ClausePartition p;
  p.M = w.size();
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (w[m] == 1) {
      p.pos.push_back(m);
    } else if (w[m] == -1) {
      p.neg.push_back(m);
    } else if (w[m] != 0) {
      throw std::invalid_argument("clause sign must be -1, 0 or +1");
    }
  }
  return p;
}

std::vector<ClausePartition> all_partitions(std::size_t M) {
  if (M > 12) throw std::invalid_argument("all_partitions: M > 12");
  std::size_t n = 1;
  for (std::size_t i = 0; i < M; ++i) n *= 3;
  std::vector<ClausePartition> out;
  out.reserve(n);
  std::vector<int> w(M);
  for (std::size_t code = 0; code < n; ++code) {
    std::size_t c = code;
    for (std::size_t m = 0; m < M; ++m, c /= 3) w[m] = static_cast<int>(c % 3) - 1;
    out.push_back(ClausePartition::from_signs(w));
  }
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) {
  check_prob_open(p);
  return std::log(p) - std::log1p(-p);
}

double body_prob_exact(std::span<const double> probs, const ClausePartition& part) {
  check_len(probs.size(), part, "body_prob_exact");
  for (double p : probs) check_prob_open(p);
  const auto w = part.signs();
  double r = 1.0;
  for (std::size_t m = 0; m < part.M; ++m) {
    if (w[m] == 1) r *= probs[m];
    if (w[m] == -1) r *= 1.0 - probs[m];
  }
  return r;
}

double body_prob_enumerate(std::span<const double> probs, const ClausePartition& part) {
  check_len(probs.size(), part, "body_prob_enumerate");
  if (part.M > 12) throw std::invalid_argument("body_prob_enumerate: M > 12");
  for (double p : probs) check_prob_open(p);
  const auto w = part.signs();
  double total = 0.0;
  for (std::uint32_t bits = 0; bits < (1u << part.M); ++bits) {
    double pr = 1.0;
    bool in_event = true;
    for (std::size_t m = 0; m < part.M; ++m) {
      const bool t = (bits >> m) & 1u;
      pr *= t ? probs[m] : 1.0 - probs[m];
      if ((w[m] == 1 && !t) || (w[m] == -1 && t)) in_event = false;
    }
    if (in_event) total += pr;
  }
  return total;
}

double body_logit_bound(std::span<const double> logits, const ClausePartition& part) {
  check_len(logits.size(), part, "body_logit_bound");
  double z = 0.0;
  for (std::size_t m : part.pos) z += logits[m];
  for (std::size_t m : part.neg) z -= logits[m];
  return sigmoid(z);
}

double soft_body_logit(std::span<const double> kappa, std::span<const double> logits) {
  if (kappa.size() != logits.size()) {
    throw std::invalid_argument("soft_body_logit: kappa has " + std::to_string(kappa.size()) +
                                " entries, logits " + std::to_string(logits.size()));
  }
  double z = 0.0;
  for (std::size_t m = 0; m < kappa.size(); ++m) {
    if (std::abs(kappa[m]) > 1.0) throw std::invalid_argument("soft_body_logit: |kappa| > 1");
    z += kappa[m] * logits[m];
  }
  return z;
}

double concentration_gap(std::span<const double> kappa_plus, std::span<const double> kappa_minus,
                         std::span<const double> logits) {
  const std::size_t M = logits.size();
  if (kappa_plus.size() != M || kappa_minus.size() != M) {
    throw std::invalid_argument("concentration_gap: length mismatch");
  }
  std::vector<double> kappa(M);
  for (std::size_t m = 0; m < M; ++m) {
    if (kappa_plus[m] < 0 || kappa_minus[m] < 0 || kappa_plus[m] + kappa_minus[m] > 1.0) {
      throw std::invalid_argument("concentration_gap: invalid sign distribution");
    }
    kappa[m] = kappa_plus[m] - kappa_minus[m];
  }
  double expect = 0.0;
  for (const auto& part : all_partitions(M)) {
    const auto w = part.signs();
    double pr = 1.0;
    for (std::size_t m = 0; m < M; ++m) {
      pr *= w[m] == 1 ? kappa_plus[m]
                      : (w[m] == -1 ? kappa_minus[m] : 1.0 - kappa_plus[m] - kappa_minus[m]);
    }
    if (pr != 0.0) expect += pr * body_logit_bound(logits, part);
  }
  return expect - sigmoid(soft_body_logit(kappa, logits));
}

double implication_exact(double p_true) {
  if (!(p_true >= 0.0 && p_true <= 1.0)) {
    throw std::domain_error("implication_exact: probability outside [0, 1]");
  }
  return 0.5 + 0.5 * p_true;
}

double implication_enumerate(double p_true) {
  if (!(p_true >= 0.0 && p_true <= 1.0)) {
    throw std::domain_error("implication_enumerate: probability outside [0, 1]");
  }
  auto clause_true = [](bool p, bool q) { return (p && !q) ? 0.0 : 1.0; };
  double out = 0.0;
  for (bool p : {false, true}) {
    double num = 0.0, den = 0.0;
    for (bool q : {false, true}) {
      const double joint = 0.5 * clause_true(p, q);
      den += joint;
      if (q) num += joint;
    }
    out += (num / den) * (p ? p_true : 1.0 - p_true);
  }
  return out;
}

double implication_logit(double z) {
  if (z > 30.0) return z + std::numbers::ln2;
  return std::log1p(2.0 * std::exp(z));
}

ReluBoundReport verify_relu_bound(std::span<const double> z_grid) {
  ReluBoundReport r;
  if (z_grid.empty()) return r;
  r.min_gap = std::numeric_limits<double>::infinity();
  double zmax = -std::numeric_limits<double>::infinity();
  for (double z : z_grid) {
    const double gap = implication_logit(z) - std::max(0.0, z + std::numbers::ln2);
    r.min_gap = std::min(r.min_gap, gap);
    r.max_gap = std::max(r.max_gap, gap);
    if (gap < 0.0) r.holds = false;
    if (z > zmax) {
      zmax = z;
      r.gap_at_max_z = gap;
    }
  }
  return r;
}

ArityInputs ArityInputs::random(RngState& rng, std::size_t T, std::size_t H, std::size_t S) {
  ArityInputs in = zeros(T, H, S);
  for (Tensor* t : {&in.join_k, &in.join_v, &in.cjoin_k, &in.cjoin_v, &in.mu_k, &in.mu_v,
                    &in.assoc_k, &in.assoc_v, &in.prod_k, &in.prod_v, &in.trans_k, &in.trans_v}) {
    for (auto& v : t->mutable_values()) v = rng.normal(0.0, 1.0);
  }
  return in;
}

ArityInputs ArityInputs::zeros(std::size_t T, std::size_t H, std::size_t S) {
  ArityInputs in;
  in.T = T;
  in.H = H;
  in.S = S;
  in.join_k = Tensor::zeros({1, H, T, T});
  in.join_v = Tensor::zeros({1, T, H, S});
  in.cjoin_k = Tensor::zeros({1, T, H, S});
  in.cjoin_v = Tensor::zeros({1, H, T, T});
  in.mu_k = Tensor::zeros({1, H, T, T});
  in.mu_v = Tensor::zeros({1, S, T, T});
  in.assoc_k = Tensor::zeros({1, T, H, S});
  in.assoc_v = Tensor::zeros({1, T, H, S});
  in.prod_k = Tensor::zeros({1, T, H, S});
  in.prod_v = Tensor::zeros({1, S, T, T});
  in.trans_k = Tensor::zeros({1, H, T, T});
  in.trans_v = Tensor::zeros({1, H, T, T});
  return in;
}

namespace {

// Unrestricted forms. Kernels are dense row-major blocks:
//   UU [x][a][i][j]   UB [x][a][b][i][j]   BU [x][y][a][i][j]   BB [x][y][a][b][i][j]
// Unary premises are [a][j], binary premises [a][b][j]; outputs [x][i] or [x][y][i].
struct Forms {
  std::size_t T;

  std::vector<double> uu(const std::vector<double>& K, const std::vector<double>& v,
                         std::size_t Di, std::size_t Dj) const {
    std::vector<double> u(T * Di, 0.0);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t a = 0; a < T; ++a)
        for (std::size_t i = 0; i < Di; ++i)
          for (std::size_t j = 0; j < Dj; ++j)
            u[x * Di + i] += K[((x * T + a) * Di + i) * Dj + j] * v[a * Dj + j];
    return u;
  }
  std::vector<double> ub(const std::vector<double>& K, const std::vector<double>& v,
                         std::size_t Di, std::size_t Dj) const {
    std::vector<double> u(T * Di, 0.0);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b)
          for (std::size_t i = 0; i < Di; ++i)
            for (std::size_t j = 0; j < Dj; ++j)
              u[x * Di + i] +=
                  K[(((x * T + a) * T + b) * Di + i) * Dj + j] * v[(a * T + b) * Dj + j];
    return u;
  }
  std::vector<double> bu(const std::vector<double>& K, const std::vector<double>& v,
                         std::size_t Di, std::size_t Dj) const {
    std::vector<double> u(T * T * Di, 0.0);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t y = 0; y < T; ++y)
        for (std::size_t a = 0; a < T; ++a)
          for (std::size_t i = 0; i < Di; ++i)
            for (std::size_t j = 0; j < Dj; ++j)
              u[(x * T + y) * Di + i] +=
                  K[(((x * T + y) * T + a) * Di + i) * Dj + j] * v[a * Dj + j];
    return u;
  }
  std::vector<double> bb(const std::vector<double>& K, const std::vector<double>& v,
                         std::size_t Di, std::size_t Dj) const {
    std::vector<double> u(T * T * Di, 0.0);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t y = 0; y < T; ++y)
        for (std::size_t a = 0; a < T; ++a)
          for (std::size_t b = 0; b < T; ++b)
            for (std::size_t i = 0; i < Di; ++i)
              for (std::size_t j = 0; j < Dj; ++j)
                u[(x * T + y) * Di + i] +=
                    K[((((x * T + y) * T + a) * T + b) * Di + i) * Dj + j] *
                    v[(a * T + b) * Dj + j];
    return u;
  }
};

ArityResult compare(const std::string& op, const std::string& form, const std::vector<double>& full,
                    const std::vector<double>& from_op) {
  ArityResult r{op, form, 0.0, 0.0};
  for (std::size_t i = 0; i < full.size(); ++i) {
    r.max_diff = std::max(r.max_diff, std::abs(full[i] - from_op[i]));
    r.max_abs_out = std::max(r.max_abs_out, std::abs(full[i]));
  }
  return r;
}

}  // namespace

std::vector<ArityResult> arity_form_check(const ArityInputs& in) {
  const std::size_t T = in.T, H = in.H, S = in.S, D1 = H * S;
  if (T == 0 || T > 4 || H == 0 || H > 3 || S == 0 || S > 3) {
    throw std::invalid_argument("arity_form_check: needs 1 <= T <= 4 and 1 <= H, S <= 3");
  }
  Forms f{T};
  std::vector<ArityResult> out;
  auto unary_out = [&](const Tensor& o) {  // [1,X,H,S] -> [x][(h,s)]
    return std::vector<double>(o.values().begin(), o.values().end());
  };
  auto binary_out = [&](const Tensor& o) {  // [1,H,X,Y] -> [x][y][h]
    std::vector<double> r(T * T * H);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t x = 0; x < T; ++x)
        for (std::size_t y = 0; y < T; ++y) r[(x * T + y) * H + h] = o.at({0, h, x, y});
    return r;
  };

  {  // join: K_UU(x,a)[(h,s),(h',s')] = K_h(x,a) when (h,s) = (h',s')
    std::vector<double> K(T * T * D1 * D1, 0.0), v(T * D1);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t a = 0; a < T; ++a)
        for (std::size_t i = 0; i < D1; ++i)
          K[((x * T + a) * D1 + i) * D1 + i] = in.join_k.at({0, i / S, x, a});
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t i = 0; i < D1; ++i) v[a * D1 + i] = in.join_v.at({0, a, i / S, i % S});
    out.push_back(compare("join", "UU", f.uu(K, v, D1, D1),
                          unary_out(logic::op_join(in.join_k, in.join_v))));
  }
  {  // cjoin: K_UB(x,a,b)[(h,s),h'] = [a = x][h = h'] K_hs(b)
    std::vector<double> K(T * T * T * D1 * H, 0.0), v(T * T * H);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t b = 0; b < T; ++b)
        for (std::size_t i = 0; i < D1; ++i)
          K[(((x * T + x) * T + b) * D1 + i) * H + i / S] = in.cjoin_k.at({0, b, i / S, i % S});
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        for (std::size_t h = 0; h < H; ++h) v[(a * T + b) * H + h] = in.cjoin_v.at({0, h, a, b});
    out.push_back(compare("cjoin", "UB", f.ub(K, v, D1, H),
                          unary_out(logic::op_cjoin(in.cjoin_k, in.cjoin_v))));
  }
  {  // mu: K_UB(x,a,b)[(h,s),s'] = [a = x][s = s'] K_h(x,b)
    std::vector<double> K(T * T * T * D1 * S, 0.0), v(T * T * S);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t b = 0; b < T; ++b)
        for (std::size_t i = 0; i < D1; ++i)
          K[(((x * T + x) * T + b) * D1 + i) * S + i % S] = in.mu_k.at({0, i / S, x, b});
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        for (std::size_t s = 0; s < S; ++s) v[(a * T + b) * S + s] = in.mu_v.at({0, s, a, b});
    out.push_back(
        compare("mu", "UB", f.ub(K, v, D1, S), unary_out(logic::op_mu(in.mu_k, in.mu_v))));
  }
  {  // assoc: K_BU(x,y,a)[h,(h',s)] = [a = y][h = h'] K_hs(x) / sqrt(S)
    const double scale = 1.0 / std::sqrt(static_cast<double>(S));
    std::vector<double> K(T * T * T * H * D1, 0.0), v(T * D1);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t y = 0; y < T; ++y)
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t s = 0; s < S; ++s)
            K[(((x * T + y) * T + y) * H + h) * D1 + h * S + s] =
                in.assoc_k.at({0, x, h, s}) * scale;
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t i = 0; i < D1; ++i) v[a * D1 + i] = in.assoc_v.at({0, a, i / S, i % S});
    out.push_back(compare("assoc", "BU", f.bu(K, v, H, D1),
                          binary_out(logic::op_assoc(in.assoc_k, in.assoc_v))));
  }
  {  // prod: K_BB(x,y,a,b)[h,w] = [a = x][b = y] K_hw(x)
    std::vector<double> K(T * T * T * T * H * S, 0.0), v(T * T * S);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t y = 0; y < T; ++y)
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t w = 0; w < S; ++w)
            K[(((((x * T + y) * T + x) * T + y) * H + h) * S) + w] = in.prod_k.at({0, x, h, w});
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        for (std::size_t w = 0; w < S; ++w) v[(a * T + b) * S + w] = in.prod_v.at({0, w, a, b});
    out.push_back(compare("prod", "BB", f.bb(K, v, H, S),
                          binary_out(logic::op_prod(in.prod_k, in.prod_v))));
  }
  {  // trans: K_BB(x,y,a,b)[h,h'] = [b = y][h = h'] K_h(x,a)
    std::vector<double> K(T * T * T * T * H * H, 0.0), v(T * T * H);
    for (std::size_t x = 0; x < T; ++x)
      for (std::size_t y = 0; y < T; ++y)
        for (std::size_t a = 0; a < T; ++a)
          for (std::size_t h = 0; h < H; ++h)
            K[(((((x * T + y) * T + a) * T + y) * H + h) * H) + h] = in.trans_k.at({0, h, x, a});
    for (std::size_t a = 0; a < T; ++a)
      for (std::size_t b = 0; b < T; ++b)
        for (std::size_t h = 0; h < H; ++h) v[(a * T + b) * H + h] = in.trans_v.at({0, h, a, b});
    out.push_back(compare("trans", "BB", f.bb(K, v, H, H),
                          binary_out(logic::op_trans(in.trans_k, in.trans_v))));
  }
  return out;
}

std::vector<PropertyResult> verification_report(std::uint64_t seed) {
  std::vector<PropertyResult> res;
  RngState rng(seed);
  auto draw_probs = [&](std::size_t M) {
    std::vector<double> p(M);
    for (auto& x : p) x = 0.01 + 0.98 * rng.uniform();
    return p;
  };

  {
    PropertyResult r{"product formula = 2^M enumeration (all partitions, M <= 4)", true, 0.0, ""};
    std::size_t count = 0;
    for (std::size_t M = 0; M <= 4; ++M)
      for (int trial = 0; trial < 5; ++trial) {
        auto p = draw_probs(M);
        for (const auto& part : all_partitions(M)) {
          r.max_gap = std::max(r.max_gap,
                               std::abs(body_prob_exact(p, part) - body_prob_enumerate(p, part)));
          ++count;
        }
      }
    r.pass = r.max_gap <= 1e-12;
    r.detail = std::to_string(count) + " clause evaluations";
    res.push_back(r);
  }
  {
    PropertyResult r{"logit bound >= exact, tight on single literals", true, 0.0, ""};
    double worst_violation = 0.0, worst_tight = 0.0, min_slack_multi = 1.0;
    for (int trial = 0; trial < 10000; ++trial) {
      const std::size_t M = 1 + rng.index(6);
      auto p = draw_probs(M);
      std::vector<int> w(M);
      do {
        for (auto& x : w) x = static_cast<int>(rng.index(3)) - 1;
      } while (std::all_of(w.begin(), w.end(), [](int x) { return x == 0; }));
      auto part = ClausePartition::from_signs(w);
      std::vector<double> v(M);
      for (std::size_t m = 0; m < M; ++m) v[m] = logit(p[m]);
      const double slack = body_logit_bound(v, part) - body_prob_exact(p, part);
      worst_violation = std::max(worst_violation, -slack);
      if (part.literals() == 1) {
        worst_tight = std::max(worst_tight, std::abs(slack));
      } else {
        min_slack_multi = std::min(min_slack_multi, slack);
      }
    }
    r.pass = worst_violation <= 1e-12 && worst_tight <= 1e-12 && min_slack_multi > 1e-12;
    r.max_gap = std::max(worst_violation, worst_tight);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "10000 draws; max violation %.3g, max single-literal gap %.3g, min multi-literal "
                  "slack %.3g",
                  worst_violation, worst_tight, min_slack_multi);
    r.detail = buf;
    res.push_back(r);
  }
  {
    PropertyResult r{"negation is a logit sign flip", true, 0.0, ""};
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t M = 1 + rng.index(5);
      auto p = draw_probs(M);
      std::vector<int> w(M);
      for (auto& x : w) x = static_cast<int>(rng.index(3)) - 1;
      const std::size_t m = rng.index(M);
      w[m] = 1;
      auto flipped = w;
      flipped[m] = -1;
      auto q = p;
      q[m] = 1.0 - p[m];
      const double a = body_prob_exact(p, ClausePartition::from_signs(flipped));
      const double b = body_prob_exact(q, ClausePartition::from_signs(w));
      r.max_gap = std::max(r.max_gap, std::abs(a - b));
    }
    r.pass = r.max_gap == 0.0;
    res.push_back(r);
  }
  {
    PropertyResult r{"hard kappa reproduces the logit bound", true, 0.0, ""};
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t M = 1 + rng.index(6);
      std::vector<int> w(M);
      std::vector<double> kappa(M), v(M);
      for (std::size_t m = 0; m < M; ++m) {
        w[m] = static_cast<int>(rng.index(3)) - 1;
        kappa[m] = w[m];
        v[m] = rng.normal(0.0, 3.0);
      }
      r.max_gap = std::max(r.max_gap, std::abs(sigmoid(soft_body_logit(kappa, v)) -
                                               body_logit_bound(v, ClausePartition::from_signs(w))));
    }
    r.pass = r.max_gap <= 1e-12;
    res.push_back(r);
  }
  {
    PropertyResult r{"implication: closed form = Bayes enumeration", true, 0.0, ""};
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      r.max_gap = std::max(r.max_gap, std::abs(implication_exact(p) - implication_enumerate(p)));
    }
    r.pass = r.max_gap <= 1e-12;
    res.push_back(r);
  }
  {
    PropertyResult r{"activation identity on z in [-30, 30]", true, 0.0, ""};
    for (int i = 0; i <= 60000; ++i) {
      const double z = -30.0 + i * 1e-3;
      r.max_gap = std::max(
          r.max_gap, std::abs(sigmoid(implication_logit(z)) - implication_exact(sigmoid(z))));
    }
    r.pass = r.max_gap <= 1e-12;
    res.push_back(r);
  }
  {
    std::vector<double> grid;
    for (int i = 0; i <= 400000; ++i) grid.push_back(-20.0 + i * 1e-4);
    auto rb = verify_relu_bound(grid);
    PropertyResult r{"ln(1+2e^z) >= relu(z + ln 2) on [-20, 20]", rb.holds, rb.max_gap, ""};
    char buf[128];
    std::snprintf(buf, sizeof buf, "min gap %.3g, gap at z=20 %.3g", rb.min_gap, rb.gap_at_max_z);
    r.detail = buf;
    res.push_back(r);
  }
  {
    PropertyResult r{"operators equal unrestricted forms under kernel sharing", true, 0.0, ""};
    for (int trial = 0; trial < 20; ++trial) {
      auto in = ArityInputs::random(rng, 1 + rng.index(4), 1 + rng.index(3), 1 + rng.index(3));
      for (const auto& a : arity_form_check(in)) r.max_gap = std::max(r.max_gap, a.max_diff);
    }
    auto z = arity_form_check(ArityInputs::zeros(3, 2, 2));
    double zero_out = 0.0;
    for (const auto& a : z) zero_out = std::max(zero_out, a.max_abs_out);
    r.pass = r.max_gap <= 1e-12 && zero_out == 0.0;
    r.detail = "20 random cases over join/cjoin/mu/assoc/prod/trans";
    res.push_back(r);
  }
  {
    // Informational: no tolerance is asserted.
    PropertyResult r{"soft-kappa approximation gap (informational)", true, 0.0, ""};
    double concentrated = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t M = 1 + rng.index(4);
      std::vector<double> kp(M), km(M), kp2(M), km2(M), v(M);
      for (std::size_t m = 0; m < M; ++m) {
        const double a = rng.uniform(), b = rng.uniform() * (1.0 - a);
        kp[m] = a;
        km[m] = b;
        // Same mode, 95% of the mass on it.
        const bool plus = a >= b;
        kp2[m] = plus ? 0.95 : 0.025;
        km2[m] = plus ? 0.025 : 0.95;
        v[m] = rng.normal(0.0, 2.0);
      }
      r.max_gap = std::max(r.max_gap, std::abs(concentration_gap(kp, km, v)));
      concentrated = std::max(concentrated, std::abs(concentration_gap(kp2, km2, v)));
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |gap| diffuse %.3g, concentrated %.3g", r.max_gap,
                  concentrated);
    r.detail = buf;
    res.push_back(r);
  }
  return res;
}

std::string format_report(const std::vector<PropertyResult>& results) {
  std::ostringstream os;
  for (const auto& r : results) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", r.max_gap);
    os << (r.pass ? "PASS " : "FAIL ") << r.name << "  max_gap=" << buf;
    if (!r.detail.empty()) os << "  (" << r.detail << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace folnet::mp

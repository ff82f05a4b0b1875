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

#include "folnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "folnet/kernels.hpp"

namespace folnet {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kMaskedLogit = -1e9;

std::vector<std::size_t> row_major_strides(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

// Right-aligned broadcast of two shapes.
Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t nd = std::max(a.size(), b.size());
  Shape out(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const std::size_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    const std::size_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) +
                       " with " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `s` viewed in the rank of `out`, zero along broadcast axes.
std::vector<std::size_t> broadcast_strides(const Shape& s, const Shape& out) {
  const std::size_t nd = out.size();
  const auto st = row_major_strides(s);
  std::vector<std::size_t> r(nd, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t oi = i + (nd - s.size());
    r[oi] = s[i] == 1 ? 0 : st[i];
  }
  return r;
}

// Offsets into `s` for every element of `out`, in row-major order.
std::vector<std::size_t> broadcast_offsets(const Shape& s, const Shape& out) {
  const auto st = broadcast_strides(s, out);
  const std::size_t n = numel_of(out);
  std::vector<std::size_t> offs(n);
  const std::size_t nd = out.size();
  if (nd == 0) {
    if (n) offs[0] = 0;
    return offs;
  }
  std::vector<std::size_t> idx(nd, 0);
  std::size_t cur = 0;
  for (std::size_t o = 0; o < n; ++o) {
    offs[o] = cur;
    for (std::size_t i = nd; i-- > 0;) {
      ++idx[i];
      cur += st[i];
      if (idx[i] < out[i]) break;
      cur -= st[i] * idx[i];
      idx[i] = 0;
    }
  }
  return offs;
}

enum class BinOp { kAdd, kSub, kMul, kDiv };

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
  const Shape out = broadcast_shape(a.shape(), b.shape(), name);
  const std::size_t n = numel_of(out);
  const bool same_a = a.shape() == out;
  const bool same_b = b.shape() == out;
  auto ia = std::make_shared<std::vector<std::size_t>>(
      same_a ? std::vector<std::size_t>{} : broadcast_offsets(a.shape(), out));
  auto ib = std::make_shared<std::vector<std::size_t>>(
      same_b ? std::vector<std::size_t>{} : broadcast_offsets(b.shape(), out));
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> y(n);
  for (std::size_t o = 0; o < n; ++o) {
    const double x1 = av[same_a ? o : (*ia)[o]];
    const double x2 = bv[same_b ? o : (*ib)[o]];
    switch (op) {
      case BinOp::kAdd: y[o] = x1 + x2; break;
      case BinOp::kSub: y[o] = x1 - x2; break;
      case BinOp::kMul: y[o] = x1 * x2; break;
      case BinOp::kDiv: y[o] = x1 / x2; break;
    }
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(out, std::move(y), {a, b},
                     [ai, bi, ia, ib, same_a, same_b, op, n](std::span<const double> g) {
                       const auto& A = ai->values;
                       const auto& B = bi->values;
                       if (ai->requires_grad) {
                         auto ga = ai->grad_buffer();
                         for (std::size_t o = 0; o < n; ++o) {
                           const std::size_t ka = same_a ? o : (*ia)[o];
                           const std::size_t kb = same_b ? o : (*ib)[o];
                           double d = g[o];
                           if (op == BinOp::kMul) d *= B[kb];
                           if (op == BinOp::kDiv) d /= B[kb];
                           ga[ka] += d;
                         }
                       }
                       if (bi->requires_grad) {
                         auto gb = bi->grad_buffer();
                         for (std::size_t o = 0; o < n; ++o) {
                           const std::size_t ka = same_a ? o : (*ia)[o];
                           const std::size_t kb = same_b ? o : (*ib)[o];
                           double d = g[o];
                           switch (op) {
                             case BinOp::kAdd: break;
                             case BinOp::kSub: d = -d; break;
                             case BinOp::kMul: d *= A[ka]; break;
                             case BinOp::kDiv: d *= -A[ka] / (B[kb] * B[kb]); break;
                           }
                           gb[kb] += d;
                         }
                       }
                     });
}

void rowwise_gemm(const double* x, const double* w, double* y, std::size_t rows,
                  std::size_t k, std::size_t n, bool trans_w, bool accumulate) {
  const std::size_t zero[] = {0};
  kernels::GemmBatch g{rows, k, n, false, trans_w, zero, zero, zero, accumulate, true};
  kernels::gemm_batched(x, w, y, g);
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "log1p2exp") return Activation::kLog1p2Exp;
  if (name == "relu_shift_ln2") return Activation::kReluShiftLn2;
  if (name == "tanh") return Activation::kTanh;
  if (name == "exp") return Activation::kExp;
  if (name == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown elementwise function: " + std::string(name));
}

double activation_value(Activation fn, double x) {
  switch (fn) {
    case Activation::kGelu: {
      constexpr double c = 0.79788456080286535588;  // sqrt(2/pi)
      return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
    }
    case Activation::kSigmoid:
      if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
      return std::exp(x) / (1.0 + std::exp(x));
    case Activation::kLog1p2Exp:
      // Above 30 the correction log1p(e^-z / 2) is below 5e-14.
      if (x > 30.0) return x + kLn2;
      return std::log1p(2.0 * std::exp(x));
    case Activation::kReluShiftLn2:
      return std::max(0.0, x + kLn2);
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kExp:
      return std::exp(x);
    case Activation::kRelu:
      return std::max(0.0, x);
  }
  return 0.0;
}

double activation_derivative(Activation fn, double x) {
  switch (fn) {
    case Activation::kGelu: {
      constexpr double c = 0.79788456080286535588;
      const double u = c * (x + 0.044715 * x * x * x);
      const double t = std::tanh(u);
      const double du = c * (1.0 + 3.0 * 0.044715 * x * x);
      return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
    }
    case Activation::kSigmoid: {
      const double s = activation_value(Activation::kSigmoid, x);
      return s * (1.0 - s);
    }
    case Activation::kLog1p2Exp:
      // d/dz ln(1 + 2e^z) = sigmoid(z + ln 2)
      return activation_value(Activation::kSigmoid, x + kLn2);
    case Activation::kReluShiftLn2:
      return x + kLn2 > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kExp:
      return std::exp(x);
    case Activation::kRelu:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::kMul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::kDiv, "div"); }

Tensor scale(const Tensor& a, double s) {
  std::vector<double> y(a.values().begin(), a.values().end());
  for (auto& v : y) v *= s;
  auto ai = a.impl();
  return make_result(a.shape(), std::move(y), {a}, [ai, s](std::span<const double> g) {
    auto ga = ai->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Tensor sum(const Tensor& a) {
  auto v = a.values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  auto ai = a.impl();
  return make_result({}, {s}, {a}, [ai](std::span<const double> g) {
    auto ga = ai->grad_buffer();
    for (auto& x : ga) x += g[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel_of(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> y(a.values().begin(), a.values().end());
  auto ai = a.impl();
  return make_result(std::move(shape), std::move(y), {a},
                     [ai](std::span<const double> g) { ai->accumulate(g); });
}

Tensor permute(const Tensor& a, std::vector<std::size_t> perm) {
  const Shape& s = a.shape();
  if (perm.size() != s.size()) {
    throw ShapeError("permute: rank " + std::to_string(s.size()) + " vs perm of " +
                     std::to_string(perm.size()));
  }
  std::vector<bool> used(perm.size(), false);
  for (auto p : perm) {
    if (p >= perm.size() || used[p]) throw ShapeError("permute: invalid permutation");
    used[p] = true;
  }
  Shape out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[perm[i]];
  std::vector<double> y(a.numel());
  kernels::permute(a.values().data(), y.data(), s, perm);
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  auto ai = a.impl();
  return make_result(out, std::move(y), {a},
                     [ai, inv, out](std::span<const double> g) {
                       std::vector<double> back(g.size());
                       kernels::permute(g.data(), back.data(), out, inv);
                       ai->accumulate(back);
                     });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  const std::size_t ax = normalize_axis(axis, s0.size());
  Shape out = s0;
  out[ax] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != ax && s[i] != s0[i]) {
        throw ShapeError("concat: " + shape_str(s) + " vs " + shape_str(s0));
      }
    }
    out[ax] += s[ax];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= out[i];
  for (std::size_t i = ax + 1; i < out.size(); ++i) inner *= out[i];
  std::vector<double> y(numel_of(out));
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.shape()[ax] * inner);
  const std::size_t row = out[ax] * inner;
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.data() + o * widths[k], widths[k], y.data() + o * row + col);
    }
    col += widths[k];
  }
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  return make_result(out, std::move(y), parts,
                     [impls, widths, outer, row](std::span<const double> g) {
                       std::size_t c = 0;
                       for (std::size_t k = 0; k < impls.size(); ++k) {
                         if (impls[k]->requires_grad) {
                           auto gk = impls[k]->grad_buffer();
                           for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t j = 0; j < widths[k]; ++j) {
                               gk[o * widths[k] + j] += g[o * row + c + j];
                             }
                           }
                         }
                         c += widths[k];
                       }
                     });
}

Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t length) {
  const Shape& s = a.shape();
  const std::size_t ax = normalize_axis(axis, s.size());
  if (start + length > s[ax]) {
    throw ShapeError("slice: [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") out of range for axis of " +
                     std::to_string(s[ax]));
  }
  Shape out = s;
  out[ax] = length;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= s[i];
  for (std::size_t i = ax + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t in_row = s[ax] * inner;
  const std::size_t out_row = length * inner;
  const std::size_t off = start * inner;
  std::vector<double> y(numel_of(out));
  auto v = a.values();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(v.data() + o * in_row + off, out_row, y.data() + o * out_row);
  }
  auto ai = a.impl();
  return make_result(out, std::move(y), {a},
                     [ai, outer, in_row, out_row, off](std::span<const double> g) {
                       auto ga = ai->grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t j = 0; j < out_row; ++j) {
                           ga[o * in_row + off + j] += g[o * out_row + j];
                         }
                       }
                     });
}

Tensor batched_matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2 || sa[sa.size() - 1] != sb[sb.size() - 2]) {
    throw ShapeError("batched_matmul: cannot contract " + shape_str(sa) + " with " +
                     shape_str(sb));
  }
  const std::size_t m = sa[sa.size() - 2], k = sa.back(), n = sb.back();
  const Shape la(sa.begin(), sa.end() - 2);
  const Shape lb(sb.begin(), sb.end() - 2);
  Shape lead;
  try {
    lead = broadcast_shape(la, lb, "batched_matmul");
  } catch (const ShapeError&) {
    throw ShapeError("batched_matmul: leading axes of " + shape_str(sa) + " and " +
                     shape_str(sb) + " do not broadcast");
  }
  const std::size_t count = numel_of(lead);
  auto a_off = std::make_shared<std::vector<std::size_t>>(broadcast_offsets(la, lead));
  auto b_off = std::make_shared<std::vector<std::size_t>>(broadcast_offsets(lb, lead));
  auto c_off = std::make_shared<std::vector<std::size_t>>(count);
  for (std::size_t i = 0; i < count; ++i) {
    (*a_off)[i] *= m * k;
    (*b_off)[i] *= k * n;
    (*c_off)[i] = i * m * n;
  }
  Shape out = lead;
  out.push_back(m);
  out.push_back(n);
  std::vector<double> y(count * m * n);
  kernels::GemmBatch g{m, k, n, false, false, *a_off, *b_off, *c_off, false, true};
  kernels::gemm_batched(a.values().data(), b.values().data(), y.data(), g);
  const bool a_bcast = numel_of(la) != count;
  const bool b_bcast = numel_of(lb) != count;
  auto ai = a.impl();
  auto bi = b.impl();
  return make_result(
      out, std::move(y), {a, b},
      [ai, bi, a_off, b_off, c_off, m, k, n, a_bcast, b_bcast](std::span<const double> gy) {
        if (ai->requires_grad) {
          // dA = dC * B^T
          auto ga = ai->grad_buffer();
          kernels::GemmBatch gg{m, n, k, false, true, *c_off, *b_off, *a_off, true,
                                !a_bcast};
          kernels::gemm_batched(gy.data(), bi->values.data(), ga.data(), gg);
        }
        if (bi->requires_grad) {
          // dB = A^T * dC
          auto gb = bi->grad_buffer();
          kernels::GemmBatch gg{k, m, n, true, false, *a_off, *c_off, *b_off, true,
                                !b_bcast};
          kernels::gemm_batched(ai->values.data(), gy.data(), gb.data(), gg);
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.empty() || sw.size() != 2 || sx.back() != sw[0]) {
    throw ShapeError("linear: input " + shape_str(sx) + " vs weight " + shape_str(sw));
  }
  const std::size_t din = sw[0], dout = sw[1];
  if (b && (b->ndim() != 1 || b->dim(0) != dout)) {
    throw ShapeError("linear: bias " + shape_str(b->shape()) + " vs output width " +
                     std::to_string(dout));
  }
  const std::size_t rows = x.numel() / din;
  Shape out = sx;
  out.back() = dout;
  std::vector<double> y(rows * dout, 0.0);
  if (b) {
    auto bv = b->values();
    for (std::size_t r = 0; r < rows; ++r) std::copy(bv.begin(), bv.end(), y.begin() + r * dout);
  }
  rowwise_gemm(x.values().data(), w.values().data(), y.data(), rows, din, dout, false, true);
  auto xi = x.impl();
  auto wi = w.impl();
  auto bi = b ? b->impl() : nullptr;
  std::vector<Tensor> parents{x, w};
  if (b) parents.push_back(*b);
  return make_result(out, std::move(y), parents,
                     [xi, wi, bi, rows, din, dout](std::span<const double> g) {
                       if (xi->requires_grad) {
                         auto gx = xi->grad_buffer();
                         rowwise_gemm(g.data(), wi->values.data(), gx.data(), rows, dout,
                                      din, true, true);
                       }
                       if (wi->requires_grad) {
                         auto gw = wi->grad_buffer();
                         const std::size_t z[] = {0};
                         kernels::GemmBatch gg{din, rows, dout, true, false, z, z, z, true, true};
                         kernels::gemm_batched(xi->values.data(), g.data(), gw.data(), gg);
                       }
                       if (bi && bi->requires_grad) {
                         auto gb = bi->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t j = 0; j < dout; ++j) gb[j] += g[r * dout + j];
                         }
                       }
                     });
}

Tensor softmax_axis(const Tensor& x, int axis) {
  const Shape& s = x.shape();
  const std::size_t ax = normalize_axis(axis, s.size());
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= s[i];
  for (std::size_t i = ax + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[ax];
  std::vector<double> y(x.numel());
  auto xv = x.values();
  if (inner == 1) {
    kernels::softmax_rows(xv.data(), y.data(), outer, len);
  } else {
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        double mx = xv[base];
        for (std::size_t a = 1; a < len; ++a) mx = std::max(mx, xv[base + a * inner]);
        double z = 0.0;
        for (std::size_t a = 0; a < len; ++a) {
          y[base + a * inner] = std::exp(xv[base + a * inner] - mx);
          z += y[base + a * inner];
        }
        for (std::size_t a = 0; a < len; ++a) y[base + a * inner] /= z;
      }
    }
  }
  auto yv = std::make_shared<std::vector<double>>(y);
  auto xi = x.impl();
  return make_result(s, std::move(y), {x},
                     [xi, yv, outer, inner, len](std::span<const double> g) {
                       auto gx = xi->grad_buffer();
                       const auto& Y = *yv;
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t i = 0; i < inner; ++i) {
                           const std::size_t base = o * len * inner + i;
                           double dot = 0.0;
                           for (std::size_t a = 0; a < len; ++a) {
                             dot += g[base + a * inner] * Y[base + a * inner];
                           }
                           for (std::size_t a = 0; a < len; ++a) {
                             const std::size_t p = base + a * inner;
                             gx[p] += Y[p] * (g[p] - dot);
                           }
                         }
                       }
                     });
}

Tensor masked_softmax(const Tensor& x, const Tensor& mask) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("masked_softmax: scalar input");
  if (broadcast_shape(s, mask.shape(), "masked_softmax") != s) {
    throw ShapeError("masked_softmax: mask " + shape_str(mask.shape()) +
                     " does not broadcast to " + shape_str(s));
  }
  const std::size_t n = x.numel();
  const std::size_t len = s.back();
  const std::size_t rows = n / len;
  const auto offs = mask.shape() == s ? std::vector<std::size_t>{}
                                      : broadcast_offsets(mask.shape(), s);
  auto mv = mask.values();
  auto xv = x.values();
  std::vector<double> z(n);
  std::vector<double> keep(n);
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = mv[offs.empty() ? i : offs[i]] != 0.0 ? 1.0 : 0.0;
    z[i] = keep[i] != 0.0 ? xv[i] : kMaskedLogit;
  }
  std::vector<double> y(n);
  kernels::softmax_rows(z.data(), y.data(), rows, len);
  for (std::size_t i = 0; i < n; ++i) y[i] *= keep[i];
  auto yv = std::make_shared<std::vector<double>>(y);
  auto xi = x.impl();
  return make_result(s, std::move(y), {x}, [xi, yv, rows, len](std::span<const double> g) {
    auto gx = xi->grad_buffer();
    const auto& Y = *yv;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * len;
      double dot = 0.0;
      for (std::size_t a = 0; a < len; ++a) dot += g[base + a] * Y[base + a];
      for (std::size_t a = 0; a < len; ++a) {
        gx[base + a] += Y[base + a] * (g[base + a] - dot);
      }
    }
  });
}

Tensor elementwise(const Tensor& x, Activation fn) {
  auto xv = x.values();
  std::vector<double> y(xv.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(xv.size());
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = activation_value(fn, xv[i]);
  auto xi = x.impl();
  return make_result(x.shape(), std::move(y), {x}, [xi, fn](std::span<const double> g) {
    auto gx = xi->grad_buffer();
    const auto& X = xi->values;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * activation_derivative(fn, X[i]);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("layer_norm: scalar input");
  const std::size_t n = s.back();
  if (gain.shape() != Shape{n} || bias.shape() != Shape{n}) {
    throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " vs width " + std::to_string(n));
  }
  const std::size_t rows = x.numel() / n;
  std::vector<double> y(x.numel());
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  kernels::layer_norm_rows(x.values().data(), gain.values().data(), bias.values().data(),
                           y.data(), xhat->data(), inv_std->data(), rows, n, eps);
  auto xi = x.impl();
  auto gi = gain.impl();
  auto bi = bias.impl();
  return make_result(
      s, std::move(y), {x, gain, bias},
      [xi, gi, bi, xhat, inv_std, rows, n](std::span<const double> g) {
        const auto& G = gi->values;
        const auto& XH = *xhat;
        if (xi->requires_grad) {
          auto gx = xi->grad_buffer();
          std::vector<double> d(n);
          for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * n;
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              d[j] = g[base + j] * G[j];
              s1 += d[j];
              s2 += d[j] * XH[base + j];
            }
            const double is = (*inv_std)[r] / static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              gx[base + j] +=
                  is * (static_cast<double>(n) * d[j] - s1 - XH[base + j] * s2);
            }
          }
        }
        if (gi->requires_grad) {
          auto gg = gi->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) gg[j] += g[r * n + j] * XH[r * n + j];
          }
        }
        if (bi->requires_grad) {
          auto gb = bi->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
          }
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const int> ids, const Shape& ids_shape) {
  if (table.ndim() != 2) throw ShapeError("embedding: table must be 2-D");
  if (numel_of(ids_shape) != ids.size()) {
    throw ShapeError("embedding: ids shape " + shape_str(ids_shape) + " vs " +
                     std::to_string(ids.size()) + " ids");
  }
  const std::size_t rows = table.dim(0), d = table.dim(1);
  std::vector<double> y(ids.size() * d);
  auto tv = table.values();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) +
                              " outside [0, " + std::to_string(rows) + ")");
    }
    std::copy_n(tv.data() + ids[i] * d, d, y.data() + i * d);
  }
  Shape out = ids_shape;
  out.push_back(d);
  auto ti = table.impl();
  auto id_copy = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  return make_result(out, std::move(y), {table}, [ti, id_copy, d](std::span<const double> g) {
    auto gt = ti->grad_buffer();
    for (std::size_t i = 0; i < id_copy->size(); ++i) {
      const std::size_t r = static_cast<std::size_t>((*id_copy)[i]);
      for (std::size_t j = 0; j < d; ++j) gt[r * d + j] += g[i * d + j];
    }
  });
}

Tensor dropout(const Tensor& x, double rate, RngState& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto m = std::make_shared<std::vector<double>>(x.numel());
  for (auto& v : *m) v = rng.uniform() >= rate ? keep_scale : 0.0;
  auto xv = x.values();
  std::vector<double> y(x.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * (*m)[i];
  auto xi = x.impl();
  return make_result(x.shape(), std::move(y), {x}, [xi, m](std::span<const double> g) {
    auto gx = xi->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*m)[i];
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     std::span<const double> weights) {
  if (logits.ndim() != 2) throw ShapeError("cross_entropy: logits must be [N, V]");
  const std::size_t rows = logits.dim(0), v = logits.dim(1);
  if (targets.size() != rows || weights.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(rows) + " rows vs " +
                     std::to_string(targets.size()) + " targets / " +
                     std::to_string(weights.size()) + " weights");
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  auto probs = std::make_shared<std::vector<double>>(rows * v);
  kernels::softmax_rows(logits.values().data(), probs->data(), rows, v);
  double loss = 0.0;
  auto lv = logits.values();
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == 0.0) continue;
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t));
    }
    const double* row = lv.data() + r * v;
    const double mx = *std::max_element(row, row + v);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
    loss += weights[r] * (mx + std::log(z) - row[t]);
  }
  const double denom = wsum > 0.0 ? wsum : 1.0;
  auto li = logits.impl();
  auto tg = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
  auto wt = std::make_shared<std::vector<double>>(weights.begin(), weights.end());
  return make_result({}, {loss / denom}, {logits},
                     [li, probs, tg, wt, rows, v, denom](std::span<const double> g) {
                       auto gl = li->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double w = (*wt)[r];
                         if (w == 0.0) continue;
                         const double c = g[0] * w / denom;
                         for (std::size_t j = 0; j < v; ++j) gl[r * v + j] += c * (*probs)[r * v + j];
                         gl[r * v + static_cast<std::size_t>((*tg)[r])] -= c;
                       }
                     });
}

Tensor max_along(const Tensor& x, int axis) {
  const Shape& s = x.shape();
  const std::size_t ax = normalize_axis(axis, s.size());
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= s[i];
  for (std::size_t i = ax + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[ax];
  Shape out = s;
  out[ax] = 1;
  std::vector<double> y(outer * inner, -std::numeric_limits<double>::infinity());
  auto xv = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t a = 0; a < len; ++a) {
      for (std::size_t i = 0; i < inner; ++i) {
        y[o * inner + i] = std::max(y[o * inner + i], xv[(o * len + a) * inner + i]);
      }
    }
  }
  return Tensor::from(out, std::move(y));
}

}  // namespace folnet

// Copyright 2026 The tovreg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tovreg/diff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tovreg/errors.hpp"

namespace tovreg::diff {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": " + why + " for shape " + shape_str(a));
}

template <typename T>
Tensor<T>* grad_of(Node<T>& self, std::size_t i) {
  Node<T>& p = *self.parents[i];
  return p.requires_grad ? &p.grad_slot() : nullptr;
}

// ---- broadcasting ------------------------------------------------------------

struct Broadcast {
  enum class Kind { kSame, kScalarB, kScalarA, kSuffixB, kGeneral };
  Kind kind = Kind::kGeneral;
  Shape out;
  std::size_t b_size = 1;
  std::vector<std::size_t> a_stride, b_stride;  // per output axis, 0 when stretched
};

Broadcast plan_broadcast(const char* op, const Shape& a, const Shape& b) {
  Broadcast plan;
  const std::size_t rank = std::max(a.size(), b.size());
  plan.out.assign(rank, 1);
  plan.a_stride.assign(rank, 0);
  plan.b_stride.assign(rank, 0);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t eb = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (ea != eb && ea != 1 && eb != 1) shape_fail(op, a, b);
    plan.out[i] = std::max(ea, eb);
  }
  std::size_t sa = 1, sb = 1;
  for (std::size_t i = rank; i-- > 0;) {
    const std::size_t ea = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t eb = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    plan.a_stride[i] = ea == 1 ? 0 : sa;
    plan.b_stride[i] = eb == 1 ? 0 : sb;
    sa *= ea;
    sb *= eb;
  }
  plan.b_size = sb;
  if (a == b) {
    plan.kind = Broadcast::Kind::kSame;
  } else if (sb == 1 && plan.out == a) {
    plan.kind = Broadcast::Kind::kScalarB;
  } else if (sa == 1 && plan.out == b) {
    plan.kind = Broadcast::Kind::kScalarA;
  } else if (plan.out == a && b.size() <= a.size() &&
             std::equal(b.begin(), b.end(), a.end() - static_cast<std::ptrdiff_t>(b.size()))) {
    plan.kind = Broadcast::Kind::kSuffixB;
  }
  return plan;
}

// Calls f(out_index, a_index, b_index) for every output element.
template <typename F>
void for_each_broadcast(const Broadcast& plan, F&& f) {
  const std::size_t n = shape_size(plan.out);
  switch (plan.kind) {
    case Broadcast::Kind::kSame:
      for (std::size_t i = 0; i < n; ++i) f(i, i, i);
      return;
    case Broadcast::Kind::kScalarB:
      for (std::size_t i = 0; i < n; ++i) f(i, i, std::size_t{0});
      return;
    case Broadcast::Kind::kScalarA:
      for (std::size_t i = 0; i < n; ++i) f(i, std::size_t{0}, i);
      return;
    case Broadcast::Kind::kSuffixB:
      for (std::size_t i = 0; i < n; ++i) f(i, i, i % plan.b_size);
      return;
    case Broadcast::Kind::kGeneral:
      break;
  }
  const std::size_t rank = plan.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      ia += plan.a_stride[ax];
      ib += plan.b_stride[ax];
      if (idx[ax] < plan.out[ax]) break;
      ia -= plan.a_stride[ax] * idx[ax];
      ib -= plan.b_stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
}

// Shared body of the four binary ops. `fwd(x, y)` computes the value,
// `dfa(x, y, out)` / `dfb(x, y, out)` the partial derivatives.
template <typename T, typename Fwd, typename DA, typename DB>
Var<T> binary(const char* op, const Var<T>& a, const Var<T>& b, Fwd fwd, DA dfa, DB dfb) {
  Broadcast plan = plan_broadcast(op, a.shape(), b.shape());
  Tensor<T> out(plan.out);
  const T* pa = a.value().ptr();
  const T* pb = b.value().ptr();
  T* po = out.ptr();
  for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) { po[io] = fwd(pa[ia], pb[ib]); });
  return Var<T>::make(std::move(out), op, {a, b}, [plan = std::move(plan), dfa, dfb](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    Tensor<T>* gb = grad_of(self, 1);
    const T* pa = self.parents[0]->value.ptr();
    const T* pb = self.parents[1]->value.ptr();
    const T* po = self.value.ptr();
    const T* g = self.grad.ptr();
    T* qa = ga ? ga->ptr() : nullptr;
    T* qb = gb ? gb->ptr() : nullptr;
    for_each_broadcast(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
      if (qa) qa[ia] += g[io] * dfa(pa[ia], pb[ib], po[io]);
      if (qb) qb[ib] += g[io] * dfb(pa[ia], pb[ib], po[io]);
    });
  });
}

template <typename T, typename Fwd, typename Deriv>
Var<T> unary(const char* op, const Var<T>& a, Fwd fwd, Deriv deriv) {
  Tensor<T> out(a.shape());
  const T* pa = a.value().ptr();
  T* po = out.ptr();
  for (std::size_t i = 0; i < out.size(); ++i) po[i] = fwd(pa[i]);
  return Var<T>::make(std::move(out), op, {a}, [deriv](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* x = self.parents[0]->value.ptr();
    const T* y = self.value.ptr();
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    for (std::size_t i = 0; i < self.value.size(); ++i) q[i] += g[i] * deriv(x[i], y[i]);
  });
}

// outer x n x inner view of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape reduced_shape(const Shape& s, std::size_t axis, bool keepdim) {
  Shape r = s;
  if (keepdim) {
    r[axis] = 1;
  } else {
    r.erase(r.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  return r;
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T, T, T) { return T{1}; }, [](T, T, T) { return T{1}; });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T, T, T) { return T{1}; }, [](T, T, T) { return T{-1}; });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      "mul", a, b, [](T x, T y) { return x * y; }, [](T, T y, T) { return y; }, [](T x, T, T) { return x; });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  return binary<T>(
      "div", a, b, [](T x, T y) { return x / y; }, [](T, T y, T) { return T{1} / y; },
      [](T, T y, T out) { return -out / y; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T c) {
  return unary<T>("add_scalar", a, [c](T x) { return x + c; }, [](T, T) { return T{1}; });
}

template <typename T>
Var<T> scale(const Var<T>& a, T c) {
  return unary<T>("scale", a, [c](T x) { return x * c; }, [c](T, T) { return c; });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary<T>("square", a, [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) shape_fail("matmul", sa, sb);
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa.back();
  const std::size_t kb = sb[sb.size() - 2];
  const std::size_t n = sb.back();
  if (k != kb) shape_fail("matmul", sa, sb);
  const bool shared_b = sb.size() == 2;
  if (!shared_b && (sb.size() != sa.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin()))) {
    shape_fail("matmul", sa, sb);
  }
  const std::size_t batch = shape_size(sa) / (m * k);
  Shape so = sa;
  so.back() = n;
  Tensor<T> out(so);
  const auto idx = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  if (shared_b) {
    MutMap<T>(out.ptr(), idx(batch * m), idx(n)).noalias() =
        ConstMap<T>(a.value().ptr(), idx(batch * m), idx(k)) * ConstMap<T>(b.value().ptr(), idx(k), idx(n));
  } else {
    for (std::size_t i = 0; i < batch; ++i) {
      MutMap<T>(out.ptr() + i * m * n, idx(m), idx(n)).noalias() =
          ConstMap<T>(a.value().ptr() + i * m * k, idx(m), idx(k)) *
          ConstMap<T>(b.value().ptr() + i * k * n, idx(k), idx(n));
    }
  }
  return Var<T>::make(std::move(out), "matmul", {a, b}, [=](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    Tensor<T>* gb = grad_of(self, 1);
    const T* pa = self.parents[0]->value.ptr();
    const T* pb = self.parents[1]->value.ptr();
    const T* g = self.grad.ptr();
    if (shared_b) {
      ConstMap<T> A(pa, idx(batch * m), idx(k));
      ConstMap<T> B(pb, idx(k), idx(n));
      ConstMap<T> G(g, idx(batch * m), idx(n));
      if (ga) MutMap<T>(ga->ptr(), idx(batch * m), idx(k)).noalias() += G * B.transpose();
      if (gb) MutMap<T>(gb->ptr(), idx(k), idx(n)).noalias() += A.transpose() * G;
      return;
    }
    for (std::size_t i = 0; i < batch; ++i) {
      ConstMap<T> A(pa + i * m * k, idx(m), idx(k));
      ConstMap<T> B(pb + i * k * n, idx(k), idx(n));
      ConstMap<T> G(g + i * m * n, idx(m), idx(n));
      if (ga) MutMap<T>(ga->ptr() + i * m * k, idx(m), idx(k)).noalias() += G * B.transpose();
      if (gb) MutMap<T>(gb->ptr() + i * k * n, idx(k), idx(n)).noalias() += A.transpose() * G;
    }
  });
}

template <typename T>
Var<T> permute(const Var<T>& a, const std::vector<std::size_t>& axes) {
  const Shape& s = a.shape();
  const std::size_t rank = s.size();
  if (axes.size() != rank) shape_fail("permute", s, "axis list has wrong length");
  std::vector<bool> seen(rank, false);
  for (std::size_t ax : axes) {
    if (ax >= rank || seen[ax]) shape_fail("permute", s, "axis list is not a permutation");
    seen[ax] = true;
  }
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
  Shape so(rank);
  std::vector<std::size_t> stride(rank);  // input stride per output axis
  for (std::size_t i = 0; i < rank; ++i) {
    so[i] = s[axes[i]];
    stride[i] = in_stride[axes[i]];
  }
  // Visits (output index, input index) pairs in output order.
  auto walk = [so, stride, rank](auto&& f) {
    const std::size_t n = shape_size(so);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t in = 0;
    for (std::size_t i = 0; i < n; ++i) {
      f(i, in);
      for (std::size_t ax = rank; ax-- > 0;) {
        ++idx[ax];
        in += stride[ax];
        if (idx[ax] < so[ax]) break;
        in -= stride[ax] * idx[ax];
        idx[ax] = 0;
      }
    }
  };
  Tensor<T> out(so);
  const T* pa = a.value().ptr();
  T* po = out.ptr();
  walk([&](std::size_t o, std::size_t i) { po[o] = pa[i]; });
  return Var<T>::make(std::move(out), "permute", {a}, [walk](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    walk([&](std::size_t o, std::size_t i) { q[i] += g[o]; });
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  const std::size_t rank = a.shape().size();
  if (rank < 2) shape_fail("transpose", a.shape(), "rank below 2");
  std::vector<std::size_t> axes(rank);
  for (std::size_t i = 0; i < rank; ++i) axes[i] = i;
  std::swap(axes[rank - 1], axes[rank - 2]);
  return permute(a, axes);
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  return Var<T>::make(a.value().reshaped(std::move(shape)), "reshape", {a}, [](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    for (std::size_t i = 0; i < self.value.size(); ++i) q[i] += g[i];
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = a.shape();
  if (axis >= s.size()) shape_fail("slice", s, "axis " + std::to_string(axis) + " out of range");
  if (length == 0 || start + length > s[axis]) {
    shape_fail("slice", s,
               "range [" + std::to_string(start) + ", " + std::to_string(start + length) + ") out of bounds");
  }
  const AxisSplit sp = split_at(s, axis);
  Shape so = s;
  so[axis] = length;
  Tensor<T> out(so);
  const T* pa = a.value().ptr();
  T* po = out.ptr();
  const std::size_t block = length * sp.inner;
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(pa + (o * sp.n + start) * sp.inner, block, po + o * block);
  }
  return Var<T>::make(std::move(out), "slice", {a}, [sp, start, block](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      T* dst = q + (o * sp.n + start) * sp.inner;
      const T* src = g + o * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) shape_fail("concat", s0, "axis " + std::to_string(axis) + " out of range");
  Shape so = s0;
  so[axis] = 0;
  std::vector<std::size_t> extents;
  for (const Var<T>& p : parts) {
    const Shape& sp = p.shape();
    if (sp.size() != s0.size()) shape_fail("concat", s0, sp);
    for (std::size_t i = 0; i < sp.size(); ++i) {
      if (i != axis && sp[i] != s0[i]) shape_fail("concat", s0, sp);
    }
    so[axis] += sp[axis];
    extents.push_back(sp[axis]);
  }
  const AxisSplit out_split = split_at(so, axis);
  Tensor<T> out(so);
  T* po = out.ptr();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t block = extents[k] * out_split.inner;
    const T* pp = parts[k].value().ptr();
    for (std::size_t o = 0; o < out_split.outer; ++o) {
      std::copy_n(pp + o * block, block, po + (o * out_split.n + offset) * out_split.inner);
    }
    offset += extents[k];
  }
  return Var<T>::make(std::move(out), "concat", parts, [out_split, extents](Node<T>& self) {
    const T* g = self.grad.ptr();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < extents.size(); ++k) {
      const std::size_t block = extents[k] * out_split.inner;
      if (Tensor<T>* gk = grad_of(self, k)) {
        T* q = gk->ptr();
        for (std::size_t o = 0; o < out_split.outer; ++o) {
          const T* src = g + (o * out_split.n + offset) * out_split.inner;
          for (std::size_t i = 0; i < block; ++i) q[o * block + i] += src[i];
        }
      }
      offset += extents[k];
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T total{0};
  for (T v : a.value().data()) total += v;
  return Var<T>::make(Tensor<T>::scalar(total), "sum", {a}, [](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T g = self.grad[0];
    for (T& q : ga->data()) q += g;
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.size()));
}

template <typename T>
Var<T> sum(const Var<T>& a, std::size_t axis, bool keepdim) {
  const Shape& s = a.shape();
  if (axis >= s.size()) shape_fail("sum", s, "axis " + std::to_string(axis) + " out of range");
  const AxisSplit sp = split_at(s, axis);
  Tensor<T> out(reduced_shape(s, axis, keepdim), T{0});
  const T* pa = a.value().ptr();
  T* po = out.ptr();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t j = 0; j < sp.n; ++j) {
      const T* row = pa + (o * sp.n + j) * sp.inner;
      T* dst = po + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += row[i];
    }
  }
  return Var<T>::make(std::move(out), "sum_axis", {a}, [sp](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t j = 0; j < sp.n; ++j) {
        T* dst = q + (o * sp.n + j) * sp.inner;
        const T* src = g + o * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

template <typename T>
Var<T> mean(const Var<T>& a, std::size_t axis, bool keepdim) {
  if (axis >= a.shape().size()) shape_fail("mean", a.shape(), "axis " + std::to_string(axis) + " out of range");
  return scale(sum(a, axis, keepdim), T{1} / static_cast<T>(a.shape()[axis]));
}

template <typename T>
Var<T> variance(const Var<T>& a, std::size_t axis, bool unbiased, bool keepdim) {
  const Shape& s = a.shape();
  if (axis >= s.size()) shape_fail("variance", s, "axis " + std::to_string(axis) + " out of range");
  const AxisSplit sp = split_at(s, axis);
  if (unbiased && sp.n < 2) {
    throw ContractError("variance: unbiased variance needs at least 2 samples along axis " +
                        std::to_string(axis) + " of " + shape_str(s));
  }
  const T denom = static_cast<T>(unbiased ? sp.n - 1 : sp.n);
  Tensor<T> mu(Shape{sp.outer * sp.inner}, T{0});
  Tensor<T> out(reduced_shape(s, axis, keepdim), T{0});
  const T* pa = a.value().ptr();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t j = 0; j < sp.n; ++j) {
      const T* row = pa + (o * sp.n + j) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) mu[o * sp.inner + i] += row[i];
    }
  }
  for (T& m : mu.data()) m /= static_cast<T>(sp.n);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t j = 0; j < sp.n; ++j) {
      const T* row = pa + (o * sp.n + j) * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) {
        const T d = row[i] - mu[o * sp.inner + i];
        out[o * sp.inner + i] += d * d;
      }
    }
  }
  for (T& v : out.data()) v /= denom;
  return Var<T>::make(std::move(out), "variance", {a}, [sp, denom, mu = std::move(mu)](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* x = self.parents[0]->value.ptr();
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t j = 0; j < sp.n; ++j) {
        const std::size_t base = (o * sp.n + j) * sp.inner;
        for (std::size_t i = 0; i < sp.inner; ++i) {
          const std::size_t r = o * sp.inner + i;
          q[base + i] += g[r] * T{2} * (x[base + i] - mu[r]) / denom;
        }
      }
    }
  });
}

template <typename T>
Var<T> sqrt(const Var<T>& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.value()[i] < T{0}) {
      throw DomainError("sqrt: negative input " + std::to_string(a.value()[i]) + " at flat index " +
                        std::to_string(i) + " of " + shape_str(a.shape()));
    }
  }
  return unary<T>(
      "sqrt", a, [](T x) { return std::sqrt(x); }, [](T, T y) { return T{0.5} / y; });
}

template <typename T>
Var<T> log(const Var<T>& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a.value()[i] > T{0})) {
      throw DomainError("log: non-positive input " + std::to_string(a.value()[i]) + " at flat index " +
                        std::to_string(i) + " of " + shape_str(a.shape()));
    }
  }
  return unary<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T{1} / x; });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return unary<T>(
      "relu", a, [](T x) { return x > T{0} ? x : T{0}; }, [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> gelu(const Var<T>& a) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
  return unary<T>(
      "gelu", a, [](T x) { return T{0.5} * x * (T{1} + std::erf(x * kInvSqrt2)); },
      [](T x, T) { return T{0.5} * (T{1} + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(T{-0.5} * x * x); });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  return unary<T>(
      "sigmoid", a,
      [](T x) {
        if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> softmax(const Var<T>& a) {
  const Shape& s = a.shape();
  if (s.empty()) shape_fail("softmax", s, "rank 0 input");
  const std::size_t cols = s.back();
  const std::size_t rows = a.size() / cols;
  Tensor<T> out(s);
  const T* pa = a.value().ptr();
  T* po = out.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = pa + r * cols;
    T* y = po + r * cols;
    const T mx = *std::max_element(x, x + cols);
    T total{0};
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  return Var<T>::make(std::move(out), "softmax", {a}, [rows, cols](Node<T>& self) {
    Tensor<T>* ga = grad_of(self, 0);
    if (!ga) return;
    const T* y = self.value.ptr();
    const T* g = self.grad.ptr();
    T* q = ga->ptr();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      T dot{0};
      for (std::size_t c = 0; c < cols; ++c) dot += g[base + c] * y[base + c];
      for (std::size_t c = 0; c < cols; ++c) q[base + c] += y[base + c] * (g[base + c] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps) {
  const Shape& s = x.shape();
  if (s.empty()) shape_fail("layer_norm", s, "rank 0 input");
  const std::size_t cols = s.back();
  if (gain.shape() != Shape{cols}) shape_fail("layer_norm", s, gain.shape());
  if (bias.shape() != Shape{cols}) shape_fail("layer_norm", s, bias.shape());
  const std::size_t rows = x.size() / cols;
  Tensor<T> out(s);
  Tensor<T> xhat(s);
  Tensor<T> inv_std(Shape{rows});
  const T* px = x.value().ptr();
  const T* pg = gain.value().ptr();
  const T* pb = bias.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = px + r * cols;
    T mu{0};
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<T>(cols);
    T var{0};
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<T>(cols);
    const T is = T{1} / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (row[c] - mu) * is;
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * pg[c] + pb[c];
    }
  }
  return Var<T>::make(std::move(out), "layer_norm", {x, gain, bias},
                      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
                        Tensor<T>* gx = grad_of(self, 0);
                        Tensor<T>* gg = grad_of(self, 1);
                        Tensor<T>* gbias = grad_of(self, 2);
                        const T* g = self.grad.ptr();
                        const T* gain = self.parents[1]->value.ptr();
                        for (std::size_t r = 0; r < rows; ++r) {
                          const std::size_t base = r * cols;
                          if (gg || gbias) {
                            for (std::size_t c = 0; c < cols; ++c) {
                              if (gg) (*gg)[c] += g[base + c] * xhat[base + c];
                              if (gbias) (*gbias)[c] += g[base + c];
                            }
                          }
                          if (!gx) continue;
                          T mean_d{0}, mean_dx{0};
                          for (std::size_t c = 0; c < cols; ++c) {
                            const T d = g[base + c] * gain[c];
                            mean_d += d;
                            mean_dx += d * xhat[base + c];
                          }
                          mean_d /= static_cast<T>(cols);
                          mean_dx /= static_cast<T>(cols);
                          for (std::size_t c = 0; c < cols; ++c) {
                            const T d = g[base + c] * gain[c];
                            (*gx)[base + c] += inv_std[r] * (d - mean_d - xhat[base + c] * mean_dx);
                          }
                        }
                      });
}

#define TOVREG_INSTANTIATE_OPS(T)                                                            \
  template Var<T> add(const Var<T>&, const Var<T>&);                                         \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                         \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                         \
  template Var<T> div(const Var<T>&, const Var<T>&);                                         \
  template Var<T> add_scalar(const Var<T>&, T);                                              \
  template Var<T> scale(const Var<T>&, T);                                                   \
  template Var<T> square(const Var<T>&);                                                     \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                      \
  template Var<T> transpose(const Var<T>&);                                                  \
  template Var<T> permute(const Var<T>&, const std::vector<std::size_t>&);                   \
  template Var<T> reshape(const Var<T>&, Shape);                                             \
  template Var<T> slice(const Var<T>&, std::size_t, std::size_t, std::size_t);               \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);                           \
  template Var<T> sum(const Var<T>&);                                                        \
  template Var<T> mean(const Var<T>&);                                                       \
  template Var<T> sum(const Var<T>&, std::size_t, bool);                                     \
  template Var<T> mean(const Var<T>&, std::size_t, bool);                                    \
  template Var<T> variance(const Var<T>&, std::size_t, bool, bool);                          \
  template Var<T> sqrt(const Var<T>&);                                                       \
  template Var<T> log(const Var<T>&);                                                        \
  template Var<T> relu(const Var<T>&);                                                       \
  template Var<T> gelu(const Var<T>&);                                                       \
  template Var<T> sigmoid(const Var<T>&);                                                    \
  template Var<T> softmax(const Var<T>&);                                                    \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);

TOVREG_INSTANTIATE_OPS(float)
TOVREG_INSTANTIATE_OPS(double)

#undef TOVREG_INSTANTIATE_OPS

}  // namespace tovreg::diff

// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_TENSOR_HPP_
#define SODASR_TENSOR_HPP_

// Dense row-major tensors with tape based reverse mode autodiff.
// Nodes hold their parents through shared_ptr handles; the backward
// closure receives the node's output gradient, so no closure captures
// the node itself and the graph stays cycle free.

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "sodasr/kernels.hpp"
#include "sodasr/rng.hpp"

namespace sodasr {

using Shape = std::vector<long>;

inline long numel_of(const Shape& s) {
  long n = 1;
  for (long d : s) n *= d;
  return n;
}

inline Shape strides_of(const Shape& s) {
  Shape st(s.size(), 1);
  for (int i = (int)s.size() - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
  return st;
}

inline std::string shape_str(const Shape& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
  return r + "]";
}

namespace detail {
inline std::atomic<uint64_t>& node_counter() {
  static std::atomic<uint64_t> c{1};
  return c;
}
inline int& nograd_depth() {
  thread_local int d = 0;
  return d;
}
}  // namespace detail

inline bool grad_enabled() { return detail::nograd_depth() == 0; }

struct NoGrad {
  NoGrad() { ++detail::nograd_depth(); }
  ~NoGrad() { --detail::nograd_depth(); }
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;
};

template <typename T>
class Tensor {
 public:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    uint64_t id = 0;
    std::vector<Tensor<T>> parents;
    std::function<void(const T*)> backward_fn;
  };

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Impl> p) : impl_(std::move(p)) {}

  static Tensor zeros(const Shape& s) {
    auto im = std::make_shared<Impl>();
    im->shape = s;
    im->data.assign(numel_of(s), T(0));
    im->id = detail::node_counter()++;
    return Tensor(im);
  }
  static Tensor full(const Shape& s, T v) {
    Tensor t = zeros(s);
    std::fill(t.data(), t.data() + t.numel(), v);
    return t;
  }
  static Tensor from_vector(const Shape& s, const std::vector<T>& v) {
    if ((long)v.size() != numel_of(s)) throw std::runtime_error("from_vector: size mismatch");
    Tensor t = zeros(s);
    std::copy(v.begin(), v.end(), t.data());
    return t;
  }
  static Tensor scalar(T v) { return full({1}, v); }
  static Tensor randn(const Shape& s, Rng& rng, T stddev = T(1)) {
    Tensor t = zeros(s);
    for (long i = 0; i < t.numel(); ++i) t.data()[i] = (T)(rng.normal() * (double)stddev);
    return t;
  }
  static Tensor randu(const Shape& s, Rng& rng, T lo = T(0), T hi = T(1)) {
    Tensor t = zeros(s);
    for (long i = 0; i < t.numel(); ++i) t.data()[i] = (T)rng.uniform((double)lo, (double)hi);
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  long dim(int i) const { return impl_->shape[(size_t)(i < 0 ? (int)impl_->shape.size() + i : i)]; }
  int ndim() const { return (int)impl_->shape.size(); }
  long numel() const { return (long)impl_->data.size(); }
  T* data() { return impl_->data.data(); }
  const T* data() const { return impl_->data.data(); }
  std::vector<T>& vec() { return impl_->data; }
  const std::vector<T>& vec() const { return impl_->data; }

  T item() const {
    if (numel() != 1) throw std::runtime_error("item(): tensor not scalar");
    return impl_->data[0];
  }
  T at(std::initializer_list<long> idx) const {
    Shape st = strides_of(impl_->shape);
    long off = 0;
    int i = 0;
    for (long v : idx) off += v * st[i++];
    return impl_->data[(size_t)off];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    impl_->requires_grad = b;
    return *this;
  }
  std::vector<T>& grad() {
    ensure_grad();
    return impl_->grad;
  }
  void ensure_grad() {
    if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), T(0));
  }
  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }
  Tensor detach() const {
    Tensor t = zeros(impl_->shape);
    std::copy(impl_->data.begin(), impl_->data.end(), t.data());
    return t;
  }
  Tensor clone_with_grad() const {  // detached copy that tracks grad
    Tensor t = detach();
    t.set_requires_grad(true);
    return t;
  }

  std::shared_ptr<Impl> impl() const { return impl_; }

  // Reverse sweep from a scalar output.
  void backward() {
    if (numel() != 1) throw std::runtime_error("backward(): output must be scalar");
    if (!impl_->requires_grad) throw std::runtime_error("backward(): output does not require grad");
    std::vector<Impl*> order;
    std::unordered_set<Impl*> seen;
    std::vector<Impl*> stack{impl_.get()};
    seen.insert(impl_.get());
    while (!stack.empty()) {
      Impl* n = stack.back();
      stack.pop_back();
      order.push_back(n);
      for (auto& p : n->parents) {
        Impl* pi = p.impl().get();
        if (pi->requires_grad && !seen.count(pi)) {
          seen.insert(pi);
          stack.push_back(pi);
        }
      }
    }
    std::sort(order.begin(), order.end(), [](Impl* a, Impl* b) { return a->id > b->id; });
    ensure_grad();
    impl_->grad[0] = T(1);
    for (Impl* n : order) {
      if (n->backward_fn) {
        if (n->grad.size() != n->data.size()) n->grad.assign(n->data.size(), T(0));
        n->backward_fn(n->grad.data());
      }
    }
  }

 private:
  std::shared_ptr<Impl> impl_;
};

namespace detail {

// Fresh node. Parents are recorded only when the result tracks gradients.
template <typename T>
Tensor<T> make_op(const Shape& s, std::initializer_list<Tensor<T>> parents) {
  Tensor<T> out = Tensor<T>::zeros(s);
  bool req = false;
  if (grad_enabled())
    for (const auto& p : parents)
      if (p.requires_grad()) req = true;
  if (req) {
    out.set_requires_grad(true);
    for (const auto& p : parents)
      if (p.requires_grad()) out.impl()->parents.push_back(p);
  }
  return out;
}

template <typename T>
void set_backward(Tensor<T>& t, std::function<void(const T*)> fn) {
  if (t.requires_grad()) t.impl()->backward_fn = std::move(fn);
}

// Walk an output shape against two (broadcast) input shapes. Calls
// fn(out_off, a_off, b_off) for every element, inner dim specialized.
template <typename T, typename F>
void for_each_broadcast(const Shape& os, const Shape& as, const Shape& bs, F&& fn) {
  int nd = (int)os.size();
  Shape ap(nd, 1), bp(nd, 1);
  std::copy(as.begin(), as.end(), ap.begin() + (nd - (int)as.size()));
  std::copy(bs.begin(), bs.end(), bp.begin() + (nd - (int)bs.size()));
  Shape ost = strides_of(os), ast = strides_of(ap), bst = strides_of(bp);
  for (int i = 0; i < nd; ++i) {
    if (ap[i] == 1 && os[i] != 1) ast[i] = 0;
    if (bp[i] == 1 && os[i] != 1) bst[i] = 0;
  }
  long inner = nd ? os[nd - 1] : 1;
  long sa = nd ? ast[nd - 1] : 0, sb = nd ? bst[nd - 1] : 0;
  long outer = numel_of(os) / std::max<long>(inner, 1);
  std::vector<long> idx(std::max(nd - 1, 0), 0);
  long ao = 0, bo = 0, oo = 0;
  for (long r = 0; r < outer; ++r) {
    long a = ao, b = bo, o = oo;
    for (long j = 0; j < inner; ++j) {
      fn(o, a, b);
      o += 1;
      a += sa;
      b += sb;
    }
    oo += inner;
    for (int d = nd - 2; d >= 0; --d) {
      ao += ast[d];
      bo += bst[d];
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
      ao -= ast[d] * os[d];
      bo -= bst[d] * os[d];
    }
  }
}

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  int nd = std::max(a.size(), b.size());
  Shape r(nd);
  for (int i = 0; i < nd; ++i) {
    long av = i < nd - (int)a.size() ? 1 : a[i - (nd - (int)a.size())];
    long bv = i < nd - (int)b.size() ? 1 : b[i - (nd - (int)b.size())];
    if (av != bv && av != 1 && bv != 1)
      throw std::runtime_error("broadcast: incompatible " + shape_str(a) + " vs " + shape_str(b));
    r[i] = std::max(av, bv);
  }
  return r;
}

}  // namespace detail

// ---- binary elementwise with broadcasting ----

template <typename T, typename FwdF, typename BwdF>
Tensor<T> binary_op(Tensor<T> a, Tensor<T> b, FwdF f, BwdF df) {
  Shape os = detail::broadcast_shape(a.shape(), b.shape());
  Tensor<T> out = detail::make_op<T>(os, {a, b});
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  if (a.shape() == b.shape()) {
    long n = out.numel();
    for (long i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
  } else {
    detail::for_each_broadcast<T>(os, a.shape(), b.shape(),
                                  [&](long o, long ai, long bi) { po[o] = f(pa[ai], pb[bi]); });
  }
  // The lambda must not capture out itself: it lives inside out's impl and
  // a self-reference would leak the whole graph.
  detail::set_backward<T>(out, [a, b, os, df](const T* g) mutable {
    bool ra = a.requires_grad(), rb = b.requires_grad();
    if (ra) a.ensure_grad();
    if (rb) b.ensure_grad();
    T* ga = ra ? a.grad().data() : nullptr;
    T* gb = rb ? b.grad().data() : nullptr;
    const T* pa = a.data();
    const T* pb = b.data();
    if (a.shape() == b.shape()) {
      long n = numel_of(os);
      for (long i = 0; i < n; ++i) {
        T da, db;
        df(pa[i], pb[i], da, db);
        if (ga) ga[i] += g[i] * da;
        if (gb) gb[i] += g[i] * db;
      }
    } else {
      detail::for_each_broadcast<T>(os, a.shape(), b.shape(),
                                    [&](long o, long ai, long bi) {
                                      T da, db;
                                      df(pa[ai], pb[bi], da, db);
                                      if (ga) ga[ai] += g[o] * da;
                                      if (gb) gb[bi] += g[o] * db;
                                    });
    }
  });
  return out;
}

template <typename T>
Tensor<T> operator+(Tensor<T> a, Tensor<T> b) {
  return binary_op(a, b, [](T x, T y) { return x + y; },
                   [](T, T, T& da, T& db) { da = T(1); db = T(1); });
}
template <typename T>
Tensor<T> operator-(Tensor<T> a, Tensor<T> b) {
  return binary_op(a, b, [](T x, T y) { return x - y; },
                   [](T, T, T& da, T& db) { da = T(1); db = T(-1); });
}
template <typename T>
Tensor<T> operator*(Tensor<T> a, Tensor<T> b) {
  return binary_op(a, b, [](T x, T y) { return x * y; },
                   [](T x, T y, T& da, T& db) { da = y; db = x; });
}
template <typename T>
Tensor<T> operator/(Tensor<T> a, Tensor<T> b) {
  return binary_op(a, b, [](T x, T y) { return x / y; },
                   [](T x, T y, T& da, T& db) { da = T(1) / y; db = -x / (y * y); });
}

// ---- unary elementwise ----

template <typename T, typename FwdF, typename BwdF>
Tensor<T> unary_op(Tensor<T> a, FwdF f, BwdF df) {
  Tensor<T> out = detail::make_op<T>(a.shape(), {a});
  const T* pa = a.data();
  T* po = out.data();
  long n = a.numel();
  for (long i = 0; i < n; ++i) po[i] = f(pa[i]);
  // Weak handle: df needs the forward output, but capturing out by value
  // would create a cycle through its own backward_fn.
  std::weak_ptr<typename Tensor<T>::Impl> wout = out.impl();
  detail::set_backward<T>(out, [a, wout, df](const T* g) mutable {
    auto so = wout.lock();
    if (!so) return;
    a.ensure_grad();
    T* ga = a.grad().data();
    const T* pa = a.data();
    const T* po = so->data.data();
    long n = a.numel();
    for (long i = 0; i < n; ++i) ga[i] += g[i] * df(pa[i], po[i]);
  });
  return out;
}

template <typename T>
Tensor<T> scale(Tensor<T> a, T s) {
  return unary_op(a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}
template <typename T>
Tensor<T> add_scalar(Tensor<T> a, T s) {
  return unary_op(a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}
template <typename T>
Tensor<T> neg(Tensor<T> a) { return scale(a, T(-1)); }
template <typename T>
Tensor<T> exp_t(Tensor<T> a) {
  return unary_op(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}
template <typename T>
Tensor<T> log_t(Tensor<T> a) {
  return unary_op(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}
template <typename T>
Tensor<T> sqrt_t(Tensor<T> a) {
  return unary_op(a, [](T x) { return std::sqrt(x); },
                  [](T, T y) { return T(0.5) / y; });
}
template <typename T>
Tensor<T> abs_t(Tensor<T> a) {
  return unary_op(a, [](T x) { return std::abs(x); },
                  [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}
template <typename T>
Tensor<T> square(Tensor<T> a) {
  return unary_op(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}
template <typename T>
Tensor<T> relu(Tensor<T> a) {
  return unary_op(a, [](T x) { return x > T(0) ? x : T(0); },
                  [](T x, T) { return x > T(0) ? T(1) : T(0); });
}
template <typename T>
Tensor<T> leaky_relu(Tensor<T> a, T slope = T(0.2)) {
  return unary_op(a, [slope](T x) { return x > T(0) ? x : slope * x; },
                  [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}
template <typename T>
Tensor<T> sigmoid(Tensor<T> a) {
  return unary_op(a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
                  [](T, T y) { return y * (T(1) - y); });
}
template <typename T>
Tensor<T> tanh_t(Tensor<T> a) {
  return unary_op(a, [](T x) { return std::tanh(x); },
                  [](T, T y) { return T(1) - y * y; });
}
template <typename T>
Tensor<T> gelu(Tensor<T> a) {
  // exact form, x * Phi(x)
  return unary_op(a,
                  [](T x) { return (T)(0.5 * (double)x * (1.0 + std::erf((double)x / 1.4142135623730951))); },
                  [](T x, T) {
                    double xd = (double)x;
                    double phi = 0.5 * (1.0 + std::erf(xd / 1.4142135623730951));
                    double pdf = std::exp(-0.5 * xd * xd) / 2.5066282746310002;
                    return (T)(phi + xd * pdf);
                  });
}
template <typename T>
Tensor<T> clamp(Tensor<T> a, T lo, T hi) {
  return unary_op(a, [lo, hi](T x) { return x < lo ? lo : (x > hi ? hi : x); },
                  [lo, hi](T x, T) { return (x >= lo && x <= hi) ? T(1) : T(0); });
}

// ---- reductions ----

template <typename T>
Tensor<T> sum(Tensor<T> a) {
  Tensor<T> out = detail::make_op<T>({1}, {a});
  const T* pa = a.data();
  T acc = T(0);
  long n = a.numel();
  for (long i = 0; i < n; ++i) acc += pa[i];
  out.data()[0] = acc;
  detail::set_backward<T>(out, [a](const T* g) mutable {
    a.ensure_grad();
    T* ga = a.grad().data();
    long n = a.numel();
    for (long i = 0; i < n; ++i) ga[i] += g[0];
  });
  return out;
}

template <typename T>
Tensor<T> mean(Tensor<T> a) {
  return scale(sum(a), T(1) / (T)a.numel());
}

// Reduce one axis. keepdim keeps a size-1 dimension in place.
template <typename T>
Tensor<T> sum(Tensor<T> a, int axis, bool keepdim = false) {
  int nd = a.ndim();
  if (axis < 0) axis += nd;
  Shape os;
  for (int i = 0; i < nd; ++i) {
    if (i == axis) {
      if (keepdim) os.push_back(1);
    } else {
      os.push_back(a.shape()[i]);
    }
  }
  if (os.empty()) os.push_back(1);
  long outer = 1, mid = a.shape()[axis], inner = 1;
  for (int i = 0; i < axis; ++i) outer *= a.shape()[i];
  for (int i = axis + 1; i < nd; ++i) inner *= a.shape()[i];
  Tensor<T> out = detail::make_op<T>(os, {a});
  const T* pa = a.data();
  T* po = out.data();
  for (long o = 0; o < outer; ++o)
    for (long m = 0; m < mid; ++m) {
      const T* src = pa + (o * mid + m) * inner;
      T* dst = po + o * inner;
      for (long i = 0; i < inner; ++i) dst[i] += src[i];
    }
  detail::set_backward<T>(out, [a, outer, mid, inner](const T* g) mutable {
    a.ensure_grad();
    T* ga = a.grad().data();
    for (long o = 0; o < outer; ++o)
      for (long m = 0; m < mid; ++m) {
        T* dst = ga + (o * mid + m) * inner;
        const T* src = g + o * inner;
        for (long i = 0; i < inner; ++i) dst[i] += src[i];
      }
  });
  return out;
}

template <typename T>
Tensor<T> mean(Tensor<T> a, int axis, bool keepdim = false) {
  int nd = a.ndim();
  long m = a.shape()[(size_t)(axis < 0 ? axis + nd : axis)];
  return scale(sum(a, axis, keepdim), T(1) / (T)m);
}

// ---- shape ops ----

template <typename T>
Tensor<T> reshape(Tensor<T> a, const Shape& s) {
  Shape rs = s;
  long known = 1;
  int infer = -1;
  for (size_t i = 0; i < rs.size(); ++i) {
    if (rs[i] == -1) infer = (int)i;
    else known *= rs[i];
  }
  if (infer >= 0) rs[infer] = a.numel() / known;
  if (numel_of(rs) != a.numel()) throw std::runtime_error("reshape: numel mismatch");
  Tensor<T> out = detail::make_op<T>(rs, {a});
  std::copy(a.data(), a.data() + a.numel(), out.data());
  detail::set_backward<T>(out, [a](const T* g) mutable {
    a.ensure_grad();
    T* ga = a.grad().data();
    long n = a.numel();
    for (long i = 0; i < n; ++i) ga[i] += g[i];
  });
  return out;
}

template <typename T>
Tensor<T> permute(Tensor<T> a, const std::vector<int>& perm) {
  int nd = a.ndim();
  Shape os(nd);
  for (int i = 0; i < nd; ++i) os[i] = a.shape()[perm[i]];
  Shape ast = strides_of(a.shape());
  Shape pst(nd);  // stride in a for each out dim
  for (int i = 0; i < nd; ++i) pst[i] = ast[perm[i]];
  Tensor<T> out = detail::make_op<T>(os, {a});
  const T* pa = a.data();
  T* po = out.data();
  long n = a.numel();
  std::vector<long> idx(nd, 0);
  long aoff = 0;
  for (long o = 0; o < n; ++o) {
    po[o] = pa[aoff];
    for (int d = nd - 1; d >= 0; --d) {
      aoff += pst[d];
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
      aoff -= pst[d] * os[d];
    }
  }
  detail::set_backward<T>(out, [a, os, pst, nd](const T* g) mutable {
    a.ensure_grad();
    T* ga = a.grad().data();
    long n = a.numel();
    std::vector<long> idx(nd, 0);
    long aoff = 0;
    for (long o = 0; o < n; ++o) {
      ga[aoff] += g[o];
      for (int d = nd - 1; d >= 0; --d) {
        aoff += pst[d];
        if (++idx[d] < os[d]) break;
        idx[d] = 0;
        aoff -= pst[d] * os[d];
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  int nd = parts[0].ndim();
  if (axis < 0) axis += nd;
  Shape os = parts[0].shape();
  long total = 0;
  for (auto& p : parts) total += p.shape()[axis];
  os[axis] = total;
  Tensor<T> out = Tensor<T>::zeros(os);
  bool req = false;
  if (grad_enabled())
    for (auto& p : parts)
      if (p.requires_grad()) req = true;
  if (req) {
    out.set_requires_grad(true);
    for (auto& p : parts)
      if (p.requires_grad()) out.impl()->parents.push_back(p);
  }
  long outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= os[i];
  for (int i = axis + 1; i < nd; ++i) inner *= os[i];
  T* po = out.data();
  long off = 0;
  for (auto& p : parts) {
    long m = p.shape()[axis];
    const T* pp = p.data();
    for (long o = 0; o < outer; ++o)
      std::copy(pp + o * m * inner, pp + (o + 1) * m * inner, po + (o * total + off) * inner);
    off += m;
  }
  auto parts_copy = parts;
  detail::set_backward<T>(out, [parts_copy, outer, inner, total, axis](const T* g) mutable {
    long off = 0;
    for (auto& p : parts_copy) {
      long m = p.shape()[axis];
      if (p.requires_grad()) {
        p.ensure_grad();
        T* gp = p.grad().data();
        for (long o = 0; o < outer; ++o) {
          const T* src = g + (o * total + off) * inner;
          T* dst = gp + o * m * inner;
          for (long i = 0; i < m * inner; ++i) dst[i] += src[i];
        }
      }
      off += m;
    }
  });
  return out;
}

template <typename T>
Tensor<T> slice(Tensor<T> a, int axis, long start, long len) {
  int nd = a.ndim();
  if (axis < 0) axis += nd;
  Shape os = a.shape();
  os[axis] = len;
  long outer = 1, inner = 1, m = a.shape()[axis];
  for (int i = 0; i < axis; ++i) outer *= a.shape()[i];
  for (int i = axis + 1; i < nd; ++i) inner *= a.shape()[i];
  Tensor<T> out = detail::make_op<T>(os, {a});
  const T* pa = a.data();
  T* po = out.data();
  for (long o = 0; o < outer; ++o)
    std::copy(pa + (o * m + start) * inner, pa + (o * m + start + len) * inner,
              po + o * len * inner);
  detail::set_backward<T>(out, [a, outer, inner, m, start, len](const T* g) mutable {
    a.ensure_grad();
    T* ga = a.grad().data();
    for (long o = 0; o < outer; ++o) {
      const T* src = g + o * len * inner;
      T* dst = ga + (o * m + start) * inner;
      for (long i = 0; i < len * inner; ++i) dst[i] += src[i];
    }
  });
  return out;
}

// ---- matmul ----

// [M,K] x [K,N], [B,M,K] x [B,K,N] or [B,M,K] x [K,N].
template <typename T>
Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
  if (a.ndim() == 2 && b.ndim() == 2) {
    long M = a.shape()[0], K = a.shape()[1], N = b.shape()[1];
    if (b.shape()[0] != K) throw std::runtime_error("matmul: inner dim mismatch");
    Tensor<T> out = detail::make_op<T>({M, N}, {a, b});
    kern::gemm_acc(a.data(), K, b.data(), N, out.data(), N, M, K, N);
    detail::set_backward<T>(out, [a, b, M, K, N](const T* g) mutable {
      if (a.requires_grad()) {
        a.ensure_grad();
        std::vector<T> bt((size_t)(N * K));  // B^T
        const T* pb = b.data();
        for (long k = 0; k < K; ++k)
          for (long n = 0; n < N; ++n) bt[(size_t)(n * K + k)] = pb[k * N + n];
        kern::gemm_acc(g, N, bt.data(), K, a.grad().data(), K, M, N, K);
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        kern::atg_acc(a.data(), K, g, N, b.grad().data(), N, M, K, N);
      }
    });
    return out;
  }
  if (a.ndim() == 3 && b.ndim() == 2) {
    long B = a.shape()[0], M = a.shape()[1], K = a.shape()[2], N = b.shape()[1];
    Tensor<T> a2 = reshape(a, {B * M, K});
    return reshape(matmul(a2, b), {B, M, N});
  }
  if (a.ndim() == 3 && b.ndim() == 3) {
    long B = a.shape()[0], M = a.shape()[1], K = a.shape()[2], N = b.shape()[2];
    if (b.shape()[0] != B || b.shape()[1] != K) throw std::runtime_error("matmul: batch mismatch");
    Tensor<T> out = detail::make_op<T>({B, M, N}, {a, b});
    for (long i = 0; i < B; ++i)
      kern::gemm_acc(a.data() + i * M * K, K, b.data() + i * K * N, N,
                     out.data() + i * M * N, N, M, K, N);
    detail::set_backward<T>(out, [a, b, B, M, K, N](const T* g) mutable {
      if (a.requires_grad()) {
        a.ensure_grad();
        std::vector<T> bt((size_t)(N * K));
        for (long i = 0; i < B; ++i) {
          const T* pb = b.data() + i * K * N;
          for (long k = 0; k < K; ++k)
            for (long n = 0; n < N; ++n) bt[(size_t)(n * K + k)] = pb[k * N + n];
          kern::gemm_acc(g + i * M * N, N, bt.data(), K, a.grad().data() + i * M * K, K, M, N, K);
        }
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        for (long i = 0; i < B; ++i)
          kern::atg_acc(a.data() + i * M * K, K, g + i * M * N, N,
                        b.grad().data() + i * K * N, N, M, K, N);
      }
    });
    return out;
  }
  throw std::runtime_error("matmul: unsupported ranks");
}

// ---- softmax / layer norm (last axis) ----

template <typename T>
Tensor<T> softmax(Tensor<T> a) {
  long C = a.shape().back();
  long rows = a.numel() / C;
  Tensor<T> out = detail::make_op<T>(a.shape(), {a});
  const T* pa = a.data();
  T* po = out.data();
  for (long r = 0; r < rows; ++r) {
    const T* x = pa + r * C;
    T* y = po + r * C;
    T mx = x[0];
    for (long j = 1; j < C; ++j) mx = std::max(mx, x[j]);
    T s = T(0);
    for (long j = 0; j < C; ++j) {
      y[j] = std::exp(x[j] - mx);
      s += y[j];
    }
    T inv = T(1) / s;
    for (long j = 0; j < C; ++j) y[j] *= inv;
  }
  std::weak_ptr<typename Tensor<T>::Impl> wout = out.impl();
  detail::set_backward<T>(out, [a, wout, rows, C](const T* g) mutable {
    auto so = wout.lock();
    if (!so) return;
    a.ensure_grad();
    T* ga = a.grad().data();
    const T* po = so->data.data();
    for (long r = 0; r < rows; ++r) {
      const T* y = po + r * C;
      const T* gr = g + r * C;
      T dot = T(0);
      for (long j = 0; j < C; ++j) dot += gr[j] * y[j];
      T* gd = ga + r * C;
      for (long j = 0; j < C; ++j) gd[j] += y[j] * (gr[j] - dot);
    }
  });
  return out;
}

template <typename T>
Tensor<T> layer_norm(Tensor<T> a, Tensor<T> gamma, Tensor<T> beta,
                     T eps = T(1e-5)) {
  long C = a.shape().back();
  long rows = a.numel() / C;
  Tensor<T> out = detail::make_op<T>(a.shape(), {a, gamma, beta});
  std::vector<T> xhat((size_t)a.numel());
  std::vector<T> ivar((size_t)rows);
  const T* pa = a.data();
  T* po = out.data();
  const T* pg = gamma.data();
  const T* pbt = beta.data();
  for (long r = 0; r < rows; ++r) {
    const T* x = pa + r * C;
    T mu = T(0);
    for (long j = 0; j < C; ++j) mu += x[j];
    mu /= (T)C;
    T var = T(0);
    for (long j = 0; j < C; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= (T)C;
    T iv = T(1) / std::sqrt(var + eps);
    ivar[(size_t)r] = iv;
    T* xh = xhat.data() + r * C;
    T* y = po + r * C;
    for (long j = 0; j < C; ++j) {
      xh[j] = (x[j] - mu) * iv;
      y[j] = pg[j] * xh[j] + pbt[j];
    }
  }
  detail::set_backward<T>(out, [a, gamma, beta, rows, C, xhat = std::move(xhat),
                                ivar = std::move(ivar)](const T* g) mutable {
    const T* pg = gamma.data();
    if (gamma.requires_grad()) gamma.ensure_grad();
    if (beta.requires_grad()) beta.ensure_grad();
    if (a.requires_grad()) a.ensure_grad();
    T* gg = gamma.requires_grad() ? gamma.grad().data() : nullptr;
    T* gb = beta.requires_grad() ? beta.grad().data() : nullptr;
    T* ga = a.requires_grad() ? a.grad().data() : nullptr;
    for (long r = 0; r < rows; ++r) {
      const T* xh = xhat.data() + r * C;
      const T* gr = g + r * C;
      if (gg || gb)
        for (long j = 0; j < C; ++j) {
          if (gg) gg[j] += gr[j] * xh[j];
          if (gb) gb[j] += gr[j];
        }
      if (ga) {
        T iv = ivar[(size_t)r];
        T sum_dxh = T(0), sum_dxh_xh = T(0);
        for (long j = 0; j < C; ++j) {
          T dxh = gr[j] * pg[j];
          sum_dxh += dxh;
          sum_dxh_xh += dxh * xh[j];
        }
        T* gd = ga + r * C;
        for (long j = 0; j < C; ++j) {
          T dxh = gr[j] * pg[j];
          gd[j] += iv * (dxh - sum_dxh / (T)C - xh[j] * sum_dxh_xh / (T)C);
        }
      }
    }
  });
  return out;
}

}  // namespace sodasr

#endif  // SODASR_TENSOR_HPP_

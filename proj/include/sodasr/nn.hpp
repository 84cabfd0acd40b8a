// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_NN_HPP_
#define SODASR_NN_HPP_

// Neural net building blocks on channels-last [B,H,W,C] tensors.
// conv2d runs as an implicit GEMM: the micro kernel reads image rows in
// place (strided A), so no im2col buffer is ever materialized.

#include <cmath>
#include <vector>

#include "sodasr/tensor.hpp"

namespace sodasr {

namespace detail {

// [B,H,W,C] -> [B,H+2p,W+2p,C] zero border copy.
template <typename T>
std::vector<T> pad_nhwc(const T* x, long B, long H, long W, long C, long p) {
  long Hp = H + 2 * p, Wp = W + 2 * p;
  std::vector<T> out((size_t)(B * Hp * Wp * C), T(0));
  for (long b = 0; b < B; ++b)
    for (long y = 0; y < H; ++y)
      std::copy(x + ((b * H + y) * W) * C, x + ((b * H + y) * W + W) * C,
                out.data() + ((b * Hp + y + p) * Wp + p) * C);
  return out;
}

}  // namespace detail

// x [B,H,W,Cin], w [Kh,Kw,Cin,Cout], bias [Cout] (optional, pass undefined
// Tensor to skip). stride >= 1, symmetric zero padding.
template <typename T>
Tensor<T> conv2d(Tensor<T> x, Tensor<T> w, Tensor<T> bias, long stride = 1, long pad = 0) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], Cin = x.shape()[3];
  long Kh = w.shape()[0], Kw = w.shape()[1], Cout = w.shape()[3];
  if (w.shape()[2] != Cin) throw std::runtime_error("conv2d: Cin mismatch");
  long Ho = (H + 2 * pad - Kh) / stride + 1;
  long Wo = (W + 2 * pad - Kw) / stride + 1;
  bool has_bias = bias.defined();

  Tensor<T> out = has_bias ? detail::make_op<T>({B, Ho, Wo, Cout}, {x, w, bias})
                           : detail::make_op<T>({B, Ho, Wo, Cout}, {x, w});
  T* po = out.data();
  if (has_bias) {
    const T* pb = bias.data();
    for (long i = 0; i < B * Ho * Wo; ++i) std::copy(pb, pb + Cout, po + i * Cout);
  }

  if (Kh == 1 && Kw == 1 && pad == 0 && stride == 1) {
    kern::gemm_acc(x.data(), Cin, w.data(), Cout, po, Cout, B * H * W, Cin, Cout);
  } else {
    long Hp = H + 2 * pad, Wp = W + 2 * pad;
    std::vector<T> padded = detail::pad_nhwc(x.data(), B, H, W, Cin, pad);
    for (long b = 0; b < B; ++b)
      for (long yo = 0; yo < Ho; ++yo) {
        T* orow = po + ((b * Ho + yo) * Wo) * Cout;
        for (long dy = 0; dy < Kh; ++dy) {
          const T* arow = padded.data() + ((b * Hp + yo * stride + dy) * Wp) * Cin;
          const T* wslab = w.data() + dy * Kw * Cin * Cout;
          kern::gemm_acc(arow, stride * Cin, wslab, Cout, orow, Cout, Wo, Kw * Cin, Cout);
        }
      }
  }

  detail::set_backward<T>(out, [x, w, bias, B, H, W, Cin, Kh, Kw, Cout, Ho, Wo, stride, pad,
                                has_bias](const T* g) mutable {
    if (has_bias && bias.requires_grad()) {
      bias.ensure_grad();
      T* gb = bias.grad().data();
      for (long i = 0; i < B * Ho * Wo; ++i)
        for (long j = 0; j < Cout; ++j) gb[j] += g[i * Cout + j];
    }
    if (Kh == 1 && Kw == 1 && pad == 0 && stride == 1) {
      if (w.requires_grad()) {
        w.ensure_grad();
        kern::atg_acc(x.data(), Cin, g, Cout, w.grad().data(), Cout, B * H * W, Cin, Cout);
      }
      if (x.requires_grad()) {
        x.ensure_grad();
        std::vector<T> wt((size_t)(Cout * Cin));
        const T* pw = w.data();
        for (long i = 0; i < Cin; ++i)
          for (long j = 0; j < Cout; ++j) wt[(size_t)(j * Cin + i)] = pw[i * Cout + j];
        kern::gemm_acc(g, Cout, wt.data(), Cin, x.grad().data(), Cin, B * H * W, Cout, Cin);
      }
      return;
    }
    long Hp = H + 2 * pad, Wp = W + 2 * pad;
    std::vector<T> padded;
    if (w.requires_grad()) padded = detail::pad_nhwc(x.data(), B, H, W, Cin, pad);
    if (w.requires_grad()) {
      w.ensure_grad();
      T* gw = w.grad().data();
      for (long b = 0; b < B; ++b)
        for (long yo = 0; yo < Ho; ++yo) {
          const T* grow = g + ((b * Ho + yo) * Wo) * Cout;
          for (long dy = 0; dy < Kh; ++dy) {
            const T* arow = padded.data() + ((b * Hp + yo * stride + dy) * Wp) * Cin;
            kern::atg_acc(arow, stride * Cin, grow, Cout, gw + dy * Kw * Cin * Cout, Cout, Wo,
                          Kw * Cin, Cout);
          }
        }
    }
    if (x.requires_grad()) {
      x.ensure_grad();
      // dcol row per (b,yo,dy), scattered into the padded gradient.
      std::vector<T> gpad((size_t)(B * Hp * Wp * Cin), T(0));
      std::vector<T> wt((size_t)(Kh * Kw * Cin * Cout));  // per-dy transposed slabs
      const T* pw = w.data();
      for (long dy = 0; dy < Kh; ++dy) {
        const T* slab = pw + dy * Kw * Cin * Cout;           // [Kw*Cin, Cout]
        T* tslab = wt.data() + dy * Kw * Cin * Cout;         // [Cout, Kw*Cin]
        for (long i = 0; i < Kw * Cin; ++i)
          for (long j = 0; j < Cout; ++j) tslab[j * Kw * Cin + i] = slab[i * Cout + j];
      }
      std::vector<T> dcol((size_t)(Wo * Kw * Cin));
      for (long b = 0; b < B; ++b)
        for (long yo = 0; yo < Ho; ++yo) {
          const T* grow = g + ((b * Ho + yo) * Wo) * Cout;
          for (long dy = 0; dy < Kh; ++dy) {
            std::fill(dcol.begin(), dcol.end(), T(0));
            kern::gemm_acc(grow, Cout, wt.data() + dy * Kw * Cin * Cout, Kw * Cin, dcol.data(),
                           Kw * Cin, Wo, Cout, Kw * Cin);
            T* prow = gpad.data() + ((b * Hp + yo * stride + dy) * Wp) * Cin;
            for (long xo = 0; xo < Wo; ++xo) {
              T* dst = prow + xo * stride * Cin;
              const T* src = dcol.data() + xo * Kw * Cin;
              for (long k = 0; k < Kw * Cin; ++k) dst[k] += src[k];
            }
          }
        }
      T* gx = x.grad().data();
      for (long b = 0; b < B; ++b)
        for (long y = 0; y < H; ++y) {
          const T* src = gpad.data() + ((b * Hp + y + pad) * Wp + pad) * Cin;
          T* dst = gx + ((b * H + y) * W) * Cin;
          for (long k = 0; k < W * Cin; ++k) dst[k] += src[k];
        }
    }
  });
  return out;
}

template <typename T>
Tensor<T> conv2d(Tensor<T> x, Tensor<T> w, long stride = 1, long pad = 0) {
  return conv2d(x, w, Tensor<T>(), stride, pad);
}

// x [B,H,W,C] -> [B,H*s,W*s,C]
template <typename T>
Tensor<T> nearest_upsample(Tensor<T> x, long s) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
  Tensor<T> out = detail::make_op<T>({B, H * s, W * s, C}, {x});
  const T* px = x.data();
  T* po = out.data();
  for (long b = 0; b < B; ++b)
    for (long y = 0; y < H * s; ++y)
      for (long xw = 0; xw < W * s; ++xw) {
        const T* src = px + ((b * H + y / s) * W + xw / s) * C;
        T* dst = po + ((b * H * s + y) * W * s + xw) * C;
        std::copy(src, src + C, dst);
      }
  detail::set_backward<T>(out, [x, B, H, W, C, s](const T* g) mutable {
    x.ensure_grad();
    T* gx = x.grad().data();
    for (long b = 0; b < B; ++b)
      for (long y = 0; y < H * s; ++y)
        for (long xw = 0; xw < W * s; ++xw) {
          T* dst = gx + ((b * H + y / s) * W + xw / s) * C;
          const T* src = g + ((b * H * s + y) * W * s + xw) * C;
          for (long c = 0; c < C; ++c) dst[c] += src[c];
        }
  });
  return out;
}

// x [B,H,W,C] -> [B,C]
template <typename T>
Tensor<T> global_avg_pool(Tensor<T> x) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
  Tensor<T> out = detail::make_op<T>({B, C}, {x});
  const T* px = x.data();
  T* po = out.data();
  T inv = T(1) / (T)(H * W);
  for (long b = 0; b < B; ++b) {
    T* dst = po + b * C;
    for (long i = 0; i < H * W; ++i) {
      const T* src = px + (b * H * W + i) * C;
      for (long c = 0; c < C; ++c) dst[c] += src[c];
    }
    for (long c = 0; c < C; ++c) dst[c] *= inv;
  }
  detail::set_backward<T>(out, [x, B, H, W, C, inv](const T* g) mutable {
    x.ensure_grad();
    T* gx = x.grad().data();
    for (long b = 0; b < B; ++b)
      for (long i = 0; i < H * W; ++i) {
        T* dst = gx + (b * H * W + i) * C;
        const T* src = g + b * C;
        for (long c = 0; c < C; ++c) dst[c] += src[c] * inv;
      }
  });
  return out;
}

// x [B,H,W,C], coords [B,n,2] with (cx,cy) normalized to [0,1].
// Pixel centers sit at (i+0.5)/extent; out of range coordinates clamp and
// get zero coordinate gradient there.
template <typename T>
Tensor<T> bilinear_sample(Tensor<T> x, Tensor<T> coords) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
  long n = coords.shape()[1];
  Tensor<T> out = detail::make_op<T>({B, n, C}, {x, coords});
  const T* px = x.data();
  const T* pc = coords.data();
  T* po = out.data();
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < n; ++i) {
      T fx = pc[(b * n + i) * 2 + 0] * (T)W - T(0.5);
      T fy = pc[(b * n + i) * 2 + 1] * (T)H - T(0.5);
      T cx = std::min(std::max(fx, T(0)), (T)(W - 1));
      T cy = std::min(std::max(fy, T(0)), (T)(H - 1));
      long x0 = (long)cx, y0 = (long)cy;
      long x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
      T ax = cx - (T)x0, ay = cy - (T)y0;
      const T* p00 = px + ((b * H + y0) * W + x0) * C;
      const T* p01 = px + ((b * H + y0) * W + x1) * C;
      const T* p10 = px + ((b * H + y1) * W + x0) * C;
      const T* p11 = px + ((b * H + y1) * W + x1) * C;
      T* dst = po + (b * n + i) * C;
      for (long c = 0; c < C; ++c)
        dst[c] = (T(1) - ay) * ((T(1) - ax) * p00[c] + ax * p01[c]) +
                 ay * ((T(1) - ax) * p10[c] + ax * p11[c]);
    }
  detail::set_backward<T>(out, [x, coords, B, H, W, C, n](const T* g) mutable {
    bool rx = x.requires_grad(), rc = coords.requires_grad();
    if (rx) x.ensure_grad();
    if (rc) coords.ensure_grad();
    T* gx = rx ? x.grad().data() : nullptr;
    T* gc = rc ? coords.grad().data() : nullptr;
    const T* px = x.data();
    const T* pc = coords.data();
    for (long b = 0; b < B; ++b)
      for (long i = 0; i < n; ++i) {
        T fx = pc[(b * n + i) * 2 + 0] * (T)W - T(0.5);
        T fy = pc[(b * n + i) * 2 + 1] * (T)H - T(0.5);
        bool inx = fx > T(0) && fx < (T)(W - 1);
        bool iny = fy > T(0) && fy < (T)(H - 1);
        T cx = std::min(std::max(fx, T(0)), (T)(W - 1));
        T cy = std::min(std::max(fy, T(0)), (T)(H - 1));
        long x0 = (long)cx, y0 = (long)cy;
        long x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
        T ax = cx - (T)x0, ay = cy - (T)y0;
        long o00 = ((b * H + y0) * W + x0) * C;
        long o01 = ((b * H + y0) * W + x1) * C;
        long o10 = ((b * H + y1) * W + x0) * C;
        long o11 = ((b * H + y1) * W + x1) * C;
        const T* gr = g + (b * n + i) * C;
        T dgx = T(0), dgy = T(0);
        for (long c = 0; c < C; ++c) {
          T gv = gr[c];
          if (gx) {
            gx[o00 + c] += gv * (T(1) - ay) * (T(1) - ax);
            gx[o01 + c] += gv * (T(1) - ay) * ax;
            gx[o10 + c] += gv * ay * (T(1) - ax);
            gx[o11 + c] += gv * ay * ax;
          }
          if (gc) {
            dgx += gv * ((T(1) - ay) * (px[o01 + c] - px[o00 + c]) +
                         ay * (px[o11 + c] - px[o10 + c]));
            dgy += gv * ((T(1) - ax) * (px[o10 + c] - px[o00 + c]) +
                         ax * (px[o11 + c] - px[o01 + c]));
          }
        }
        if (gc) {
          if (inx) gc[(b * n + i) * 2 + 0] += dgx * (T)W;
          if (iny) gc[(b * n + i) * 2 + 1] += dgy * (T)H;
        }
      }
  });
  return out;
}

// x [..., Cin] times w [Cin, Cout] plus bias [Cout].
template <typename T>
Tensor<T> linear(Tensor<T> x, Tensor<T> w, Tensor<T> bias) {
  Shape os = x.shape();
  long Cin = os.back();
  os.back() = w.shape()[1];
  Tensor<T> flat = reshape(x, {-1, Cin});
  Tensor<T> y = matmul(flat, w);
  if (bias.defined()) y = y + bias;
  return reshape(y, os);
}

template <typename T>
Tensor<T> linear(Tensor<T> x, Tensor<T> w) {
  return linear(x, w, Tensor<T>());
}

}  // namespace sodasr

#endif  // SODASR_NN_HPP_

// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_WAVELET_HPP_
#define SODASR_WAVELET_HPP_

// Orthonormal Haar wavelet packet transform on [B,H,W,C] tensors.
// One analysis step maps each 2x2 block (a b / c d) to
//   LL=(a+b+c+d)/2  LH=(a+b-c-d)/2  HL=(a-b+c-d)/2  HH=(a-b-c+d)/2.
// The transform matrix is symmetric orthogonal, so synthesis applies the
// same butterfly and energy is preserved. Packet paths are indexed in
// base 4, most significant digit first, with 0=LL 1=LH 2=HL 3=HH.

#include <array>
#include <stdexcept>
#include <vector>

#include "sodasr/tensor.hpp"

namespace sodasr {

namespace detail {

// Butterfly signs per band: LL, LH, HL, HH against (a,b,c,d).
template <typename T>
constexpr std::array<std::array<T, 4>, 4> wpt_signs() {
  return {{{T(1), T(1), T(1), T(1)},
           {T(1), T(1), T(-1), T(-1)},
           {T(1), T(-1), T(1), T(-1)},
           {T(1), T(-1), T(-1), T(1)}}};
}

}  // namespace detail

// One analysis step producing a single band (0=LL 1=LH 2=HL 3=HH).
template <typename T>
Tensor<T> wpt_band_step(Tensor<T> x, int band) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
  if (H % 2 || W % 2) throw std::runtime_error("wpt: odd spatial size " + shape_str(x.shape()));
  auto sg = detail::wpt_signs<T>()[(size_t)band];
  long h = H / 2, w = W / 2;
  Tensor<T> out = detail::make_op<T>({B, h, w, C}, {x});
  const T* px = x.data();
  T* po = out.data();
  for (long b = 0; b < B; ++b)
    for (long y = 0; y < h; ++y)
      for (long xw = 0; xw < w; ++xw) {
        const T* pa = px + ((b * H + 2 * y) * W + 2 * xw) * C;
        const T* pb = pa + C;
        const T* pc = px + ((b * H + 2 * y + 1) * W + 2 * xw) * C;
        const T* pd = pc + C;
        T* dst = po + ((b * h + y) * w + xw) * C;
        for (long c = 0; c < C; ++c)
          dst[c] = (sg[0] * pa[c] + sg[1] * pb[c] + sg[2] * pc[c] + sg[3] * pd[c]) * T(0.5);
      }
  detail::set_backward<T>(out, [x, sg, B, H, W, C, h, w](const T* g) mutable {
    x.ensure_grad();
    T* gx = x.grad().data();
    for (long b = 0; b < B; ++b)
      for (long y = 0; y < h; ++y)
        for (long xw = 0; xw < w; ++xw) {
          T* pa = gx + ((b * H + 2 * y) * W + 2 * xw) * C;
          T* pb = pa + C;
          T* pc = gx + ((b * H + 2 * y + 1) * W + 2 * xw) * C;
          T* pd = pc + C;
          const T* src = g + ((b * h + y) * w + xw) * C;
          for (long c = 0; c < C; ++c) {
            T v = src[c] * T(0.5);
            pa[c] += sg[0] * v;
            pb[c] += sg[1] * v;
            pc[c] += sg[2] * v;
            pd[c] += sg[3] * v;
          }
        }
  });
  return out;
}

template <typename T>
std::array<Tensor<T>, 4> wpt_step(Tensor<T> x) {
  return {wpt_band_step(x, 0), wpt_band_step(x, 1), wpt_band_step(x, 2), wpt_band_step(x, 3)};
}

// One synthesis step from the four bands of a parent.
template <typename T>
Tensor<T> wpt_unstep(Tensor<T> ll, Tensor<T> lh, Tensor<T> hl, Tensor<T> hh) {
  long B = ll.shape()[0], h = ll.shape()[1], w = ll.shape()[2], C = ll.shape()[3];
  long H = 2 * h, W = 2 * w;
  Tensor<T> out = detail::make_op<T>({B, H, W, C}, {ll, lh, hl, hh});
  const T* bands[4] = {ll.data(), lh.data(), hl.data(), hh.data()};
  auto sgs = detail::wpt_signs<T>();
  T* po = out.data();
  for (long b = 0; b < B; ++b)
    for (long y = 0; y < h; ++y)
      for (long xw = 0; xw < w; ++xw) {
        long src = ((b * h + y) * w + xw) * C;
        T* pa = po + ((b * H + 2 * y) * W + 2 * xw) * C;
        T* pb = pa + C;
        T* pc = po + ((b * H + 2 * y + 1) * W + 2 * xw) * C;
        T* pd = pc + C;
        for (long c = 0; c < C; ++c) {
          T v[4] = {bands[0][src + c], bands[1][src + c], bands[2][src + c], bands[3][src + c]};
          pa[c] = (sgs[0][0] * v[0] + sgs[1][0] * v[1] + sgs[2][0] * v[2] + sgs[3][0] * v[3]) * T(0.5);
          pb[c] = (sgs[0][1] * v[0] + sgs[1][1] * v[1] + sgs[2][1] * v[2] + sgs[3][1] * v[3]) * T(0.5);
          pc[c] = (sgs[0][2] * v[0] + sgs[1][2] * v[1] + sgs[2][2] * v[2] + sgs[3][2] * v[3]) * T(0.5);
          pd[c] = (sgs[0][3] * v[0] + sgs[1][3] * v[1] + sgs[2][3] * v[2] + sgs[3][3] * v[3]) * T(0.5);
        }
      }
  auto in = std::array<Tensor<T>, 4>{ll, lh, hl, hh};
  detail::set_backward<T>(out, [in, sgs, B, H, W, C, h, w](const T* g) mutable {
    for (int k = 0; k < 4; ++k) {
      if (!in[(size_t)k].requires_grad()) continue;
      in[(size_t)k].ensure_grad();
      T* gb = in[(size_t)k].grad().data();
      const auto& sg = sgs[(size_t)k];
      for (long b = 0; b < B; ++b)
        for (long y = 0; y < h; ++y)
          for (long xw = 0; xw < w; ++xw) {
            const T* pa = g + ((b * H + 2 * y) * W + 2 * xw) * C;
            const T* pb = pa + C;
            const T* pc = g + ((b * H + 2 * y + 1) * W + 2 * xw) * C;
            const T* pd = pc + C;
            T* dst = gb + ((b * h + y) * w + xw) * C;
            for (long c = 0; c < C; ++c)
              dst[c] += (sg[0] * pa[c] + sg[1] * pb[c] + sg[2] * pc[c] + sg[3] * pd[c]) * T(0.5);
          }
    }
  });
  return out;
}

// Full packet decomposition to a fixed level. bands[p] holds packet path p
// written in base 4, most significant digit first.
template <typename T>
struct SubbandSet {
  long level = 0;
  std::vector<Tensor<T>> bands;
};

template <typename T>
SubbandSet<T> wpt_decompose(Tensor<T> x, long level) {
  SubbandSet<T> s;
  s.level = level;
  s.bands = {x};
  for (long l = 0; l < level; ++l) {
    std::vector<Tensor<T>> next;
    next.reserve(s.bands.size() * 4);
    for (auto& b : s.bands) {
      auto st = wpt_step(b);
      for (auto& t : st) next.push_back(t);
    }
    s.bands = std::move(next);
  }
  return s;
}

template <typename T>
Tensor<T> wpt_reconstruct(const SubbandSet<T>& s) {
  std::vector<Tensor<T>> cur = s.bands;
  for (long l = 0; l < s.level; ++l) {
    std::vector<Tensor<T>> next;
    next.reserve(cur.size() / 4);
    for (size_t i = 0; i < cur.size(); i += 4)
      next.push_back(wpt_unstep(cur[i], cur[i + 1], cur[i + 2], cur[i + 3]));
    cur = std::move(next);
  }
  return cur[0];
}

// Repeated LL extraction: path 00..0 at the given level.
template <typename T>
Tensor<T> low_band(Tensor<T> x, long level) {
  Tensor<T> cur = x;
  for (long l = 0; l < level; ++l) cur = wpt_band_step(cur, 0);
  return cur;
}

// (level-1) LL steps, then the detail bands of the final step,
// concatenated on the channel axis as [LH,HL,HH] -> 3C channels.
template <typename T>
Tensor<T> high_bands(Tensor<T> x, long level) {
  Tensor<T> cur = x;
  for (long l = 0; l < level - 1; ++l) cur = wpt_band_step(cur, 0);
  auto lh = wpt_band_step(cur, 1);
  auto hl = wpt_band_step(cur, 2);
  auto hh = wpt_band_step(cur, 3);
  return concat<T>({lh, hl, hh}, -1);
}

}  // namespace sodasr

#endif  // SODASR_WAVELET_HPP_

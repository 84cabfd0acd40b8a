// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_WAT_HPP_
#define SODASR_WAT_HPP_

// Wavelet augmentation transformer. Feature maps are packet decomposed,
// the per level low bands are mixed by attention across the batch axis
// (BAA) and by multi level deformable attention (MHDA), then each level
// is reconstructed with its untouched detail bands and the levels are
// fused. All mixing weights start at zero, so a fresh module is an
// identity map and training moves it away from that gradually.

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sodasr/nn.hpp"
#include "sodasr/tensor.hpp"
#include "sodasr/wavelet.hpp"

namespace sodasr {

template <typename T>
struct WatParams {
  long channels = 0;
  long heads = 4;
  long points = 4;              // sampling points per head per level
  long mlp_hidden = 0;          // defaults to 2*channels
  std::vector<long> levels = {1, 2, 3, 4};
  bool fuse_sum = false;        // mean fusion unless set

  // batch axis attention
  Tensor<T> wq, wk, wv, wo;
  // deformable attention
  Tensor<T> ln1_g, ln1_b;
  Tensor<T> w_off, b_off;       // C -> heads*|levels|*points*2
  Tensor<T> w_att, b_att;       // C -> heads*|levels|*points
  Tensor<T> w_val, w_out;       // C -> C (head blocks), C -> C
  // feed forward
  Tensor<T> ln2_g, ln2_b;
  Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  void init(long C, Rng& rng) {
    channels = C;
    if (C % heads) throw std::runtime_error("wat: channels must divide heads");
    if (mlp_hidden == 0) mlp_hidden = 2 * C;
    long L = (long)levels.size();
    T sd = (T)0.02;
    wq = Tensor<T>::randn({C, C}, rng, sd);
    wk = Tensor<T>::randn({C, C}, rng, sd);
    wv = Tensor<T>::randn({C, C}, rng, sd);
    wo = Tensor<T>::zeros({C, C});
    ln1_g = Tensor<T>::full({C}, T(1));
    ln1_b = Tensor<T>::zeros({C});
    w_off = Tensor<T>::zeros({C, heads * L * points * 2});
    b_off = Tensor<T>::zeros({heads * L * points * 2});
    w_att = Tensor<T>::zeros({C, heads * L * points});
    b_att = Tensor<T>::zeros({heads * L * points});
    w_val = Tensor<T>::randn({C, C}, rng, sd);
    w_out = Tensor<T>::zeros({C, C});
    ln2_g = Tensor<T>::full({C}, T(1));
    ln2_b = Tensor<T>::zeros({C});
    mlp_w1 = Tensor<T>::randn({C, mlp_hidden}, rng, sd);
    mlp_b1 = Tensor<T>::zeros({mlp_hidden});
    mlp_w2 = Tensor<T>::zeros({mlp_hidden, C});
    mlp_b2 = Tensor<T>::zeros({C});
    for (auto* p : params()) p->set_requires_grad(true);
  }

  std::vector<Tensor<T>*> params() {
    return {&wq,    &wk,    &wv,    &wo,    &ln1_g,  &ln1_b,  &w_off,  &b_off,
            &w_att, &b_att, &w_val, &w_out, &ln2_g,  &ln2_b,  &mlp_w1, &mlp_b1,
            &mlp_w2, &mlp_b2};
  }
  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    return {{"wq", &wq},         {"wk", &wk},         {"wv", &wv},
            {"wo", &wo},         {"ln1_g", &ln1_g},   {"ln1_b", &ln1_b},
            {"w_off", &w_off},   {"b_off", &b_off},   {"w_att", &w_att},
            {"b_att", &b_att},   {"w_val", &w_val},   {"w_out", &w_out},
            {"ln2_g", &ln2_g},   {"ln2_b", &ln2_b},   {"mlp_w1", &mlp_w1},
            {"mlp_b1", &mlp_b1}, {"mlp_w2", &mlp_w2}, {"mlp_b2", &mlp_b2}};
  }
};

// Self attention across the batch axis: tokens at the same spatial site
// exchange information between batch samples. tokens [B,n,C] -> [B,n,C].
template <typename T>
Tensor<T> baa_forward(Tensor<T> tokens, WatParams<T>& p) {
  long C = p.channels;
  Tensor<T> t = permute(tokens, {1, 0, 2});  // [n,B,C]
  Tensor<T> q = matmul(t, p.wq);
  Tensor<T> k = matmul(t, p.wk);
  Tensor<T> v = matmul(t, p.wv);
  Tensor<T> logits = scale(matmul(q, permute(k, {0, 2, 1})), (T)(1.0 / std::sqrt((double)C)));
  Tensor<T> att = softmax(logits);           // [n,B,B]
  Tensor<T> mixed = matmul(matmul(att, v), p.wo);
  return tokens + permute(mixed, {1, 0, 2});
}

// Reference point per token: the normalized center of its grid cell,
// (cx,cy) in [0,1], levels concatenated in order. Returns [1,N,2].
template <typename T>
Tensor<T> compute_reference_points(const std::vector<long>& levels, long h, long w) {
  std::vector<T> pts;
  for (long l : levels) {
    long hl = h >> l, wl = w >> l;
    for (long y = 0; y < hl; ++y)
      for (long x = 0; x < wl; ++x) {
        pts.push_back((T)((x + 0.5) / (double)wl));
        pts.push_back((T)((y + 0.5) / (double)hl));
      }
  }
  return Tensor<T>::from_vector({1, (long)pts.size() / 2, 2}, pts);
}

// Multi level deformable attention with pre-norm and residual.
// tokens [B,N,C]; lowmaps[l] [B,h_l,w_l,C]; refs [1,N,2].
template <typename T>
Tensor<T> mhda_forward(Tensor<T> tokens, const std::vector<Tensor<T>>& lowmaps,
                       Tensor<T> refs, WatParams<T>& p) {
  long B = tokens.shape()[0], N = tokens.shape()[1], C = p.channels;
  long H = p.heads, L = (long)p.levels.size(), K = p.points, Ch = C / H;

  Tensor<T> z = layer_norm(tokens, p.ln1_g, p.ln1_b);
  Tensor<T> off = reshape(linear(z, p.w_off, p.b_off), {B, N, H, L, K, 2});
  Tensor<T> att = softmax(reshape(linear(z, p.w_att, p.b_att), {B, N, H, L * K}));

  // Per head value projections of each level map, done once per level.
  std::vector<Tensor<T>> vals;  // [B,h_l,w_l,C], head h occupies channels [h*Ch,(h+1)*Ch)
  for (long l = 0; l < L; ++l) vals.push_back(linear(lowmaps[(size_t)l], p.w_val));

  // refs repeated K times per token: [1,N*K,2]
  Tensor<T> refs_k;
  {
    NoGrad ng;
    refs_k = Tensor<T>::zeros({1, N * K, 2});
    const T* pr = refs.data();
    T* pk = refs_k.data();
    for (long i = 0; i < N; ++i)
      for (long k = 0; k < K; ++k) {
        pk[(i * K + k) * 2 + 0] = pr[i * 2 + 0];
        pk[(i * K + k) * 2 + 1] = pr[i * 2 + 1];
      }
  }

  std::vector<Tensor<T>> head_acc;
  for (long h = 0; h < H; ++h) {
    Tensor<T> acc;
    Tensor<T> att_h = reshape(slice(att, 2, h, 1), {B, N, L, K});
    for (long l = 0; l < L; ++l) {
      Tensor<T> off_hl =
          reshape(slice(reshape(slice(off, 2, h, 1), {B, N, L, K, 2}), 2, l, 1), {B, N * K, 2});
      Tensor<T> locs = refs_k + off_hl;
      Tensor<T> vmap = slice(vals[(size_t)l], 3, h * Ch, Ch);
      Tensor<T> sampled = reshape(bilinear_sample(vmap, locs), {B, N, K, Ch});
      Tensor<T> a = reshape(slice(att_h, 2, l, 1), {B, N, K, 1});
      Tensor<T> contrib = sum(sampled * a, 2);  // [B,N,Ch]
      acc = acc.defined() ? acc + contrib : contrib;
    }
    head_acc.push_back(acc);
  }
  Tensor<T> heads_cat = concat(head_acc, -1);           // [B,N,C]
  return tokens + matmul(heads_cat, p.w_out);
}

// Detail bands kept aside during wat_forward, for inspection in tests.
template <typename T>
struct WatTrace {
  std::vector<std::array<Tensor<T>, 3>> details;  // per LL-chain step: LH,HL,HH
};

// x [B,h,w,C] -> [B,h,w,C]
template <typename T>
Tensor<T> wat_forward(Tensor<T> x, WatParams<T>& p, WatTrace<T>* trace = nullptr) {
  long B = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  long Lmax = 0;
  for (long l : p.levels) Lmax = std::max(Lmax, l);
  if ((h % (1 << Lmax)) || (w % (1 << Lmax)))
    throw std::runtime_error("wat: spatial size not divisible by 2^max level");

  // Shared LL chain with detail bands kept for reconstruction.
  std::vector<Tensor<T>> lls = {x};
  std::vector<std::array<Tensor<T>, 3>> dets;
  for (long l = 1; l <= Lmax; ++l) {
    auto st = wpt_step(lls.back());
    lls.push_back(st[0]);
    dets.push_back({st[1], st[2], st[3]});
  }
  if (trace) trace->details = dets;

  // BAA per level on the low band tokens.
  std::vector<Tensor<T>> tok;
  for (long l : p.levels) {
    Tensor<T> m = lls[(size_t)l];
    long n = m.shape()[1] * m.shape()[2];
    tok.push_back(baa_forward(reshape(m, {B, n, p.channels}), p));
  }

  // MHDA over the concatenated token set, sampling the BAA-mixed maps.
  std::vector<Tensor<T>> maps;
  std::vector<long> counts;
  for (size_t i = 0; i < p.levels.size(); ++i) {
    long l = p.levels[i];
    maps.push_back(reshape(tok[i], {B, h >> l, w >> l, p.channels}));
    counts.push_back(tok[i].shape()[1]);
  }
  Tensor<T> all_tok = concat(tok, 1);
  Tensor<T> refs = compute_reference_points<T>(p.levels, h, w);
  Tensor<T> t2 = mhda_forward(all_tok, maps, refs, p);

  // Pre-norm feed forward with residual.
  Tensor<T> z2 = layer_norm(t2, p.ln2_g, p.ln2_b);
  Tensor<T> t3 = t2 + linear(gelu(linear(z2, p.mlp_w1, p.mlp_b1)), p.mlp_w2, p.mlp_b2);

  // Per level reconstruction with the original detail bands, then fusion.
  Tensor<T> fused;
  long start = 0;
  for (size_t i = 0; i < p.levels.size(); ++i) {
    long l = p.levels[i];
    Tensor<T> low = reshape(slice(t3, 1, start, counts[i]), {B, h >> l, w >> l, p.channels});
    start += counts[i];
    Tensor<T> cur = low;
    for (long j = l; j >= 1; --j)
      cur = wpt_unstep(cur, dets[(size_t)j - 1][0], dets[(size_t)j - 1][1],
                       dets[(size_t)j - 1][2]);
    fused = fused.defined() ? fused + cur : cur;
  }
  if (!p.fuse_sum) fused = scale(fused, (T)(1.0 / (double)p.levels.size()));
  return fused;
}

}  // namespace sodasr

#endif  // SODASR_WAT_HPP_

// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_BACKBONE_HPP_
#define SODASR_BACKBONE_HPP_

// Toy SR generator with an explicit feature-extractor/reconstructor split
// and a switchable channel attention normalization, plus the small
// discriminator used for the high frequency adversarial losses.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sodasr/nn.hpp"
#include "sodasr/rng.hpp"
#include "sodasr/tensor.hpp"

namespace sodasr {

enum class NormMode { kSoftmax, kGumbelSoftmax };

template <typename T>
struct ConvLayer {
  Tensor<T> w, b;
  void init(long kh, long kw, long cin, long cout, Rng& rng) {
    T sd = (T)std::sqrt(2.0 / (double)(kh * kw * cin));
    w = Tensor<T>::randn({kh, kw, cin, cout}, rng, sd);
    b = Tensor<T>::zeros({cout});
  }
};

// Fixed gain for the RMS-normalized gate logits. Keeps the trained logit
// scale architecture-controlled (cosine-attention style), so small-tau
// Gumbel draws re-pick the dominant channel almost surely and stochasticity
// surfaces only at genuinely ambiguous gates.
constexpr double kCaLogitGain = 8.0;
constexpr double kCaNormEps = 1e-6;

// Per channel gate weights from pooled features. Scores are v = exp(logits),
// so log v is the logit itself and Gumbel-Softmax((log v + g)/tau) reduces to
// plain softmax of the logits when g = 0 and tau = 1. rng == nullptr draws
// no noise.
template <typename T>
Tensor<T> ca_weights(Tensor<T> f, Tensor<T> w, Tensor<T> b, NormMode mode, T tau,
                     Rng* rng) {
  Tensor<T> z = linear(global_avg_pool(f), w, b);  // [B,C]
  z = z - mean(z, 1, true);
  Tensor<T> ms = mean(square(z), 1, true);
  Tensor<T> inv = exp_t(scale(log_t(add_scalar(ms, (T)kCaNormEps)), T(-0.5)));
  Tensor<T> logits = scale(z * inv, (T)kCaLogitGain);
  if (mode == NormMode::kGumbelSoftmax) {
    if (tau <= T(0)) throw std::runtime_error("channel_attention: tau must be positive");
    if (rng) {
      Tensor<T> g;
      {
        NoGrad ng;
        g = Tensor<T>::zeros(logits.shape());
        for (long i = 0; i < g.numel(); ++i) g.data()[i] = (T)rng->gumbel();
      }
      logits = logits + g;
    }
    logits = scale(logits, (T)(1.0 / (double)tau));
  }
  return softmax(logits);
}

template <typename T>
Tensor<T> channel_attention(Tensor<T> f, Tensor<T> w, Tensor<T> b, NormMode mode,
                            T tau, Rng* rng) {
  long B = f.shape()[0], C = f.shape()[3];
  Tensor<T> wt = ca_weights(f, w, b, mode, tau, rng);
  return f * reshape(wt, {B, 1, 1, C});
}

template <typename T>
struct ResBlock {
  ConvLayer<T> c1, c2;
  Tensor<T> ca_w, ca_b;
  void init(long C, Rng& rng) {
    c1.init(3, 3, C, C, rng);
    c2.init(3, 3, C, C, rng);
    ca_w = Tensor<T>::randn({C, C}, rng, (T)0.01);
    ca_b = Tensor<T>::zeros({C});
  }
};

template <typename T>
struct ToySRNet {
  long channels = 32, blocks = 4, scale = 4;
  NormMode norm_mode = NormMode::kSoftmax;
  T tau = (T)1;

  ConvLayer<T> head;
  std::vector<ResBlock<T>> body;
  ConvLayer<T> up, tail;

  void init(long C, long R, long s, Rng& rng) {
    if (s != 2 && s != 4) throw std::runtime_error("net: scale must be 2 or 4");
    channels = C;
    blocks = R;
    scale = s;
    head.init(3, 3, 3, C, rng);
    body.assign((size_t)R, ResBlock<T>{});
    for (auto& blk : body) blk.init(C, rng);
    up.init(3, 3, C, C, rng);
    tail.init(3, 3, C, 3, rng);
    for (auto* p : params()) p->set_requires_grad(true);
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> out = {&head.w, &head.b};
    for (auto& blk : body) {
      out.push_back(&blk.c1.w);
      out.push_back(&blk.c1.b);
      out.push_back(&blk.c2.w);
      out.push_back(&blk.c2.b);
      out.push_back(&blk.ca_w);
      out.push_back(&blk.ca_b);
    }
    out.push_back(&up.w);
    out.push_back(&up.b);
    out.push_back(&tail.w);
    out.push_back(&tail.b);
    return out;
  }

  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<T>*>> out = {{"head.w", &head.w},
                                                           {"head.b", &head.b}};
    for (size_t i = 0; i < body.size(); ++i) {
      std::string pre = "body" + std::to_string(i) + ".";
      out.push_back({pre + "c1.w", &body[i].c1.w});
      out.push_back({pre + "c1.b", &body[i].c1.b});
      out.push_back({pre + "c2.w", &body[i].c2.w});
      out.push_back({pre + "c2.b", &body[i].c2.b});
      out.push_back({pre + "ca.w", &body[i].ca_w});
      out.push_back({pre + "ca.b", &body[i].ca_b});
    }
    out.push_back({"up.w", &up.w});
    out.push_back({"up.b", &up.b});
    out.push_back({"tail.w", &tail.w});
    out.push_back({"tail.b", &tail.b});
    return out;
  }

  long param_count() {
    long n = 0;
    for (auto* p : params()) n += p->numel();
    return n;
  }
};

// head + body, pre-upsampling. This is where WAT plugs in.
template <typename T>
Tensor<T> extract_features(ToySRNet<T>& net, Tensor<T> x, Rng* rng = nullptr) {
  Tensor<T> h0 = conv2d(x, net.head.w, net.head.b, 1, 1);
  Tensor<T> h = h0;
  for (auto& blk : net.body) {
    Tensor<T> b1 = relu(conv2d(h, blk.c1.w, blk.c1.b, 1, 1));
    Tensor<T> b2 = conv2d(b1, blk.c2.w, blk.c2.b, 1, 1);
    h = h + channel_attention(b2, blk.ca_w, blk.ca_b, net.norm_mode, net.tau, rng);
  }
  return h0 + h;
}

// nearest upsample + conv + tail, all linear past the body so single-block
// nets keep the teacher's stochastic passes unbiased around the softmax
// gate. Unclamped; evaluation paths clamp to [0,1].
template <typename T>
Tensor<T> reconstruct(ToySRNet<T>& net, Tensor<T> features) {
  Tensor<T> u = conv2d(nearest_upsample(features, net.scale), net.up.w, net.up.b, 1, 1);
  return conv2d(u, net.tail.w, net.tail.b, 1, 1);
}

template <typename T>
Tensor<T> sr_forward(ToySRNet<T>& net, Tensor<T> x, Rng* rng = nullptr) {
  return reconstruct(net, extract_features(net, x, rng));
}

template <typename T>
struct Discriminator {
  ConvLayer<T> c1, c2, c3;
  Tensor<T> fc_w, fc_b;

  void init(long in_ch, Rng& rng) {
    c1.init(3, 3, in_ch, 32, rng);
    c2.init(3, 3, 32, 64, rng);
    c3.init(3, 3, 64, 64, rng);
    fc_w = Tensor<T>::zeros({64, 1});
    fc_b = Tensor<T>::zeros({1});
    for (auto* p : params()) p->set_requires_grad(true);
  }

  std::vector<Tensor<T>*> params() {
    return {&c1.w, &c1.b, &c2.w, &c2.b, &c3.w, &c3.b, &fc_w, &fc_b};
  }
  std::vector<std::pair<std::string, Tensor<T>*>> named_params() {
    return {{"c1.w", &c1.w}, {"c1.b", &c1.b}, {"c2.w", &c2.w}, {"c2.b", &c2.b},
            {"c3.w", &c3.w}, {"c3.b", &c3.b}, {"fc.w", &fc_w}, {"fc.b", &fc_b}};
  }
};

// x [B,h,w,in_ch] -> probability per batch element, shape [B], in (0,1).
template <typename T>
Tensor<T> discriminator_forward(Discriminator<T>& d, Tensor<T> x) {
  Tensor<T> h = relu(conv2d(x, d.c1.w, d.c1.b, 2, 1));
  h = relu(conv2d(h, d.c2.w, d.c2.b, 2, 1));
  h = relu(conv2d(h, d.c3.w, d.c3.b, 2, 1));
  Tensor<T> p = sigmoid(linear(global_avg_pool(h), d.fc_w, d.fc_b));
  return reshape(p, {x.shape()[0]});
}

}  // namespace sodasr

#endif  // SODASR_BACKBONE_HPP_

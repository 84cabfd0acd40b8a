// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "sodasr/backbone.hpp"
#include "sodasr/gradcheck.hpp"

namespace sodasr {
namespace {

TEST(Backbone, ForwardShapes) {
  Rng rng(21);
  ToySRNet<float> net;
  net.init(8, 2, 4, rng);
  Tensor<float> x = Tensor<float>::randu({2, 12, 12, 3}, rng);
  Tensor<float> y = sr_forward(net, x);
  EXPECT_EQ(y.shape(), (Shape{2, 48, 48, 3}));

  ToySRNet<float> net2;
  net2.init(8, 2, 2, rng);
  Tensor<float> x2 = Tensor<float>::randu({1, 8, 8, 3}, rng);
  EXPECT_EQ(sr_forward(net2, x2).shape(), (Shape{1, 16, 16, 3}));
}

TEST(Backbone, ParamCountFrozenAtDefaults) {
  Rng rng(22);
  ToySRNet<float> net;
  net.init(32, 4, 4, rng);
  // head 896 + 4 blocks of (9248 + 9248 + 1056) + up 9248 + tail 867
  EXPECT_EQ(net.param_count(), 89219);
  EXPECT_EQ(net.params().size(), 30u);
  EXPECT_EQ(net.named_params().size(), 30u);
}

TEST(Backbone, SoftmaxModeIsDeterministic) {
  Rng rng(23);
  ToySRNet<float> net;
  net.init(8, 2, 4, rng);
  Tensor<float> x = Tensor<float>::randu({2, 12, 12, 3}, rng);
  Tensor<float> f1 = extract_features(net, x);
  Tensor<float> f2 = extract_features(net, x);
  ASSERT_EQ(f1.shape(), (Shape{2, 12, 12, 8}));
  EXPECT_EQ(std::memcmp(f1.data(), f2.data(), sizeof(float) * f1.numel()), 0);
}

TEST(Backbone, GumbelModeDiffersAcrossDraws) {
  Rng rng(24);
  ToySRNet<float> net;
  net.init(8, 2, 4, rng);
  net.norm_mode = NormMode::kGumbelSoftmax;
  net.tau = 0.1f;
  Tensor<float> x = Tensor<float>::randu({2, 12, 12, 3}, rng);
  Rng noise(100);
  Tensor<float> f1 = extract_features(net, x, &noise);
  Tensor<float> f2 = extract_features(net, x, &noise);
  double d = 0;
  for (long i = 0; i < f1.numel(); ++i)
    d = std::max(d, (double)std::abs(f1.data()[i] - f2.data()[i]));
  EXPECT_GT(d, 1e-6);
}

TEST(Backbone, EqualScoresGiveUniformWeights) {
  Rng rng(25);
  Tensor<float> f = Tensor<float>::randu({2, 4, 4, 8}, rng);
  Tensor<float> w = Tensor<float>::zeros({8, 8});
  Tensor<float> b = Tensor<float>::zeros({8});
  Tensor<float> wt = ca_weights(f, w, b, NormMode::kSoftmax, 1.0f, nullptr);
  for (long i = 0; i < wt.numel(); ++i) EXPECT_NEAR(wt.data()[i], 1.0f / 8.0f, 1e-7);
  Tensor<float> out = channel_attention(f, w, b, NormMode::kSoftmax, 1.0f, nullptr);
  for (long i = 0; i < out.numel(); ++i)
    EXPECT_NEAR(out.data()[i], f.data()[i] / 8.0f, 1e-7);
}

TEST(Backbone, GumbelZeroNoiseTauOneEqualsSoftmax) {
  Rng rng(26);
  Tensor<float> f = Tensor<float>::randu({3, 6, 6, 8}, rng);
  Tensor<float> w = Tensor<float>::randn({8, 8}, rng, 0.5f);
  Tensor<float> b = Tensor<float>::randn({8}, rng, 0.1f);
  Tensor<float> a = ca_weights(f, w, b, NormMode::kSoftmax, 1.0f, nullptr);
  Tensor<float> g = ca_weights(f, w, b, NormMode::kGumbelSoftmax, 1.0f, nullptr);
  for (long i = 0; i < a.numel(); ++i)
    EXPECT_NEAR(a.data()[i], g.data()[i], 1e-6);
}

TEST(Backbone, GumbelWeightsNormalizedForAnyDraw) {
  Rng rng(27);
  Tensor<float> f = Tensor<float>::randu({4, 6, 6, 8}, rng);
  Tensor<float> w = Tensor<float>::randn({8, 8}, rng, 0.5f);
  Tensor<float> b = Tensor<float>::zeros({8});
  Rng noise(7);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor<float> wt = ca_weights(f, w, b, NormMode::kGumbelSoftmax, 0.1f, &noise);
    for (long r = 0; r < 4; ++r) {
      float s = 0;
      for (long c = 0; c < 8; ++c) {
        float v = wt.data()[r * 8 + c];
        // losing channels underflow to exactly 0 at sharp temperatures
        EXPECT_GE(v, 0.0f);
        s += v;
      }
      EXPECT_NEAR(s, 1.0f, 1e-6);
    }
  }
}

TEST(Backbone, GumbelRequiresPositiveTau) {
  Rng rng(28);
  Tensor<float> f = Tensor<float>::randu({1, 4, 4, 4}, rng);
  Tensor<float> w = Tensor<float>::zeros({4, 4});
  Tensor<float> b = Tensor<float>::zeros({4});
  EXPECT_THROW(ca_weights(f, w, b, NormMode::kGumbelSoftmax, 0.0f, nullptr),
               std::runtime_error);
}

TEST(Backbone, GradFlowsToHeadThroughReconstruct) {
  Rng rng(29);
  ToySRNet<float> net;
  net.init(8, 2, 4, rng);
  Tensor<float> x = Tensor<float>::randu({1, 8, 8, 3}, rng);
  Tensor<float> y = sr_forward(net, x);
  Tensor<float> loss = mean(abs_t(y));
  loss.backward();
  double g = 0;
  for (float v : net.head.w.grad()) g += std::abs((double)v);
  EXPECT_GT(g, 0.0);
}

TEST(Backbone, DiscriminatorHalfAtInitThenInRange) {
  Rng rng(30);
  Discriminator<float> d;
  d.init(6, rng);
  Tensor<float> x = Tensor<float>::randn({2, 16, 16, 6}, rng);
  Tensor<float> p = discriminator_forward(d, x);
  ASSERT_EQ(p.shape(), (Shape{2}));
  EXPECT_FLOAT_EQ(p.data()[0], 0.5f);
  EXPECT_FLOAT_EQ(p.data()[1], 0.5f);

  d.fc_w = Tensor<float>::randn({64, 1}, rng, 0.3f);
  d.fc_w.set_requires_grad(true);
  Tensor<float> p2 = discriminator_forward(d, x);
  for (long i = 0; i < 2; ++i) {
    EXPECT_GT(p2.data()[i], 0.0f);
    EXPECT_LT(p2.data()[i], 1.0f);
  }
}

TEST(Backbone, DiscriminatorChannelMismatchThrows) {
  Rng rng(31);
  Discriminator<float> d;
  d.init(6, rng);
  Tensor<float> x = Tensor<float>::randn({1, 8, 8, 5}, rng);
  EXPECT_THROW(discriminator_forward(d, x), std::runtime_error);
}

TEST(Backbone, DiscriminatorGradcheck) {
  Rng rng(32);
  Discriminator<double> d;
  d.init(6, rng);
  d.fc_w = Tensor<double>::randn({64, 1}, rng, 0.3);
  d.fc_w.set_requires_grad(true);
  Tensor<double> x = Tensor<double>::randn({1, 8, 8, 6}, rng);
  x.set_requires_grad(true);
  std::vector<Tensor<double>> inputs = {x, d.c1.b, d.c2.b, d.c3.b, d.fc_w, d.fc_b};
  auto f = [&]() { return sum(discriminator_forward(d, x)); };
  EXPECT_LT(finite_difference_check(f, inputs), 1e-3);
}

}  // namespace
}  // namespace sodasr

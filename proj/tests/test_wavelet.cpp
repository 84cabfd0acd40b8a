// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#include "sodasr/wavelet.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "sodasr/gradcheck.hpp"

using namespace sodasr;

TEST(Wavelet, SingleBlockButterfly) {
  // block (a b / c d) = (1 2 / 3 4)
  auto x = Tensor<double>::from_vector({1, 2, 2, 1}, {1, 2, 3, 4});
  auto s = wpt_step(x);
  EXPECT_DOUBLE_EQ(s[0].item(), 5.0);   // (1+2+3+4)/2
  EXPECT_DOUBLE_EQ(s[1].item(), -2.0);  // (1+2-3-4)/2
  EXPECT_DOUBLE_EQ(s[2].item(), -1.0);  // (1-2+3-4)/2
  EXPECT_DOUBLE_EQ(s[3].item(), 0.0);   // (1-2-3+4)/2
  auto back = wpt_unstep(s[0], s[1], s[2], s[3]);
  for (long i = 0; i < 4; ++i) EXPECT_NEAR(back.data()[i], x.data()[i], 1e-14);
}

TEST(Wavelet, EdgeOrientation) {
  // top row 1, bottom row 0: vertical variation lands in LH
  auto x = Tensor<double>::from_vector({1, 2, 2, 1}, {1, 1, 0, 0});
  auto s = wpt_step(x);
  EXPECT_DOUBLE_EQ(s[1].item(), 1.0);
  EXPECT_DOUBLE_EQ(s[2].item(), 0.0);
  // left column 1, right column 0: horizontal variation lands in HL
  auto y = Tensor<double>::from_vector({1, 2, 2, 1}, {1, 0, 1, 0});
  auto sy = wpt_step(y);
  EXPECT_DOUBLE_EQ(sy[1].item(), 0.0);
  EXPECT_DOUBLE_EQ(sy[2].item(), 1.0);
}

TEST(Wavelet, PerfectReconstructionF32) {
  Rng rng(31);
  auto x = Tensor<float>::randn({2, 16, 16, 3}, rng);
  auto rec = wpt_reconstruct(wpt_decompose(x, 3));
  float worst = 0;
  for (long i = 0; i < x.numel(); ++i)
    worst = std::max(worst, std::abs(rec.data()[i] - x.data()[i]));
  EXPECT_LT(worst, 1e-5f);
}

TEST(Wavelet, PerfectReconstructionF64) {
  Rng rng(32);
  auto x = Tensor<double>::randn({2, 16, 16, 3}, rng);
  auto rec = wpt_reconstruct(wpt_decompose(x, 3));
  double worst = 0;
  for (long i = 0; i < x.numel(); ++i)
    worst = std::max(worst, std::abs(rec.data()[i] - x.data()[i]));
  EXPECT_LT(worst, 1e-10);
}

TEST(Wavelet, Parseval) {
  Rng rng(33);
  auto x = Tensor<double>::randn({1, 16, 16, 2}, rng);
  double ex = 0;
  for (long i = 0; i < x.numel(); ++i) ex += x.data()[i] * x.data()[i];
  for (long level : {1L, 2L, 3L}) {
    auto s = wpt_decompose(x, level);
    double eb = 0;
    for (auto& b : s.bands)
      for (long i = 0; i < b.numel(); ++i) eb += b.data()[i] * b.data()[i];
    EXPECT_NEAR(eb / ex, 1.0, 1e-12) << "level " << level;
  }
}

TEST(Wavelet, BandCountAndShapes) {
  Rng rng(34);
  auto x = Tensor<float>::randn({2, 16, 16, 5}, rng);
  auto s = wpt_decompose(x, 3);
  EXPECT_EQ(s.level, 3);
  EXPECT_EQ(s.bands.size(), 64u);
  for (auto& b : s.bands) EXPECT_EQ(b.shape(), (Shape{2, 2, 2, 5}));
}

TEST(Wavelet, Base4PathOrdering) {
  Rng rng(35);
  auto x = Tensor<double>::randn({1, 8, 8, 2}, rng);
  auto s2 = wpt_decompose(x, 2);
  auto lvl1 = wpt_step(x);
  for (int i = 0; i < 4; ++i) {
    auto children = wpt_step(lvl1[(size_t)i]);
    for (int j = 0; j < 4; ++j) {
      auto& got = s2.bands[(size_t)(4 * i + j)];
      auto& want = children[(size_t)j];
      ASSERT_EQ(got.shape(), want.shape());
      for (long k = 0; k < got.numel(); ++k)
        ASSERT_DOUBLE_EQ(got.data()[k], want.data()[k]) << "path " << i << j;
    }
  }
}

TEST(Wavelet, ConstantGainPerLevel) {
  const double c = 0.73;
  auto x = Tensor<double>::full({1, 16, 16, 1}, c);
  for (long level : {1L, 2L, 3L, 4L}) {
    auto lb = low_band(x, level);
    double expect = c * std::pow(2.0, (double)level);
    for (long i = 0; i < lb.numel(); ++i) ASSERT_NEAR(lb.data()[i], expect, 1e-12);
  }
  // all other packets of a constant are zero
  auto s = wpt_decompose(x, 2);
  for (size_t p = 1; p < s.bands.size(); ++p)
    for (long i = 0; i < s.bands[p].numel(); ++i) ASSERT_NEAR(s.bands[p].data()[i], 0.0, 1e-12);
}

TEST(Wavelet, HighBandsShapeAndContent) {
  Rng rng(36);
  auto x = Tensor<double>::randn({2, 16, 16, 3}, rng);
  for (long level : {1L, 2L, 3L}) {
    auto hb = high_bands(x, level);
    long hs = 16 >> level;
    ASSERT_EQ(hb.shape(), (Shape{2, hs, hs, 9}));
    // matches detail bands of the (level-1)-fold LL
    auto cur = low_band(x, level - 1);
    auto lh = wpt_band_step(cur, 1);
    auto hl = wpt_band_step(cur, 2);
    auto hh = wpt_band_step(cur, 3);
    for (long b = 0; b < 2; ++b)
      for (long y = 0; y < hs; ++y)
        for (long xw = 0; xw < hs; ++xw)
          for (long c = 0; c < 3; ++c) {
            ASSERT_DOUBLE_EQ(hb.at({b, y, xw, c}), lh.at({b, y, xw, c}));
            ASSERT_DOUBLE_EQ(hb.at({b, y, xw, 3 + c}), hl.at({b, y, xw, c}));
            ASSERT_DOUBLE_EQ(hb.at({b, y, xw, 6 + c}), hh.at({b, y, xw, c}));
          }
  }
}

TEST(Wavelet, Linearity) {
  Rng rng(37);
  auto x = Tensor<double>::randn({1, 8, 8, 2}, rng);
  auto y = Tensor<double>::randn({1, 8, 8, 2}, rng);
  auto combo = scale(x, 2.5) + scale(y, -1.25);
  auto sc = wpt_decompose(combo, 2);
  auto sx = wpt_decompose(x, 2);
  auto sy = wpt_decompose(y, 2);
  for (size_t p = 0; p < sc.bands.size(); ++p)
    for (long i = 0; i < sc.bands[p].numel(); ++i)
      ASSERT_NEAR(sc.bands[p].data()[i],
                  2.5 * sx.bands[p].data()[i] - 1.25 * sy.bands[p].data()[i], 1e-12);
}

TEST(Wavelet, OddSizeThrows) {
  auto x = Tensor<float>::zeros({1, 6, 6, 1});
  EXPECT_THROW(wpt_decompose(x, 2), std::runtime_error);  // 3x3 at level 2
  EXPECT_NO_THROW(wpt_decompose(x, 1));
}

TEST(Wavelet, Gradcheck) {
  Rng rng(38);
  auto x = Tensor<double>::randn({1, 8, 8, 2}, rng);
  EXPECT_LT(finite_difference_check(
                [&] { return sum(square(wpt_reconstruct(wpt_decompose(x, 2)))); }, {x}),
            1e-4);
  EXPECT_LT(finite_difference_check([&] { return sum(square(low_band(x, 2))); }, {x}), 1e-4);
  EXPECT_LT(finite_difference_check([&] { return sum(square(high_bands(x, 2))); }, {x}), 1e-4);
  auto ll = Tensor<double>::randn({1, 4, 4, 2}, rng);
  auto lh = Tensor<double>::randn({1, 4, 4, 2}, rng);
  auto hl = Tensor<double>::randn({1, 4, 4, 2}, rng);
  auto hh = Tensor<double>::randn({1, 4, 4, 2}, rng);
  EXPECT_LT(finite_difference_check(
                [&] { return sum(square(wpt_unstep(ll, lh, hl, hh))); }, {ll, lh, hl, hh}),
            1e-4);
}

TEST(Wavelet, AnalysisAdjointIsSynthesis) {
  // For orthonormal transforms the backward of decompose applied to band
  // seeds equals the synthesis of those seeds.
  Rng rng(39);
  auto x = Tensor<double>::randn({1, 8, 8, 1}, rng);
  x.set_requires_grad(true);
  auto s = wpt_decompose(x, 2);
  SubbandSet<double> seeds;
  seeds.level = 2;
  Tensor<double> weighted = Tensor<double>::scalar(0.0);
  for (auto& b : s.bands) {
    auto r = Tensor<double>::randn(b.shape(), rng);
    seeds.bands.push_back(r);
    weighted = weighted + sum(b * r);
  }
  weighted.backward();
  auto synth = wpt_reconstruct(seeds);
  for (long i = 0; i < x.numel(); ++i) ASSERT_NEAR(x.grad()[(size_t)i], synth.data()[i], 1e-12);
}

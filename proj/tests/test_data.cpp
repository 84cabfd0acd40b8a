// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "sodasr/data.hpp"

namespace sodasr {
namespace {

namespace fs = std::filesystem;

Image constant_image(long h, long w, float v) {
  Image img = Image::zeros({h, w, 3});
  for (long i = 0; i < img.numel(); ++i) img.data()[i] = v;
  return img;
}

TEST(Bicubic, Factor1IsBitExact) {
  Rng rng(40);
  Image img = Image::randu({7, 9, 3}, rng);
  Image out = bicubic_resize(img, 1.0);
  EXPECT_EQ(std::memcmp(out.data(), img.data(), sizeof(float) * img.numel()), 0);
}

TEST(Bicubic, ConstantPreserved) {
  Image img = constant_image(8, 8, 0.37f);
  for (double f : {4.0, 0.25, 2.0, 0.5}) {
    Image out = bicubic_resize(img, f);
    EXPECT_EQ(out.shape()[0], (long)std::llround(8 * f));
    for (long i = 0; i < out.numel(); ++i) ASSERT_NEAR(out.data()[i], 0.37f, 1e-6);
  }
}

TEST(Bicubic, UpsampleFrozenValues) {
  // Catmull-Rom taps at phase 0.25: -0.0703125, 0.8671875, 0.2265625, -0.0234375
  const float row[6] = {0.1f, 0.4f, 0.2f, 0.8f, 0.5f, 0.3f};
  Image img = Image::zeros({4, 6, 3});
  for (long y = 0; y < 4; ++y)
    for (long x = 0; x < 6; ++x)
      for (long c = 0; c < 3; ++c) img.data()[(y * 6 + x) * 3 + c] = row[x];
  Image out = bicubic_resize(img, 2.0);
  ASSERT_EQ(out.shape(), (Shape{8, 12, 3}));
  // out x=3 is u=1.25 over taps 0..3; out x=4 is u=1.75 over taps 0..3
  double e3 = -0.0703125 * 0.1 + 0.8671875 * 0.4 + 0.2265625 * 0.2 - 0.0234375 * 0.8;
  double e4 = -0.0234375 * 0.1 + 0.2265625 * 0.4 + 0.8671875 * 0.2 - 0.0703125 * 0.8;
  for (long y = 0; y < 8; ++y) {
    EXPECT_NEAR(out.at({y, 3, 0}), e3, 1e-6);
    EXPECT_NEAR(out.at({y, 4, 1}), e4, 1e-6);
  }
}

TEST(Bicubic, LinearRampReproducedInInterior) {
  Image img = Image::zeros({16, 16, 3});
  for (long y = 0; y < 16; ++y)
    for (long x = 0; x < 16; ++x)
      for (long c = 0; c < 3; ++c) img.data()[(y * 16 + x) * 3 + c] = (float)x / 16.0f;
  Image out = bicubic_resize(img, 2.0);
  for (long y = 8; y < 24; ++y)
    for (long x = 5; x <= 26; ++x) {
      double u = (x + 0.5) / 2.0 - 0.5;
      ASSERT_NEAR(out.at({y, x, 0}), u / 16.0, 1e-5);
    }
}

TEST(Bicubic, SmoothGradientDownUpRoundtrip) {
  Image img = Image::zeros({32, 32, 3});
  for (long y = 0; y < 32; ++y)
    for (long x = 0; x < 32; ++x)
      for (long c = 0; c < 3; ++c)
        img.data()[(y * 32 + x) * 3 + c] = 0.3f + 0.3f * (float)(x + y) / 64.0f;
  Image rt = bicubic_resize(bicubic_resize(img, 0.5), 2.0);
  double worst = 0.0;
  for (long i = 0; i < img.numel(); ++i)
    worst = std::max(worst, (double)std::abs(rt.data()[i] - img.data()[i]));
  EXPECT_LT(worst, 0.02);
}

TEST(GaussianBlur, ConstantPreservedAndVarianceReduced) {
  Image img = constant_image(16, 16, 0.6f);
  Image out = gaussian_blur(img, 1.8f);
  for (long i = 0; i < out.numel(); ++i) ASSERT_NEAR(out.data()[i], 0.6f, 1e-6);

  Rng rng(41);
  Image noise = Image::randu({32, 32, 3}, rng);
  Image blurred = gaussian_blur(noise, 1.8f);
  auto var = [](const Image& im) {
    double m = 0, s = 0;
    for (long i = 0; i < im.numel(); ++i) m += im.data()[i];
    m /= (double)im.numel();
    for (long i = 0; i < im.numel(); ++i)
      s += (im.data()[i] - m) * (im.data()[i] - m);
    return s / (double)im.numel();
  };
  EXPECT_LT(var(blurred), 0.25 * var(noise));
}

TEST(Degrade, ConstantStaysConstant) {
  Image hr = constant_image(32, 32, 0.42f);
  Rng rng(42);
  DegradationSpec plain{false, 0.0f, 4, 0.0f};
  Image lr = degrade(hr, plain, rng);
  ASSERT_EQ(lr.shape(), (Shape{8, 8, 3}));
  for (long i = 0; i < lr.numel(); ++i) ASSERT_NEAR(lr.data()[i], 0.42f, 1e-6);

  DegradationSpec blurred{true, 1.8f, 4, 0.0f};
  Image lr2 = degrade(hr, blurred, rng);
  for (long i = 0; i < lr2.numel(); ++i) ASSERT_NEAR(lr2.data()[i], 0.42f, 1e-6);
}

TEST(Degrade, NoiseStdWithinTenPercent) {
  Image hr = constant_image(256, 256, 0.5f);
  Rng rng(43);
  DegradationSpec noisy{false, 0.0f, 4, 0.02f};
  Image lr = degrade(hr, noisy, rng);
  double s = 0.0;
  for (long i = 0; i < lr.numel(); ++i) {
    double d = lr.data()[i] - 0.5;
    s += d * d;
  }
  double std_est = std::sqrt(s / (double)lr.numel());
  EXPECT_GT(std_est, 0.018);
  EXPECT_LT(std_est, 0.022);
}

TEST(Degrade, IndivisibleDimsThrow) {
  Image hr = constant_image(13, 16, 0.5f);
  Rng rng(44);
  DegradationSpec spec{false, 0.0f, 4, 0.0f};
  EXPECT_THROW(degrade(hr, spec, rng), std::runtime_error);
}

TEST(Degrade, DeterministicGivenSeed) {
  Rng hr_rng(45);
  Image hr = synthesize_hr(64, hr_rng);
  DegradationSpec spec{true, 1.8f, 4, 0.01f};
  Rng a(7), b(7);
  Image la = degrade(hr, spec, a);
  Image lb = degrade(hr, spec, b);
  EXPECT_EQ(std::memcmp(la.data(), lb.data(), sizeof(float) * la.numel()), 0);
}

TEST(Synthesize, RangeDeterminismDistinctness) {
  Rng a1(46), a2(46), b(47);
  Image ia = synthesize_hr(64, a1);
  Image ia2 = synthesize_hr(64, a2);
  Image ib = synthesize_hr(64, b);
  for (long i = 0; i < ia.numel(); ++i) {
    ASSERT_GE(ia.data()[i], 0.0f);
    ASSERT_LE(ia.data()[i], 1.0f);
  }
  EXPECT_EQ(std::memcmp(ia.data(), ia2.data(), sizeof(float) * ia.numel()), 0);
  double l2 = 0.0;
  for (long i = 0; i < ia.numel(); ++i) {
    double d = ia.data()[i] - ib.data()[i];
    l2 += d * d;
  }
  EXPECT_GT(l2 / (double)ia.numel(), 0.01);
}

TEST(Synthesize, BatchForksPerIndex) {
  Rng rng(48);
  auto set = synthesize_hr(3, 32, rng);
  ASSERT_EQ(set.size(), 3u);
  double d01 = 0;
  for (long i = 0; i < set[0].numel(); ++i)
    d01 += std::abs(set[0].data()[i] - set[1].data()[i]);
  EXPECT_GT(d01 / (double)set[0].numel(), 0.01);
}

// LR pixels encode (y*W+x); HR pixels encode the same at 4x resolution, so a
// decoded pair of top-left corners proves crop alignment.
TEST(Patches, AlignedCrops) {
  long W = 16;
  Image lr = Image::zeros({W, W, 3});
  for (long i = 0; i < W * W; ++i) lr.data()[i * 3] = (float)i / 1000.0f;
  Image hr = Image::zeros({4 * W, 4 * W, 3});
  for (long i = 0; i < 16 * W * W; ++i) hr.data()[i * 3] = (float)i / 100000.0f;
  std::vector<Image> lrs = {lr}, hrs = {hr};
  Rng rng(49);
  PatchBatch pb = extract_patches(lrs, &hrs, 8, 4, 16, rng);
  ASSERT_EQ(pb.lr.shape(), (Shape{16, 8, 8, 3}));
  ASSERT_EQ(pb.hr.shape(), (Shape{16, 32, 32, 3}));
  for (long b = 0; b < 16; ++b) {
    long code = std::lround(pb.lr.at({b, 0, 0, 0}) * 1000.0);
    long i = code / W, j = code % W;
    long hcode = std::lround(pb.hr.at({b, 0, 0, 0}) * 100000.0);
    EXPECT_EQ(hcode, 4 * i * 4 * W + 4 * j);
  }
}

TEST(Patches, OffsetCoverageChiSquared) {
  long W = 11, patch = 8;
  Image lr = Image::zeros({W, W, 3});
  for (long i = 0; i < W * W; ++i) lr.data()[i * 3] = (float)i / 1000.0f;
  std::vector<Image> lrs = {lr};
  Rng rng(50);
  long counts[16] = {0};
  const long draws = 10000;
  for (long t = 0; t < draws; ++t) {
    PatchBatch pb = extract_patches(lrs, nullptr, patch, 4, 1, rng);
    long code = std::lround(pb.lr.at({0, 0, 0, 0}) * 1000.0);
    long i = code / W, j = code % W;
    ASSERT_GE(i, 0);
    ASSERT_LE(i, 3);
    ASSERT_LE(j, 3);
    ++counts[i * 4 + j];
  }
  double chi2 = 0.0, expect = draws / 16.0;
  for (long c = 0; c < 16; ++c) chi2 += (counts[c] - expect) * (counts[c] - expect) / expect;
  EXPECT_LT(chi2, 60.0);  // dof 15
}

TEST(Patches, SmallImagesSkipped) {
  Rng rng(51);
  std::vector<Image> lrs = {constant_image(4, 4, 0.1f), constant_image(16, 16, 0.9f)};
  PatchBatch pb = extract_patches(lrs, nullptr, 8, 4, 8, rng);
  for (long i = 0; i < pb.lr.numel(); ++i) ASSERT_FLOAT_EQ(pb.lr.data()[i], 0.9f);

  std::vector<Image> tiny = {constant_image(4, 4, 0.1f)};
  EXPECT_THROW(extract_patches(tiny, nullptr, 8, 4, 1, rng), std::runtime_error);
}

TEST(Metrics, PsnrKnownValuesAndSymmetry) {
  Rng rng(52);
  Image a = Image::randu({32, 32, 3}, rng);
  EXPECT_FLOAT_EQ(psnr_y(a, a, 4), 99.0f);

  Image z = constant_image(32, 32, 0.0f);
  Image p1 = constant_image(32, 32, 0.1f);
  EXPECT_NEAR(psnr_y(z, p1, 4), 20.0f, 1e-4);
  EXPECT_FLOAT_EQ(psnr_y(z, p1, 4), psnr_y(p1, z, 4));

  Image bad = constant_image(16, 16, 0.0f);
  EXPECT_THROW(psnr_y(a, bad, 4), std::runtime_error);
}

TEST(Metrics, SsimSelfIsOneAndOrdering) {
  Rng rng(53);
  Image a = Image::randu({40, 40, 3}, rng);
  EXPECT_NEAR(ssim(a, a, 4), 1.0f, 1e-6);
  Image neg = Image::zeros(a.shape());
  for (long i = 0; i < a.numel(); ++i) neg.data()[i] = 1.0f - a.data()[i];
  EXPECT_LT(ssim(a, neg, 4), 0.2f);
  EXPECT_THROW(ssim(a, constant_image(16, 16, 0.5f), 4), std::runtime_error);
}

TEST(ImageIo, PpmRoundtripWithinOneStep) {
  Rng rng(54);
  Image img = Image::randu({9, 7, 3}, rng);
  img.data()[0] = 0.0f;
  img.data()[1] = 1.0f;
  std::string path = (fs::temp_directory_path() / "sodasr_ppm_test.ppm").string();
  save_ppm(path, img);
  Image back = load_ppm(path);
  ASSERT_EQ(back.shape(), img.shape());
  for (long i = 0; i < img.numel(); ++i)
    ASSERT_NEAR(back.data()[i], img.data()[i], 0.5f / 255.0f + 1e-6f);
  fs::remove(path);
  EXPECT_THROW(load_ppm(path), std::runtime_error);
}

TEST(ImageIo, Srf32RoundtripLossless) {
  Rng rng(55);
  Image img = Image::randn({6, 5, 3}, rng);
  std::string path = (fs::temp_directory_path() / "sodasr_srf32_test.srf32").string();
  save_srf32(path, img);
  Image back = load_srf32(path);
  ASSERT_EQ(back.shape(), img.shape());
  EXPECT_EQ(std::memcmp(back.data(), img.data(), sizeof(float) * img.numel()), 0);

  std::ofstream bad(path, std::ios::binary);
  bad << "NOTSR literally not the format";
  bad.close();
  EXPECT_THROW(load_srf32(path), std::runtime_error);
  fs::remove(path);
}

TEST(Dataset, GenerateLayoutAndDisjointDomains) {
  std::string dir = (fs::temp_directory_path() / "sodasr_dataset_test").string();
  fs::remove_all(dir);
  DataGenSpec g;
  g.hr_size = 64;
  g.src_train = 2;
  g.src_val = 1;
  g.tgt_train = 2;
  g.tgt_val = 1;
  g.tgt_test = 1;
  generate_dataset(dir, g, 99);

  auto rows = read_manifest((fs::path(dir) / "manifest.txt").string());
  EXPECT_EQ(rows.size(), 12u);

  Split st = load_split(dir, "source", "train");
  ASSERT_EQ(st.lr.size(), 2u);
  ASSERT_EQ(st.hr.size(), 2u);
  EXPECT_EQ(st.lr[0].shape(), (Shape{16, 16, 3}));
  EXPECT_EQ(st.hr[0].shape(), (Shape{64, 64, 3}));

  Split tt = load_split(dir, "target", "train");
  EXPECT_EQ(tt.lr.size(), 2u);
  EXPECT_TRUE(tt.hr.empty());

  Split tv = load_split(dir, "target", "val");
  ASSERT_EQ(tv.lr.size(), 1u);
  ASSERT_EQ(tv.hr.size(), 1u);

  double diff = 0.0;
  for (long i = 0; i < st.hr[0].numel(); ++i)
    diff += std::abs(st.hr[0].data()[i] - tv.hr[0].data()[i]);
  EXPECT_GT(diff / (double)st.hr[0].numel(), 0.01);

  fs::remove_all(dir);
}

TEST(TrainSource, ZeroIterationsLeavesNetUntouched) {
  Rng rng(56);
  ToySRNet<float> net;
  net.init(8, 1, 4, rng);
  std::vector<float> before;
  for (auto* p : net.params())
    before.insert(before.end(), p->data(), p->data() + p->numel());

  Rng data_rng(57);
  auto hrs = synthesize_hr(2, 64, data_rng);
  std::vector<Image> lrs;
  DegradationSpec spec{false, 0.0f, 4, 0.0f};
  for (auto& h : hrs) lrs.push_back(degrade(h, spec, data_rng));

  Rng train_rng(58);
  auto trace = train_source(net, lrs, hrs, 0, 1e-3f, 4, 8, train_rng);
  EXPECT_TRUE(trace.empty());
  size_t k = 0;
  for (auto* p : net.params())
    for (long i = 0; i < p->numel(); ++i) ASSERT_EQ(p->data()[i], before[k++]);
}

TEST(TrainSource, LossDecreasesOnEasyTask) {
  Rng rng(59);
  ToySRNet<float> net;
  net.init(8, 1, 4, rng);
  Rng data_rng(60);
  auto hrs = synthesize_hr(4, 64, data_rng);
  std::vector<Image> lrs;
  DegradationSpec spec{false, 0.0f, 4, 0.0f};
  for (auto& h : hrs) lrs.push_back(degrade(h, spec, data_rng));

  Rng train_rng(61);
  auto trace = train_source(net, lrs, hrs, 120, 1e-3f, 4, 8, train_rng);
  ASSERT_EQ(trace.size(), 120u);
  auto median10 = [&](size_t from) {
    std::vector<float> w(trace.begin() + (long)from, trace.begin() + (long)from + 10);
    std::sort(w.begin(), w.end());
    return w[5];
  };
  EXPECT_LT(median10(110), median10(0));
}

}  // namespace
}  // namespace sodasr

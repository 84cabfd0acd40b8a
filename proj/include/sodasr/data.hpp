// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_DATA_HPP_
#define SODASR_DATA_HPP_

// Synthetic dataset generation, image I/O, patch sampling, source
// pre-training and the PSNR/SSIM metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sodasr/adam.hpp"
#include "sodasr/backbone.hpp"
#include "sodasr/rng.hpp"
#include "sodasr/tensor.hpp"

namespace sodasr {

using Image = Tensor<float>;  // [H,W,3], values in [0,1]

struct DegradationSpec {
  bool gaussian = false;
  float sigma = 0.0f;
  long scale = 4;
  float noise_std = 0.0f;
};

// ---------------------------------------------------------------------------
// resampling

namespace detail {

// Catmull-Rom kernel, a = -0.5.
inline double cubic_w(double x) {
  x = std::abs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

// Tap positions and normalized weights for one output row of a 1-D resize
// from n_in to n_out samples. Kernel is widened by the shrink factor when
// downsampling; taps are edge-clamped.
struct ResampleTaps {
  std::vector<long> idx;
  std::vector<double> w;
};

inline std::vector<ResampleTaps> resample_plan(long n_in, long n_out) {
  double f = (double)n_out / (double)n_in;
  double support = f < 1.0 ? 2.0 / f : 2.0;
  std::vector<ResampleTaps> plan((size_t)n_out);
  for (long i = 0; i < n_out; ++i) {
    double u = (i + 0.5) / f - 0.5;
    long lo = (long)std::ceil(u - support);
    long hi = (long)std::floor(u + support);
    auto& t = plan[(size_t)i];
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) {
      double d = (j - u) * (f < 1.0 ? f : 1.0);
      double wt = cubic_w(d);
      if (wt == 0.0) continue;
      t.idx.push_back(std::clamp(j, 0L, n_in - 1));
      t.w.push_back(wt);
      sum += wt;
    }
    for (auto& wt : t.w) wt /= sum;
  }
  return plan;
}

inline Image resample_rows(const Image& img, const std::vector<ResampleTaps>& plan) {
  long H = img.shape()[0], W = img.shape()[1], C = img.shape()[2];
  long Ho = (long)plan.size();
  Image out = Image::zeros({Ho, W, C});
  for (long y = 0; y < Ho; ++y) {
    const auto& t = plan[(size_t)y];
    for (size_t k = 0; k < t.idx.size(); ++k) {
      const float* src = img.data() + t.idx[k] * W * C;
      float wt = (float)t.w[k];
      float* dst = out.data() + y * W * C;
      for (long i = 0; i < W * C; ++i) dst[i] += wt * src[i];
    }
  }
  return out;
}

inline Image transpose_hw(const Image& img) {
  long H = img.shape()[0], W = img.shape()[1], C = img.shape()[2];
  Image out = Image::zeros({W, H, C});
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x)
      for (long c = 0; c < C; ++c)
        out.data()[(x * H + y) * C + c] = img.data()[(y * W + x) * C + c];
  return out;
}

}  // namespace detail

// Separable cubic convolution resize, edge-clamped. factor must be an
// integer or the reciprocal of one; factor 1 returns the input bit-exact.
inline Image bicubic_resize(const Image& img, double factor) {
  long H = img.shape()[0], W = img.shape()[1];
  if (factor == 1.0) {
    Image out = Image::zeros(img.shape());
    std::copy(img.data(), img.data() + img.numel(), out.data());
    return out;
  }
  double ho = H * factor, wo = W * factor;
  if (std::abs(ho - std::round(ho)) > 1e-9 || std::abs(wo - std::round(wo)) > 1e-9)
    throw std::runtime_error("bicubic_resize: non-integral output size");
  auto rows = detail::resample_plan(H, (long)std::llround(ho));
  auto cols = detail::resample_plan(W, (long)std::llround(wo));
  Image tmp = detail::resample_rows(img, rows);
  return detail::transpose_hw(detail::resample_rows(detail::transpose_hw(tmp), cols));
}

// Truncated Gaussian blur, radius ceil(3*sigma), separable, edge-clamped.
inline Image gaussian_blur(const Image& img, float sigma) {
  if (sigma <= 0.0f) throw std::runtime_error("gaussian_blur: sigma must be positive");
  long r = (long)std::ceil(3.0 * sigma);
  std::vector<double> k((size_t)(2 * r + 1));
  double sum = 0.0;
  for (long i = -r; i <= r; ++i) {
    k[(size_t)(i + r)] = std::exp(-0.5 * (double)(i * i) / ((double)sigma * sigma));
    sum += k[(size_t)(i + r)];
  }
  for (auto& v : k) v /= sum;

  long H = img.shape()[0], W = img.shape()[1], C = img.shape()[2];
  auto pass = [&](const Image& in) {
    long h = in.shape()[0], w = in.shape()[1];
    Image out = Image::zeros(in.shape());
    for (long y = 0; y < h; ++y) {
      const float* row0 = in.data() + y * w * C;
      float* dst = out.data() + y * w * C;
      for (long x = 0; x < w; ++x)
        for (long i = -r; i <= r; ++i) {
          long xs = std::clamp(x + i, 0L, w - 1);
          float wt = (float)k[(size_t)(i + r)];
          for (long c = 0; c < C; ++c) dst[x * C + c] += wt * row0[xs * C + c];
        }
    }
    return out;
  };
  (void)H;
  (void)W;
  return detail::transpose_hw(pass(detail::transpose_hw(pass(img))));
}

// ---------------------------------------------------------------------------
// synthesis and degradation

// One procedural HR image: smooth gradients + rectangles and thin bars +
// band-limited noise texture, so content has both flat and detailed regions.
inline Image synthesize_hr(long size, Rng& rng) {
  Image img = Image::zeros({size, size, 3});
  float base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.25f + 0.5f * (float)rng.uniform();
    gx[c] = 0.4f * ((float)rng.uniform() - 0.5f);
    gy[c] = 0.4f * ((float)rng.uniform() - 0.5f);
  }
  for (long y = 0; y < size; ++y)
    for (long x = 0; x < size; ++x)
      for (long c = 0; c < 3; ++c)
        img.data()[(y * size + x) * 3 + c] =
            base[c] + gx[c] * (float)x / (float)size + gy[c] * (float)y / (float)size;

  long nrect = 8 + rng.uniform_int(0, 8);
  for (long k = 0; k < nrect; ++k) {
    bool thin = rng.bernoulli(0.4);
    long w = thin ? 1 + rng.uniform_int(0, 2) : 4 + rng.uniform_int(0, size / 3);
    long h = thin ? 4 + rng.uniform_int(0, size / 2) : 4 + rng.uniform_int(0, size / 3);
    if (rng.bernoulli(0.5)) std::swap(w, h);
    long x0 = rng.uniform_int(0, size - 1), y0 = rng.uniform_int(0, size - 1);
    float col[3], alpha = 0.5f + 0.5f * (float)rng.uniform();
    for (int c = 0; c < 3; ++c) col[c] = (float)rng.uniform();
    for (long y = y0; y < std::min(size, y0 + h); ++y)
      for (long x = x0; x < std::min(size, x0 + w); ++x)
        for (long c = 0; c < 3; ++c) {
          float& p = img.data()[(y * size + x) * 3 + c];
          p = (1.0f - alpha) * p + alpha * col[c];
        }
  }

  // band-limited texture shared across channels
  Image noise = Image::zeros({size, size, 1});
  for (long i = 0; i < size * size; ++i) noise.data()[i] = (float)rng.normal();
  noise = gaussian_blur(noise, 1.0f + 2.0f * (float)rng.uniform());
  float amp = 0.05f + 0.1f * (float)rng.uniform();
  for (long i = 0; i < size * size; ++i)
    for (long c = 0; c < 3; ++c) img.data()[i * 3 + c] += amp * noise.data()[i];

  for (long i = 0; i < img.numel(); ++i)
    img.data()[i] = std::clamp(img.data()[i], 0.0f, 1.0f);
  return img;
}

inline std::vector<Image> synthesize_hr(long count, long size, Rng& rng) {
  std::vector<Image> out;
  for (long i = 0; i < count; ++i) {
    Rng r = rng.fork((uint64_t)i);
    out.push_back(synthesize_hr(size, r));
  }
  return out;
}

// blur (optional) -> bicubic downsample by spec.scale -> noise (optional).
inline Image degrade(const Image& hr, const DegradationSpec& spec, Rng& rng) {
  if (hr.shape()[0] % spec.scale || hr.shape()[1] % spec.scale)
    throw std::runtime_error("degrade: dims not divisible by scale");
  Image x = spec.gaussian ? gaussian_blur(hr, spec.sigma) : hr;
  Image lr = bicubic_resize(x, 1.0 / (double)spec.scale);
  if (spec.noise_std > 0.0f)
    for (long i = 0; i < lr.numel(); ++i)
      lr.data()[i] += spec.noise_std * (float)rng.normal();
  for (long i = 0; i < lr.numel(); ++i)
    lr.data()[i] = std::clamp(lr.data()[i], 0.0f, 1.0f);
  return lr;
}

// ---------------------------------------------------------------------------
// patches

struct PatchBatch {
  Tensor<float> lr, hr;  // hr undefined for unlabeled batches
};

// Random aligned crops. hrs may be null (unlabeled pipeline). Images smaller
// than the patch are skipped with a one-line warning.
inline PatchBatch extract_patches(const std::vector<Image>& lrs,
                                  const std::vector<Image>* hrs, long patch,
                                  long scale, long batch, Rng& rng) {
  std::vector<size_t> ok;
  for (size_t i = 0; i < lrs.size(); ++i) {
    if (lrs[i].shape()[0] >= patch && lrs[i].shape()[1] >= patch) {
      ok.push_back(i);
    } else {
      static bool warned = false;
      if (!warned) {
        std::fprintf(stderr, "extract_patches: skipping image(s) smaller than patch %ld\n",
                     patch);
        warned = true;
      }
    }
  }
  if (ok.empty()) throw std::runtime_error("extract_patches: no image fits the patch size");

  PatchBatch out;
  out.lr = Tensor<float>::zeros({batch, patch, patch, 3});
  if (hrs) out.hr = Tensor<float>::zeros({batch, patch * scale, patch * scale, 3});
  for (long b = 0; b < batch; ++b) {
    size_t im = ok[(size_t)rng.uniform_int(0, (long)ok.size())];
    const Image& lr = lrs[im];
    long i = rng.uniform_int(0, lr.shape()[0] - patch + 1);
    long j = rng.uniform_int(0, lr.shape()[1] - patch + 1);
    for (long y = 0; y < patch; ++y)
      std::copy(lr.data() + ((i + y) * lr.shape()[1] + j) * 3,
                lr.data() + ((i + y) * lr.shape()[1] + j + patch) * 3,
                out.lr.data() + ((b * patch + y) * patch) * 3);
    if (hrs) {
      const Image& hr = (*hrs)[im];
      long ph = patch * scale;
      for (long y = 0; y < ph; ++y)
        std::copy(hr.data() + ((i * scale + y) * hr.shape()[1] + j * scale) * 3,
                  hr.data() + ((i * scale + y) * hr.shape()[1] + j * scale + ph) * 3,
                  out.hr.data() + ((b * ph + y) * ph) * 3);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// metrics

namespace detail {
inline void check_metric_inputs(const Image& a, const Image& b, long shave) {
  if (a.shape() != b.shape()) throw std::runtime_error("metric: shape mismatch");
  if (a.shape()[0] <= 2 * shave + 10 || a.shape()[1] <= 2 * shave + 10)
    throw std::runtime_error("metric: image too small after shave");
}
}  // namespace detail

// PSNR on the BT.601 luma channel, peak 1.0, capped at 99 dB. A border of
// `shave` pixels is removed first.
inline float psnr_y(const Image& sr, const Image& hr, long shave) {
  detail::check_metric_inputs(sr, hr, shave);
  long H = sr.shape()[0], W = sr.shape()[1];
  double mse = 0.0;
  long n = 0;
  for (long y = shave; y < H - shave; ++y)
    for (long x = shave; x < W - shave; ++x) {
      const float* a = sr.data() + (y * W + x) * 3;
      const float* b = hr.data() + (y * W + x) * 3;
      double ya = 0.299 * a[0] + 0.587 * a[1] + 0.114 * a[2];
      double yb = 0.299 * b[0] + 0.587 * b[1] + 0.114 * b[2];
      mse += (ya - yb) * (ya - yb);
      ++n;
    }
  mse /= (double)n;
  if (mse <= 0.0) return 99.0f;
  return (float)std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

// Mean SSIM over RGB channels, 11x11 Gaussian window sigma=1.5, K1=0.01,
// K2=0.03, valid-region windows, `shave` border removed first.
inline float ssim(const Image& sr, const Image& hr, long shave) {
  detail::check_metric_inputs(sr, hr, shave);
  long H = sr.shape()[0] - 2 * shave, W = sr.shape()[1] - 2 * shave;
  long W0 = sr.shape()[1];
  constexpr long R = 5;
  double win[11];
  {
    double s = 0.0;
    for (long i = -R; i <= R; ++i) {
      win[i + R] = std::exp(-0.5 * (double)(i * i) / (1.5 * 1.5));
      s += win[i + R];
    }
    for (auto& v : win) v /= s;
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  long Hv = H - 2 * R, Wv = W - 2 * R;
  std::vector<double> mu1((size_t)(Hv * W)), mu2((size_t)(Hv * W)),
      m11((size_t)(Hv * W)), m22((size_t)(Hv * W)), m12((size_t)(Hv * W));
  double total = 0.0;
  for (long c = 0; c < 3; ++c) {
    // vertical pass into row-filtered accumulators
    for (long y = 0; y < Hv; ++y)
      for (long x = 0; x < W; ++x) {
        double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
        for (long i = 0; i < 11; ++i) {
          double a = sr.data()[((y + i + shave) * W0 + x + shave) * 3 + c];
          double b = hr.data()[((y + i + shave) * W0 + x + shave) * 3 + c];
          s1 += win[i] * a;
          s2 += win[i] * b;
          s11 += win[i] * a * a;
          s22 += win[i] * b * b;
          s12 += win[i] * a * b;
        }
        mu1[(size_t)(y * W + x)] = s1;
        mu2[(size_t)(y * W + x)] = s2;
        m11[(size_t)(y * W + x)] = s11;
        m22[(size_t)(y * W + x)] = s22;
        m12[(size_t)(y * W + x)] = s12;
      }
    double acc = 0.0;
    for (long y = 0; y < Hv; ++y)
      for (long x = 0; x < Wv; ++x) {
        double u1 = 0, u2 = 0, e11 = 0, e22 = 0, e12 = 0;
        for (long i = 0; i < 11; ++i) {
          u1 += win[i] * mu1[(size_t)(y * W + x + i)];
          u2 += win[i] * mu2[(size_t)(y * W + x + i)];
          e11 += win[i] * m11[(size_t)(y * W + x + i)];
          e22 += win[i] * m22[(size_t)(y * W + x + i)];
          e12 += win[i] * m12[(size_t)(y * W + x + i)];
        }
        double v1 = e11 - u1 * u1, v2 = e22 - u2 * u2, cov = e12 - u1 * u2;
        acc += ((2 * u1 * u2 + c1) * (2 * cov + c2)) /
               ((u1 * u1 + u2 * u2 + c1) * (v1 + v2 + c2));
      }
    total += acc / (double)(Hv * Wv);
  }
  return (float)(total / 3.0);
}

// ---------------------------------------------------------------------------
// image and manifest I/O

inline void save_ppm(const std::string& path, const Image& img) {
  long H = img.shape()[0], W = img.shape()[1];
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_ppm: cannot open " + path);
  f << "P6\n" << W << " " << H << "\n255\n";
  std::vector<unsigned char> buf((size_t)(H * W * 3));
  for (long i = 0; i < H * W * 3; ++i) {
    float v = std::clamp(img.data()[i], 0.0f, 1.0f);
    buf[(size_t)i] = (unsigned char)std::lround(v * 255.0f);
  }
  f.write((const char*)buf.data(), (std::streamsize)buf.size());
}

inline Image load_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_ppm: cannot open " + path);
  std::string magic;
  long w = 0, h = 0, maxv = 0;
  f >> magic >> w >> h >> maxv;
  if (magic != "P6" || maxv != 255) throw std::runtime_error("load_ppm: unsupported " + path);
  f.get();
  std::vector<unsigned char> buf((size_t)(h * w * 3));
  f.read((char*)buf.data(), (std::streamsize)buf.size());
  if (!f) throw std::runtime_error("load_ppm: truncated " + path);
  Image img = Image::zeros({h, w, 3});
  for (long i = 0; i < h * w * 3; ++i) img.data()[i] = (float)buf[(size_t)i] / 255.0f;
  return img;
}

inline void save_srf32(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_srf32: cannot open " + path);
  f.write("SRF32", 5);
  uint32_t dims[3] = {(uint32_t)img.shape()[0], (uint32_t)img.shape()[1],
                      (uint32_t)img.shape()[2]};
  f.write((const char*)dims, sizeof(dims));
  f.write((const char*)img.data(), (std::streamsize)(img.numel() * sizeof(float)));
}

inline Image load_srf32(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_srf32: cannot open " + path);
  char magic[5];
  f.read(magic, 5);
  if (!f || std::memcmp(magic, "SRF32", 5) != 0)
    throw std::runtime_error("load_srf32: bad magic in " + path);
  uint32_t dims[3];
  f.read((char*)dims, sizeof(dims));
  Image img = Image::zeros({(long)dims[0], (long)dims[1], (long)dims[2]});
  f.read((char*)img.data(), (std::streamsize)(img.numel() * sizeof(float)));
  if (!f) throw std::runtime_error("load_srf32: truncated " + path);
  return img;
}

struct ManifestEntry {
  std::string split, path, domain;
};

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
  for (const auto& r : rows) f << r.split << "\t" << r.path << "\t" << r.domain << "\n";
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_manifest: cannot open " + path);
  std::vector<ManifestEntry> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    size_t t1 = line.find('\t'), t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("read_manifest: malformed line: " + line);
    rows.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// dataset generation and loading

struct DataGenSpec {
  long scale = 4;
  long hr_size = 256;
  long src_train = 64, src_val = 8;
  long tgt_train = 64, tgt_val = 16, tgt_test = 16;
  float tgt_blur_sigma = 1.8f;
  float tgt_noise = 0.01f;
};

// Source and target HR pools come from disjoint fork indices so the two
// domains never share an image.
inline void generate_dataset(const std::string& dir, const DataGenSpec& g, uint64_t seed) {
  namespace fs = std::filesystem;
  Rng root(seed);
  Rng hr_rng = root.fork("hr");
  Rng noise_rng = root.fork("degrade-noise");
  DegradationSpec src_spec{false, 0.0f, g.scale, 0.0f};
  DegradationSpec tgt_spec{true, g.tgt_blur_sigma, g.scale, g.tgt_noise};

  std::vector<ManifestEntry> manifest;
  long src_index = 0, tgt_index = 100000;

  auto emit = [&](const std::string& domain, const std::string& split, long count,
                  bool with_hr, bool with_lr) {
    fs::create_directories(fs::path(dir) / domain / split);
    const DegradationSpec& spec = domain == "source" ? src_spec : tgt_spec;
    long& index = domain == "source" ? src_index : tgt_index;
    for (long i = 0; i < count; ++i) {
      Rng r = hr_rng.fork((uint64_t)index++);
      Image hr = synthesize_hr(g.hr_size, r);
      char name[64];
      if (with_hr) {
        std::snprintf(name, sizeof(name), "%s/%s/hr_%03ld.srf32", domain.c_str(),
                      split.c_str(), i);
        save_srf32((fs::path(dir) / name).string(), hr);
        manifest.push_back({split, name, domain});
      }
      if (with_lr) {
        Image lr = degrade(hr, spec, noise_rng);
        std::snprintf(name, sizeof(name), "%s/%s/lr_%03ld.srf32", domain.c_str(),
                      split.c_str(), i);
        save_srf32((fs::path(dir) / name).string(), lr);
        manifest.push_back({split, name, domain});
      }
    }
  };

  emit("source", "train", g.src_train, true, true);
  emit("source", "val", g.src_val, true, true);
  emit("target", "train", g.tgt_train, false, true);  // unlabeled
  emit("target", "val", g.tgt_val, true, true);
  emit("target", "test", g.tgt_test, true, true);
  write_manifest((std::filesystem::path(dir) / "manifest.txt").string(), manifest);
}

struct Split {
  std::vector<Image> lr, hr;  // hr empty for unlabeled splits
};

inline Split load_split(const std::string& dir, const std::string& domain,
                        const std::string& split) {
  namespace fs = std::filesystem;
  auto rows = read_manifest((fs::path(dir) / "manifest.txt").string());
  Split out;
  for (const auto& r : rows) {
    if (r.domain != domain || r.split != split) continue;
    Image img = load_srf32((fs::path(dir) / r.path).string());
    std::string base = fs::path(r.path).filename().string();
    if (base.rfind("lr_", 0) == 0)
      out.lr.push_back(img);
    else
      out.hr.push_back(img);
  }
  if (out.lr.empty()) throw std::runtime_error("load_split: no images for " + domain + "/" + split);
  return out;
}

// ---------------------------------------------------------------------------
// source pre-training

// Supervised L1 on random aligned patches. Returns the per-iteration loss
// trace; the net is trained in place. 0 iterations leaves it untouched.
inline std::vector<float> train_source(ToySRNet<float>& net, const std::vector<Image>& lr,
                                       const std::vector<Image>& hr, long iterations,
                                       float lr_rate, long batch, long patch, Rng& rng) {
  std::vector<float> trace;
  if (iterations <= 0) return trace;
  std::vector<Tensor<float>> ps;
  for (auto* p : net.params()) ps.push_back(*p);
  Adam<float> opt(ps, lr_rate);
  for (long it = 0; it < iterations; ++it) {
    PatchBatch pb = extract_patches(lr, &hr, patch, net.scale, batch, rng);
    Tensor<float> out = sr_forward(net, pb.lr);
    Tensor<float> loss = mean(abs_t(out - pb.hr));
    opt.zero_grad();
    loss.backward();
    opt.step();
    trace.push_back(loss.item());
  }
  return trace;
}

}  // namespace sodasr

#endif  // SODASR_DATA_HPP_

// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_SELFTRAIN_HPP_
#define SODASR_SELFTRAIN_HPP_

// Source-free teacher-student adaptation: geometric self-ensembling,
// uncertainty-rectified pseudo-labels, frequency regularizers, EMA transfer,
// and the full per-iteration update. adapt_run drives the loop end to end.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sodasr/adam.hpp"
#include "sodasr/backbone.hpp"
#include "sodasr/checkpoint.hpp"
#include "sodasr/data.hpp"
#include "sodasr/rng.hpp"
#include "sodasr/tensor.hpp"
#include "sodasr/wat.hpp"
#include "sodasr/wavelet.hpp"

namespace sodasr {

// ---------------------------------------------------------------------------
// dihedral group

// Rotate [B,H,W,C] by 90 degrees clockwise.
template <typename T>
Tensor<T> rot90cw(Tensor<T> x) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
  Tensor<T> out = detail::make_op<T>({B, W, H, C}, {x});
  const T* px = x.data();
  T* po = out.data();
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < H; ++i)
      for (long j = 0; j < W; ++j)
        std::copy(px + ((b * H + i) * W + j) * C, px + ((b * H + i) * W + j + 1) * C,
                  po + ((b * W + j) * H + (H - 1 - i)) * C);
  detail::set_backward<T>(out, [x, B, H, W, C](const T* g) mutable {
    x.ensure_grad();
    T* gx = x.grad().data();
    for (long b = 0; b < B; ++b)
      for (long i = 0; i < H; ++i)
        for (long j = 0; j < W; ++j) {
          const T* src = g + ((b * W + j) * H + (H - 1 - i)) * C;
          T* dst = gx + ((b * H + i) * W + j) * C;
          for (long c = 0; c < C; ++c) dst[c] += src[c];
        }
  });
  return out;
}

// Mirror [B,H,W,C] horizontally (reverse columns).
template <typename T>
Tensor<T> flip_h(Tensor<T> x) {
  long B = x.shape()[0], H = x.shape()[1], W = x.shape()[2], C = x.shape()[3];
  Tensor<T> out = detail::make_op<T>(x.shape(), {x});
  const T* px = x.data();
  T* po = out.data();
  for (long b = 0; b < B; ++b)
    for (long i = 0; i < H; ++i)
      for (long j = 0; j < W; ++j)
        std::copy(px + ((b * H + i) * W + j) * C, px + ((b * H + i) * W + j + 1) * C,
                  po + ((b * H + i) * W + (W - 1 - j)) * C);
  detail::set_backward<T>(out, [x, B, H, W, C](const T* g) mutable {
    x.ensure_grad();
    T* gx = x.grad().data();
    for (long b = 0; b < B; ++b)
      for (long i = 0; i < H; ++i)
        for (long j = 0; j < W; ++j) {
          const T* src = g + ((b * H + i) * W + (W - 1 - j)) * C;
          T* dst = gx + ((b * H + i) * W + j) * C;
          for (long c = 0; c < C; ++c) dst[c] += src[c];
        }
  });
  return out;
}

// Element k of the dihedral group, k in [0,8): optional horizontal flip
// (k >= 4) followed by k % 4 clockwise quarter turns.
template <typename T>
Tensor<T> dihedral_apply(Tensor<T> x, int k) {
  if (k < 0 || k >= 8) throw std::domain_error("dihedral: k out of range");
  Tensor<T> y = x;
  if (k >= 4) y = flip_h(y);
  for (int r = 0; r < k % 4; ++r) y = rot90cw(y);
  return y;
}

template <typename T>
Tensor<T> dihedral_inverse(Tensor<T> y, int k) {
  if (k < 0 || k >= 8) throw std::domain_error("dihedral: k out of range");
  Tensor<T> x = y;
  for (int r = 0; r < (4 - k % 4) % 4; ++r) x = rot90cw(x);
  if (k >= 4) x = flip_h(x);
  return x;
}

// ---------------------------------------------------------------------------
// geometric self-ensemble

// Mean of model outputs over the 8 dihedral views, each mapped back through
// the inverse transform. Runs without a gradient tape.
template <typename T, typename F>
Tensor<T> geometric_ensemble(F&& model, Tensor<T> x) {
  NoGrad ng;
  Tensor<T> acc;
  for (int k = 0; k < 8; ++k) {
    Tensor<T> y = dihedral_inverse(model(dihedral_apply(x, k)), k);
    acc = acc.defined() ? acc + y : y;
  }
  return scale(acc, T(1) / T(8));
}

// ---------------------------------------------------------------------------
// gumbel softmax

// softmax((log v + g) / tau) over the last axis, g ~ Gumbel(0,1) per element.
// rng == nullptr disables the noise.
template <typename T>
Tensor<T> gumbel_softmax(Tensor<T> v, T tau, Rng* rng) {
  if (!(tau > T(0))) throw std::domain_error("gumbel_softmax: tau must be positive");
  const T* pv = v.data();
  for (long i = 0; i < v.numel(); ++i)
    if (!(pv[i] > T(0))) throw std::domain_error("gumbel_softmax: inputs must be positive");
  Tensor<T> z = log_t(v);
  if (rng) {
    Tensor<T> g;
    {
      NoGrad ng;
      g = Tensor<T>::zeros(v.shape());
      for (long i = 0; i < g.numel(); ++i) g.data()[i] = (T)rng->gumbel();
    }
    z = z + g;
  }
  return softmax(scale(z, T(1) / tau));
}

// ---------------------------------------------------------------------------
// uncertainty estimation

template <typename T>
struct UncertaintyEstimate {
  Tensor<T> y_mean;    // [B,sH,sW,3] pseudo-label
  Tensor<T> variance;  // [B,sH,sW,1] population variance, channel-averaged
  Tensor<T> cof;       // [B,sH,sW,1] confidence map
};

// cof = beta - sigmoid(var / alpha), elementwise.
template <typename T>
Tensor<T> confidence_map(Tensor<T> variance, T alpha, T beta) {
  return add_scalar(neg(sigmoid(scale(variance, T(1) / alpha))), beta);
}

// Mean / channel-averaged population variance of N aligned passes.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> mean_and_variance(const std::vector<Tensor<T>>& passes) {
  if (passes.size() < 2)
    throw std::invalid_argument("mean_and_variance: need at least 2 passes");
  NoGrad ng;
  T invn = T(1) / (T)passes.size();
  Tensor<T> m = passes[0];
  for (size_t i = 1; i < passes.size(); ++i) m = m + passes[i];
  m = scale(m, invn);
  Tensor<T> v;
  for (const auto& p : passes) {
    Tensor<T> d = square(p - m);
    v = v.defined() ? v + d : d;
  }
  v = mean(scale(v, invn), 3, true);
  return {m, v};
}

// N stochastic teacher passes (each a full geometric ensemble unless
// `ensemble` is false); Gumbel noise is drawn afresh for every forward.
template <typename T>
UncertaintyEstimate<T> estimate_uncertainty(ToySRNet<T>& teacher, Tensor<T> x, long n_passes,
                                            T alpha, T beta, bool ensemble, Rng* rng) {
  if (n_passes < 2)
    throw std::invalid_argument("estimate_uncertainty: n_passes must be >= 2");
  NoGrad ng;
  auto fwd = [&](Tensor<T> xi) { return sr_forward(teacher, xi, rng); };
  std::vector<Tensor<T>> passes;
  passes.reserve((size_t)n_passes);
  for (long n = 0; n < n_passes; ++n)
    passes.push_back(ensemble ? geometric_ensemble<T>(fwd, x) : fwd(x));
  UncertaintyEstimate<T> out;
  auto mv = mean_and_variance(passes);
  out.y_mean = mv.first;
  out.variance = mv.second;
  out.cof = confidence_map(out.variance, alpha, beta);
  return out;
}

// ---------------------------------------------------------------------------
// losses

// Mean |cof*sr - cof*y_mean|; cof broadcasts over RGB.
template <typename T>
Tensor<T> loss_rec(Tensor<T> sr, const UncertaintyEstimate<T>& u) {
  if (sr.shape() != u.y_mean.shape())
    throw std::runtime_error("loss_rec: shape mismatch " + shape_str(sr.shape()) + " vs " +
                             shape_str(u.y_mean.shape()));
  return mean(abs_t(u.cof * sr - u.cof * u.y_mean));
}

// L1 between frozen-extractor features of sr and the pseudo-label.
template <typename T>
Tensor<T> loss_perceptual(ToySRNet<T>& frozen, Tensor<T> sr, Tensor<T> y_mean) {
  return mean(abs_t(extract_features(frozen, sr) - extract_features(frozen, y_mean)));
}

// L1 between the LR low band at l1 and the SR low band at l2, the latter
// divided by 2^(l2-l1) so a perfectly consistent pair scores zero.
template <typename T>
Tensor<T> loss_low(Tensor<T> x_lr, Tensor<T> sr, long l1, long l2) {
  if (l2 <= l1) throw std::runtime_error("loss_low: need l2 > l1");
  Tensor<T> a = low_band(x_lr, l1);
  Tensor<T> b = low_band(sr, l2);
  if (a.shape() != b.shape())
    throw std::runtime_error("loss_low: band shapes differ " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()) + "; need l2 - l1 = log2(scale)");
  return mean(abs_t(a - scale(b, T(1) / (T)(1L << (l2 - l1)))));
}

constexpr double kAdvEps = 1e-8;

// -E[log D(H(sr))]
template <typename T>
Tensor<T> loss_high_G(Tensor<T> sr, Discriminator<T>& d, long l2) {
  Tensor<T> p = discriminator_forward(d, high_bands(sr, l2));
  return neg(mean(log_t(add_scalar(p, (T)kAdvEps))));
}

// -E[log D(H(lr))] - E[log(1 - D(H(sr)))], sr detached from the tape.
template <typename T>
Tensor<T> loss_high_D(Tensor<T> x_lr, Tensor<T> sr, Discriminator<T>& d, long l1, long l2) {
  Tensor<T> real = discriminator_forward(d, high_bands(x_lr, l1));
  Tensor<T> fake = discriminator_forward(d, high_bands(sr.detach(), l2));
  Tensor<T> lr_term = neg(mean(log_t(add_scalar(real, (T)kAdvEps))));
  Tensor<T> sr_term = neg(mean(log_t(add_scalar(neg(fake), T(1) + (T)kAdvEps))));
  return lr_term + sr_term;
}

// L_rec + lambda_per*L_per + lambda_low*L_low + lambda_high*L_highG.
template <typename T>
Tensor<T> total_loss(Tensor<T> rec, Tensor<T> per, Tensor<T> low, Tensor<T> highG,
                     T lambda_per, T lambda_low, T lambda_high) {
  const char* names[4] = {"l_rec", "l_per", "l_low", "l_highG"};
  Tensor<T> terms[4] = {rec, per, low, highG};
  for (int i = 0; i < 4; ++i)
    if (!std::isfinite((double)terms[i].item()))
      throw std::runtime_error(std::string("total_loss: non-finite ") + names[i]);
  return rec + scale(per, lambda_per) + scale(low, lambda_low) + scale(highG, lambda_high);
}

// ---------------------------------------------------------------------------
// EMA

// teacher <- eta*teacher + (1-eta)*student, per parameter.
template <typename T>
void ema_update(std::vector<Tensor<T>*> teacher, std::vector<Tensor<T>*> student, T eta) {
  if (teacher.size() != student.size())
    throw std::runtime_error("ema_update: parameter count mismatch");
  for (size_t i = 0; i < teacher.size(); ++i) {
    Tensor<T>& t = *teacher[i];
    Tensor<T>& s = *student[i];
    if (t.shape() != s.shape()) throw std::runtime_error("ema_update: shape mismatch");
    T* pt = t.data();
    const T* ps = s.data();
    for (long j = 0; j < t.numel(); ++j) pt[j] = eta * pt[j] + (T(1) - eta) * ps[j];
  }
}

// ---------------------------------------------------------------------------
// adaptation state

struct AdaptHyper {
  double eta = 0.999;            // EMA decay
  double tau = 0.1;              // Gumbel temperature
  long n_passes = 5;             // stochastic teacher passes
  double alpha = 0.0004;         // variance scale in the confidence map
  double beta = 1.5;             // confidence offset
  double lambda_per = 0.01;
  double lambda_low = 0.1;
  double lambda_high = 0.005;
  long l1 = 1, l2 = 3;           // wavelet levels; l2 - l1 = log2(scale)
  double wat_probability = 0.5;  // feature-routing probability
  long patch = 48;
  long batch = 8;
  long iterations = 2000;
  double lr = 1e-4;
  bool uncertainty_ensemble = true;  // each pass is an 8-way geometric ensemble
  bool rectify = true;               // false forces cof to 1 (ablation)
};

template <typename T>
ToySRNet<T> clone_net(ToySRNet<T>& src) {
  ToySRNet<T> out;
  Rng scratch(0);
  out.init(src.channels, src.blocks, src.scale, scratch);
  out.norm_mode = src.norm_mode;
  out.tau = src.tau;
  auto po = out.params();
  auto ps = src.params();
  for (size_t i = 0; i < po.size(); ++i)
    std::copy(ps[i]->data(), ps[i]->data() + ps[i]->numel(), po[i]->data());
  return out;
}

template <typename T>
struct AdaptState {
  ToySRNet<T> teacher;     // EMA weights, Gumbel mode
  ToySRNet<T> student;     // trained weights, Softmax mode
  ToySRNet<T> frozen_src;  // untouched source copy for the perceptual term
  WatParams<T> wat;
  Discriminator<T> disc;
  std::unique_ptr<Adam<T>> opt_gen, opt_disc;
  long iteration = 0;
};

// Teacher, student, and the perceptual reference all start as copies of the
// source net; WAT starts at identity, the discriminator at D == 0.5.
template <typename T>
AdaptState<T> make_adapt_state(ToySRNet<T>& source, const AdaptHyper& hp, Rng& rng,
                               std::vector<long> wat_levels = {1, 2, 3, 4},
                               bool fuse_sum = false) {
  AdaptState<T> st;
  st.student = clone_net(source);
  st.student.norm_mode = NormMode::kSoftmax;
  st.teacher = clone_net(source);
  st.teacher.norm_mode = NormMode::kGumbelSoftmax;
  st.teacher.tau = (T)hp.tau;
  for (auto* p : st.teacher.params()) p->set_requires_grad(false);
  st.frozen_src = clone_net(source);
  st.frozen_src.norm_mode = NormMode::kSoftmax;
  for (auto* p : st.frozen_src.params()) p->set_requires_grad(false);
  st.wat.levels = std::move(wat_levels);
  st.wat.fuse_sum = fuse_sum;
  st.wat.init(source.channels, rng);
  st.disc.init(9, rng);
  std::vector<Tensor<T>> gen;
  for (auto* p : st.student.params()) gen.push_back(*p);
  for (auto* p : st.wat.params()) gen.push_back(*p);
  st.opt_gen = std::make_unique<Adam<T>>(gen, (T)hp.lr);
  std::vector<Tensor<T>> dps;
  for (auto* p : st.disc.params()) dps.push_back(*p);
  st.opt_disc = std::make_unique<Adam<T>>(dps, (T)hp.lr);
  return st;
}

struct StepRecord {
  double l_rec = 0, l_per = 0, l_low = 0, l_highG = 0, l_highD = 0;
  double l_total = 0, cof_mean = 0;
  bool wat_used = false;
};

// One adaptation iteration:
//   1. pseudo-label + confidence from the teacher (no tape)
//   2. student forward, features routed through WAT with p = wat_probability
//   3. total loss backward, Adam step on student + WAT
//   4. discriminator step on loss_high_D (stale generator-pass grads cleared)
//   5. EMA transfer into the teacher (backbone params only)
template <typename T>
StepRecord adapt_step(AdaptState<T>& st, Tensor<T> x_t, const AdaptHyper& hp, Rng& rng_gumbel,
                      Rng& rng_route) {
  UncertaintyEstimate<T> u =
      estimate_uncertainty(st.teacher, x_t, hp.n_passes, (T)hp.alpha, (T)hp.beta,
                           hp.uncertainty_ensemble, &rng_gumbel);
  if (!hp.rectify) u.cof = Tensor<T>::full(u.cof.shape(), T(1));

  bool route = rng_route.bernoulli(hp.wat_probability);
  Tensor<T> f = extract_features(st.student, x_t);
  if (route) f = wat_forward(f, st.wat);
  Tensor<T> sr = reconstruct(st.student, f);

  Tensor<T> rec = loss_rec(sr, u);
  Tensor<T> per = loss_perceptual(st.frozen_src, sr, u.y_mean);
  Tensor<T> low = loss_low(x_t, sr, hp.l1, hp.l2);
  Tensor<T> hg = loss_high_G(sr, st.disc, hp.l2);
  Tensor<T> total =
      total_loss(rec, per, low, hg, (T)hp.lambda_per, (T)hp.lambda_low, (T)hp.lambda_high);
  st.opt_gen->zero_grad();
  total.backward();
  st.opt_gen->step();

  st.opt_disc->zero_grad();
  Tensor<T> hd = loss_high_D(x_t, sr, st.disc, hp.l1, hp.l2);
  hd.backward();
  st.opt_disc->step();

  ema_update(st.teacher.params(), st.student.params(), (T)hp.eta);
  ++st.iteration;

  StepRecord r;
  r.l_rec = (double)rec.item();
  r.l_per = (double)per.item();
  r.l_low = (double)low.item();
  r.l_highG = (double)hg.item();
  r.l_highD = (double)hd.item();
  r.l_total = (double)total.item();
  r.cof_mean = (double)mean(u.cof).item();
  r.wat_used = route;
  return r;
}

// ---------------------------------------------------------------------------
// full adaptation run

// Largest usable prefix of {1,2,3,4} at the given feature size; level l
// needs the size divisible by 2^l.
inline std::vector<long> wat_levels_for(long size) {
  std::vector<long> ls;
  for (long l = 1; l <= 4 && size % (1L << l) == 0; ++l) ls.push_back(l);
  return ls;
}

struct AdaptRunOptions {
  long channels = 32, blocks = 4, scale = 4;
  std::vector<long> wat_levels;  // empty: derived from the LR patch size
  bool fuse_sum = false;
  long eval_interval = 100;
  bool teacher_eval = false;  // evaluate the EMA teacher instead of the student
  uint64_t seed = 1;
  std::string csv_meta;  // extra key=value pairs for the log header comment
};

struct AdaptRunResult {
  double source_psnr = 0, source_ssim = 0;
  double best_psnr = 0, final_psnr = 0, final_ssim = 0;
  std::string checkpoint_path, csv_path;
  long rows = 0;
};

namespace detail {

// PSNR-Y / SSIM of a net over LR/HR image pairs, WAT off, outputs clamped.
inline std::pair<double, double> eval_pairs(ToySRNet<float>& net, const std::vector<Image>& lr,
                                            const std::vector<Image>& hr, long scale) {
  NoGrad ng;
  NormMode saved = net.norm_mode;
  net.norm_mode = NormMode::kSoftmax;
  double ps = 0, ss = 0;
  for (size_t i = 0; i < lr.size(); ++i) {
    long H = lr[i].shape()[0], W = lr[i].shape()[1];
    Tensor<float> x = reshape(lr[i], {1, H, W, 3});
    Tensor<float> y = clamp(sr_forward(net, x), 0.0f, 1.0f);
    Image sr = reshape(y, {H * scale, W * scale, 3});
    ps += (double)psnr_y(sr, hr[i], scale);
    ss += (double)ssim(sr, hr[i], scale);
  }
  net.norm_mode = saved;
  return {ps / (double)lr.size(), ss / (double)lr.size()};
}

inline void save_adapt_checkpoint(const std::string& path, AdaptState<float>& st) {
  NamedTensorList all;
  for (auto& kv : prefixed("student.", st.student.named_params())) all.push_back(kv);
  for (auto& kv : prefixed("teacher.", st.teacher.named_params())) all.push_back(kv);
  for (auto& kv : prefixed("wat.", st.wat.named_params())) all.push_back(kv);
  for (auto& kv : prefixed("disc.", st.disc.named_params())) all.push_back(kv);
  save_checkpoint(path, all);
}

}  // namespace detail

// Adapts a pre-trained source model to the target training split, logging to
// out_dir/adapt_log.csv and keeping the best-by-PSNR checkpoint at
// out_dir/adapted.ckpt. Evaluation uses the student without WAT.
inline AdaptRunResult adapt_run(const std::string& source_ckpt, const std::string& data_dir,
                                const std::string& out_dir, const AdaptHyper& hp,
                                const AdaptRunOptions& opt) {
  namespace fs = std::filesystem;
  Split train = load_split(data_dir, "target", "train");
  Split val = load_split(data_dir, "target", "val");
  if (val.hr.empty()) throw std::runtime_error("adapt_run: target val split has no HR images");

  Rng root(opt.seed);
  Rng rng_init = root.fork("init");
  Rng rng_model = root.fork("model");
  Rng rng_gumbel = root.fork("gumbel");
  Rng rng_route = root.fork("route");
  Rng rng_data = root.fork("data");

  ToySRNet<float> source;
  source.init(opt.channels, opt.blocks, opt.scale, rng_init);
  load_checkpoint(source_ckpt, prefixed("student.", source.named_params()));
  std::vector<long> levels =
      opt.wat_levels.empty() ? wat_levels_for(hp.patch / opt.scale) : opt.wat_levels;
  if (levels.empty())
    throw std::runtime_error("adapt_run: LR patch size admits no wavelet level");
  AdaptState<float> st = make_adapt_state(source, hp, rng_model, levels, opt.fuse_sum);

  fs::create_directories(out_dir);
  AdaptRunResult res;
  res.checkpoint_path = (fs::path(out_dir) / "adapted.ckpt").string();
  res.csv_path = (fs::path(out_dir) / "adapt_log.csv").string();
  std::FILE* csv = std::fopen(res.csv_path.c_str(), "wb");
  if (!csv) throw std::runtime_error("adapt_run: cannot open " + res.csv_path);
  std::fprintf(csv, "# seed=%llu scale=%ld channels=%ld blocks=%ld eta=%g tau=%g n=%ld%s%s\n",
               (unsigned long long)opt.seed, opt.scale, opt.channels, opt.blocks, hp.eta,
               hp.tau, hp.n_passes, opt.csv_meta.empty() ? "" : " ", opt.csv_meta.c_str());
  std::fprintf(csv, "iteration,l_rec,l_per,l_low,l_highG,l_highD,cof_mean,wat_used,"
                    "psnr_y_val,ssim_val,l_total\n");
  auto row = [&](long it, const StepRecord& r, double watf, double ps, double ss) {
    std::fprintf(csv, "%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", it,
                 r.l_rec, r.l_per, r.l_low, r.l_highG, r.l_highD, r.cof_mean, watf, ps, ss,
                 r.l_total);
    ++res.rows;
  };

  auto ev0 = detail::eval_pairs(opt.teacher_eval ? st.teacher : st.student, val.lr, val.hr,
                                opt.scale);
  res.source_psnr = ev0.first;
  res.source_ssim = ev0.second;
  res.best_psnr = ev0.first;
  res.final_psnr = ev0.first;
  res.final_ssim = ev0.second;
  row(0, StepRecord{}, 0.0, ev0.first, ev0.second);
  detail::save_adapt_checkpoint(res.checkpoint_path, st);

  StepRecord last;
  long routed = 0, since = 0;
  for (long it = 1; it <= hp.iterations; ++it) {
    Tensor<float> batch =
        extract_patches(train.lr, nullptr, hp.patch, opt.scale, hp.batch, rng_data).lr;
    last = adapt_step(st, batch, hp, rng_gumbel, rng_route);
    routed += last.wat_used ? 1 : 0;
    ++since;
    if (it % opt.eval_interval == 0 || it == hp.iterations) {
      auto ev = detail::eval_pairs(opt.teacher_eval ? st.teacher : st.student, val.lr, val.hr,
                                   opt.scale);
      row(it, last, (double)routed / (double)since, ev.first, ev.second);
      res.final_psnr = ev.first;
      res.final_ssim = ev.second;
      if (ev.first > res.best_psnr) {
        res.best_psnr = ev.first;
        detail::save_adapt_checkpoint(res.checkpoint_path, st);
      }
      routed = since = 0;
    }
  }
  std::fclose(csv);
  return res;
}

}  // namespace sodasr

#endif  // SODASR_SELFTRAIN_HPP_

// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_CONFIG_HPP_
#define SODASR_CONFIG_HPP_

// Run configuration: line-based `key = value` files with # comments, one
// field registry driving parsing, saving, and the CLI flag surface.

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sodasr/data.hpp"
#include "sodasr/selftrain.hpp"

namespace sodasr {

struct RunConfig {
  // paths
  std::string data_dir = "data";
  std::string out_dir = "runs/out";
  std::string source_checkpoint;  // empty: derived from out-dir
  std::string checkpoint;         // empty: derived from out-dir
  // reproducibility
  uint64_t seed = 1;
  // backbone
  long scale = 4;
  long channels = 32;
  long blocks = 4;
  // dataset generation
  long hr_size = 256;
  long src_train = 64, src_val = 8;
  long tgt_train = 64, tgt_val = 16, tgt_test = 16;
  double tgt_blur_sigma = 1.8;
  double tgt_noise = 0.01;
  // optimization
  long patch = 48, batch = 8;
  long source_iters = 2000;
  double source_lr = 1e-4;
  long adapt_iters = 2000;
  double adapt_lr = 1e-4;
  // adaptation
  double ema_eta = 0.999;
  double tau = 0.1;
  long n_passes = 5;
  double alpha = 0.0004;
  double beta = 1.5;
  double lambda_per = 0.01;
  double lambda_low = 0.1;
  double lambda_high = 0.005;
  long l1 = 1, l2 = 3;
  double wat_probability = 0.5;
  bool uncertainty_ensemble = true;
  long eval_interval = 100;
  std::string fusion = "mean";  // "mean" or "sum"
  bool teacher_eval = false;
  // ablation switches
  bool no_wat = false, no_ema = false, no_ue = false, no_reg = false;
};

struct ConfigError : std::runtime_error {
  long line;
  ConfigError(const std::string& msg, long ln) : std::runtime_error(msg), line(ln) {}
};

namespace detail {

using FieldPtr = std::variant<long RunConfig::*, double RunConfig::*, bool RunConfig::*,
                              std::string RunConfig::*, uint64_t RunConfig::*>;

struct Field {
  const char* key;
  FieldPtr ptr;
};

inline const std::vector<Field>& config_fields() {
  static const std::vector<Field> v = {
      {"data-dir", &RunConfig::data_dir},
      {"out-dir", &RunConfig::out_dir},
      {"source-checkpoint", &RunConfig::source_checkpoint},
      {"checkpoint", &RunConfig::checkpoint},
      {"seed", &RunConfig::seed},
      {"scale", &RunConfig::scale},
      {"channels", &RunConfig::channels},
      {"blocks", &RunConfig::blocks},
      {"hr-size", &RunConfig::hr_size},
      {"src-train", &RunConfig::src_train},
      {"src-val", &RunConfig::src_val},
      {"tgt-train", &RunConfig::tgt_train},
      {"tgt-val", &RunConfig::tgt_val},
      {"tgt-test", &RunConfig::tgt_test},
      {"tgt-blur-sigma", &RunConfig::tgt_blur_sigma},
      {"tgt-noise", &RunConfig::tgt_noise},
      {"patch", &RunConfig::patch},
      {"batch", &RunConfig::batch},
      {"source-iters", &RunConfig::source_iters},
      {"source-lr", &RunConfig::source_lr},
      {"adapt-iters", &RunConfig::adapt_iters},
      {"adapt-lr", &RunConfig::adapt_lr},
      {"ema-eta", &RunConfig::ema_eta},
      {"tau", &RunConfig::tau},
      {"n-passes", &RunConfig::n_passes},
      {"alpha", &RunConfig::alpha},
      {"beta", &RunConfig::beta},
      {"lambda-per", &RunConfig::lambda_per},
      {"lambda-low", &RunConfig::lambda_low},
      {"lambda-high", &RunConfig::lambda_high},
      {"l1", &RunConfig::l1},
      {"l2", &RunConfig::l2},
      {"wat-probability", &RunConfig::wat_probability},
      {"uncertainty-ensemble", &RunConfig::uncertainty_ensemble},
      {"eval-interval", &RunConfig::eval_interval},
      {"fusion", &RunConfig::fusion},
      {"teacher-eval", &RunConfig::teacher_eval},
      {"no-wat", &RunConfig::no_wat},
      {"no-ema", &RunConfig::no_ema},
      {"no-ue", &RunConfig::no_ue},
      {"no-reg", &RunConfig::no_reg},
  };
  return v;
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline long to_long(const std::string& s) {
  size_t pos = 0;
  long v = std::stol(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

inline uint64_t to_u64(const std::string& s) {
  size_t pos = 0;
  unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size() || s[0] == '-')
    throw std::invalid_argument("not an unsigned integer: '" + s + "'");
  return (uint64_t)v;
}

inline double to_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("not a bool (true/false/1/0): '" + s + "'");
}

inline std::string format_value(const RunConfig& c, const FieldPtr& p) {
  char buf[40];
  if (auto* lp = std::get_if<long RunConfig::*>(&p)) {
    std::snprintf(buf, sizeof(buf), "%ld", c.**lp);
  } else if (auto* dp = std::get_if<double RunConfig::*>(&p)) {
    std::snprintf(buf, sizeof(buf), "%.17g", c.**dp);
  } else if (auto* bp = std::get_if<bool RunConfig::*>(&p)) {
    return c.**bp ? "true" : "false";
  } else if (auto* sp = std::get_if<std::string RunConfig::*>(&p)) {
    return c.**sp;
  } else {
    auto* up = std::get_if<uint64_t RunConfig::*>(&p);
    std::snprintf(buf, sizeof(buf), "%llu", (unsigned long long)(c.**up));
  }
  return buf;
}

}  // namespace detail

// Sets one field from its text form. Returns false for an unknown key;
// throws std::invalid_argument for a malformed value.
inline bool set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : detail::config_fields()) {
    if (key != f.key) continue;
    if (auto* lp = std::get_if<long RunConfig::*>(&f.ptr))
      c.**lp = detail::to_long(value);
    else if (auto* dp = std::get_if<double RunConfig::*>(&f.ptr))
      c.**dp = detail::to_double(value);
    else if (auto* bp = std::get_if<bool RunConfig::*>(&f.ptr))
      c.**bp = detail::to_bool(value);
    else if (auto* sp = std::get_if<std::string RunConfig::*>(&f.ptr))
      c.**sp = value;
    else
      c.*std::get<uint64_t RunConfig::*>(f.ptr) = detail::to_u64(value);
    return true;
  }
  return false;
}

// Parses `key = value` lines over the defaults in `base`. `origin` names the
// source in error messages; errors carry the 1-based line number.
inline RunConfig parse_config_text(const std::string& text, const std::string& origin,
                                   RunConfig base = RunConfig{}) {
  std::istringstream in(text);
  std::string raw;
  long ln = 0;
  while (std::getline(in, raw)) {
    ++ln;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(ln) + ": expected `key = value`, got '" +
                            detail::trim(raw) + "'",
                        ln);
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (!set_config_value(base, key, value))
        throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(origin + ":" + std::to_string(ln) + ": " + e.what(), ln);
    } catch (const std::out_of_range&) {
      throw ConfigError(origin + ":" + std::to_string(ln) + ": value out of range '" + value +
                            "'",
                        ln);
    }
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = RunConfig{}) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path, std::move(base));
}

// Writes the fully resolved configuration; load_config of the result
// reproduces every field exactly.
inline void save_config(const std::string& path, const RunConfig& c) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_config: cannot open " + path);
  f << "# resolved run configuration\n";
  for (const auto& fld : detail::config_fields())
    f << fld.key << " = " << detail::format_value(c, fld.ptr) << "\n";
}

// SODA_SEED overrides the config-file seed; an explicit --seed flag
// overrides both (applied by the CLI after this call).
inline bool apply_env_seed(RunConfig& c) {
  const char* env = std::getenv("SODA_SEED");
  if (!env || !*env) return false;
  c.seed = detail::to_u64(env);
  return true;
}

// Startup validation; throws with the offending rule spelled out.
inline void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw std::runtime_error("config: " + m); };
  if (c.scale != 2 && c.scale != 4) fail("scale must be 2 or 4");
  if (c.hr_size <= 0 || c.hr_size % (c.scale * 16) != 0)
    fail("hr-size must be a positive multiple of scale*16 (" +
         std::to_string(c.scale * 16) + ")");
  if (c.channels <= 0 || c.blocks <= 0) fail("channels and blocks must be positive");
  if (!c.no_wat && c.channels % 4 != 0) fail("channels must be divisible by 4 when WAT is on");
  if (c.patch <= 0 || c.batch <= 0) fail("patch and batch must be positive");
  if (!c.no_wat && c.patch % 16 != 0) fail("patch must be divisible by 16 when WAT is on");
  if (c.no_wat && c.patch % 2 != 0) fail("patch must be even");
  if (!(c.tau > 0)) fail("tau must be positive");
  if (c.ema_eta < 0 || c.ema_eta > 1) fail("ema-eta must lie in [0,1]");
  if (c.n_passes < 2) fail("n-passes must be at least 2");
  if (!(c.alpha > 0)) fail("alpha must be positive");
  if (!(c.beta > 0.5)) fail("beta must exceed 0.5");
  if (c.lambda_per < 0 || c.lambda_low < 0 || c.lambda_high < 0)
    fail("loss weights must be non-negative");
  if (c.l1 < 1 || c.l2 <= c.l1) fail("need 1 <= l1 < l2");
  if ((1L << (c.l2 - c.l1)) != c.scale) fail("l2 - l1 must equal log2(scale)");
  if (c.wat_probability < 0 || c.wat_probability > 1)
    fail("wat-probability must lie in [0,1]");
  if (c.eval_interval < 1) fail("eval-interval must be at least 1");
  if (c.fusion != "mean" && c.fusion != "sum") fail("fusion must be 'mean' or 'sum'");
  if (c.source_iters < 0 || c.adapt_iters < 0) fail("iteration counts must be non-negative");
  if (!(c.source_lr > 0) || !(c.adapt_lr > 0)) fail("learning rates must be positive");
  if (c.tgt_blur_sigma < 0 || c.tgt_noise < 0)
    fail("degradation parameters must be non-negative");
}

// ---------------------------------------------------------------------------
// derived views

inline std::string source_checkpoint_path(const RunConfig& c) {
  if (!c.source_checkpoint.empty()) return c.source_checkpoint;
  return c.out_dir + "/source.ckpt";
}

inline std::string adapted_checkpoint_path(const RunConfig& c) {
  if (!c.checkpoint.empty()) return c.checkpoint;
  return c.out_dir + "/adapted.ckpt";
}

inline DataGenSpec to_datagen_spec(const RunConfig& c) {
  DataGenSpec g;
  g.scale = c.scale;
  g.hr_size = c.hr_size;
  g.src_train = c.src_train;
  g.src_val = c.src_val;
  g.tgt_train = c.tgt_train;
  g.tgt_val = c.tgt_val;
  g.tgt_test = c.tgt_test;
  g.tgt_blur_sigma = (float)c.tgt_blur_sigma;
  g.tgt_noise = (float)c.tgt_noise;
  return g;
}

// The Table 3 ablation axes fold into the hyper-parameters here.
inline AdaptHyper to_adapt_hyper(const RunConfig& c) {
  AdaptHyper hp;
  hp.eta = c.no_ema ? 1.0 : c.ema_eta;
  hp.tau = c.tau;
  hp.n_passes = c.n_passes;
  hp.alpha = c.alpha;
  hp.beta = c.beta;
  hp.lambda_per = c.lambda_per;
  hp.lambda_low = c.no_reg ? 0.0 : c.lambda_low;
  hp.lambda_high = c.no_reg ? 0.0 : c.lambda_high;
  hp.l1 = c.l1;
  hp.l2 = c.l2;
  hp.wat_probability = c.no_wat ? 0.0 : c.wat_probability;
  hp.patch = c.patch;
  hp.batch = c.batch;
  hp.iterations = c.adapt_iters;
  hp.lr = c.adapt_lr;
  hp.uncertainty_ensemble = c.uncertainty_ensemble;
  hp.rectify = !c.no_ue;
  return hp;
}

inline AdaptRunOptions to_run_options(const RunConfig& c) {
  AdaptRunOptions o;
  o.channels = c.channels;
  o.blocks = c.blocks;
  o.scale = c.scale;
  o.wat_levels = wat_levels_for(c.patch / c.scale);
  o.fuse_sum = c.fusion == "sum";
  o.eval_interval = c.eval_interval;
  o.teacher_eval = c.teacher_eval;
  o.seed = c.seed;
  char meta[128];
  std::snprintf(meta, sizeof(meta), "no_wat=%d no_ema=%d no_ue=%d no_reg=%d", (int)c.no_wat,
                (int)c.no_ema, (int)c.no_ue, (int)c.no_reg);
  o.csv_meta = meta;
  return o;
}

}  // namespace sodasr

#endif  // SODASR_CONFIG_HPP_

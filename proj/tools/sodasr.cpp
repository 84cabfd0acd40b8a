// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]

// Command-line driver: gen-data, train-source, adapt, eval, infer.

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sodasr/config.hpp"
#include "sodasr/selftrain.hpp"

namespace fs = std::filesystem;

namespace {

using sodasr::RunConfig;

// Failure that maps to exit code 2 (missing required input).
struct MissingInput : std::runtime_error {
  explicit MissingInput(const std::string& m) : std::runtime_error(m) {}
};

struct FlagStore {
  std::map<std::string, std::string> strings;
  std::map<std::string, bool> bools;
  std::map<std::string, CLI::Option*> opts;
};

// Registers every config key as --key; bool keys become flags that also
// accept --key=false.
void register_config_flags(CLI::App& app, FlagStore& store) {
  for (const auto& f : sodasr::detail::config_fields()) {
    std::string name = std::string("--") + f.key;
    CLI::Option* o = std::holds_alternative<bool RunConfig::*>(f.ptr)
                         ? app.add_flag(name, store.bools[f.key])
                         : app.add_option(name, store.strings[f.key]);
    o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    store.opts[f.key] = o;
  }
}

// defaults -> config file -> SODA_SEED -> explicit flags, then validation.
RunConfig resolve_config(const std::string& config_path, const FlagStore& store) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = sodasr::load_config(config_path);
  sodasr::apply_env_seed(cfg);
  for (const auto& f : sodasr::detail::config_fields()) {
    auto it = store.opts.find(f.key);
    if (it == store.opts.end() || it->second->count() == 0) continue;
    std::string value;
    if (std::holds_alternative<bool RunConfig::*>(f.ptr))
      value = store.bools.at(f.key) ? "true" : "false";
    else
      value = store.strings.at(f.key);
    try {
      sodasr::set_config_value(cfg, f.key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("flag --") + f.key + ": " + e.what());
    }
  }
  sodasr::validate_config(cfg);
  return cfg;
}

void freeze_config(const RunConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  sodasr::save_config((fs::path(dir) / "config.cfg").string(), cfg);
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw MissingInput(what + " not found: " + path);
}

int cmd_gen_data(const RunConfig& cfg, bool force) {
  if (fs::exists(cfg.data_dir) && !fs::is_empty(cfg.data_dir) && !force)
    throw std::runtime_error("gen-data: " + cfg.data_dir +
                             " exists and is not empty (use --force to overwrite)");
  sodasr::generate_dataset(cfg.data_dir, sodasr::to_datagen_spec(cfg), cfg.seed);
  freeze_config(cfg, cfg.data_dir);
  long rows = (long)sodasr::read_manifest((fs::path(cfg.data_dir) / "manifest.txt").string())
                  .size();
  std::printf("gen-data: wrote %ld files under %s (seed %llu)\n", rows, cfg.data_dir.c_str(),
              (unsigned long long)cfg.seed);
  return 0;
}

int cmd_train_source(const RunConfig& cfg) {
  sodasr::Split train = sodasr::load_split(cfg.data_dir, "source", "train");
  sodasr::Split val = sodasr::load_split(cfg.data_dir, "source", "val");

  sodasr::Rng root(cfg.seed);
  sodasr::Rng init = root.fork("source-init");
  sodasr::Rng data = root.fork("source-data");
  sodasr::ToySRNet<float> net;
  net.init(cfg.channels, cfg.blocks, cfg.scale, init);

  std::vector<float> trace =
      sodasr::train_source(net, train.lr, train.hr, cfg.source_iters, (float)cfg.source_lr,
                           cfg.batch, cfg.patch, data);

  auto ev = sodasr::detail::eval_pairs(net, val.lr, val.hr, cfg.scale);
  std::string ckpt = sodasr::source_checkpoint_path(cfg);
  fs::create_directories(fs::path(ckpt).parent_path().empty()
                             ? "."
                             : fs::path(ckpt).parent_path().string());
  sodasr::save_checkpoint(ckpt, sodasr::prefixed("student.", net.named_params()));
  freeze_config(cfg, cfg.out_dir);
  std::printf("train-source: %ld iterations, final loss %.6f, val PSNR-Y %.4f dB, "
              "checkpoint %s\n",
              cfg.source_iters, trace.empty() ? 0.0f : trace.back(), ev.first, ckpt.c_str());
  return 0;
}

int cmd_adapt(const RunConfig& cfg) {
  std::string src = sodasr::source_checkpoint_path(cfg);
  require_file(src, "source checkpoint");
  require_file((fs::path(cfg.data_dir) / "manifest.txt").string(), "dataset manifest");

  sodasr::AdaptHyper hp = sodasr::to_adapt_hyper(cfg);
  sodasr::AdaptRunOptions opts = sodasr::to_run_options(cfg);
  freeze_config(cfg, cfg.out_dir);
  sodasr::AdaptRunResult res = sodasr::adapt_run(src, cfg.data_dir, cfg.out_dir, hp, opts);
  std::printf("adapt: source %.4f dB -> best %.4f dB (final %.4f dB) over %ld iterations\n"
              "adapt: checkpoint %s\nadapt: log %s (%ld rows)\n",
              res.source_psnr, res.best_psnr, res.final_psnr, cfg.adapt_iters,
              res.checkpoint_path.c_str(), res.csv_path.c_str(), res.rows);
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  std::string ckpt = cfg.checkpoint.empty() ? sodasr::adapted_checkpoint_path(cfg)
                                            : cfg.checkpoint;
  require_file(ckpt, "checkpoint");

  sodasr::Rng init(cfg.seed);
  sodasr::ToySRNet<float> net;
  net.init(cfg.channels, cfg.blocks, cfg.scale, init);
  std::string prefix = "student.";
  if (cfg.teacher_eval && sodasr::checkpoint_has_prefix(ckpt, "teacher.")) prefix = "teacher.";
  sodasr::load_checkpoint(ckpt, sodasr::prefixed(prefix, net.named_params()));

  const std::pair<const char*, const char*> splits[3] = {
      {"source", "val"}, {"target", "val"}, {"target", "test"}};
  fs::create_directories(cfg.out_dir);
  std::string csv_path = (fs::path(cfg.out_dir) / "eval.csv").string();
  std::FILE* csv = std::fopen(csv_path.c_str(), "wb");
  if (!csv) throw std::runtime_error("eval: cannot open " + csv_path);
  std::fprintf(csv, "split,psnr_y,ssim\n");
  std::printf("%-14s %9s %7s\n", "split", "psnr_y", "ssim");
  for (const auto& [domain, split] : splits) {
    sodasr::Split s = sodasr::load_split(cfg.data_dir, domain, split);
    if (s.hr.empty()) continue;
    auto ev = sodasr::detail::eval_pairs(net, s.lr, s.hr, cfg.scale);
    std::string name = std::string(domain) + "/" + split;
    std::printf("%-14s %9.4f %7.4f\n", name.c_str(), ev.first, ev.second);
    std::fprintf(csv, "%s,%.4f,%.4f\n", name.c_str(), ev.first, ev.second);
  }
  std::fclose(csv);
  freeze_config(cfg, cfg.out_dir);
  std::printf("eval: wrote %s\n", csv_path.c_str());
  return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& input, const std::string& output) {
  std::string ckpt = cfg.checkpoint.empty() ? sodasr::adapted_checkpoint_path(cfg)
                                            : cfg.checkpoint;
  require_file(ckpt, "checkpoint");
  require_file(input, "input image");

  sodasr::Rng init(cfg.seed);
  sodasr::ToySRNet<float> net;
  net.init(cfg.channels, cfg.blocks, cfg.scale, init);
  sodasr::load_checkpoint(ckpt, sodasr::prefixed("student.", net.named_params()));

  sodasr::Image lr = input.size() > 4 && input.substr(input.size() - 4) == ".ppm"
                         ? sodasr::load_ppm(input)
                         : sodasr::load_srf32(input);
  long H = lr.shape()[0], W = lr.shape()[1];
  sodasr::NoGrad ng;
  sodasr::Tensor<float> x = sodasr::reshape(lr, {1, H, W, 3});
  sodasr::Tensor<float> y = sodasr::clamp(sodasr::sr_forward(net, x), 0.0f, 1.0f);
  sodasr::Image sr = sodasr::reshape(y, {H * cfg.scale, W * cfg.scale, 3});
  if (!fs::path(output).parent_path().empty())
    fs::create_directories(fs::path(output).parent_path());
  sodasr::save_ppm(output, sr);
  std::printf("infer: %ldx%ld -> %ldx%ld, wrote %s\n", W, H, W * cfg.scale, H * cfg.scale,
              output.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"source-free domain adaptation for image super-resolution"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  FlagStore store;
  register_config_flags(app, store);

  bool force = false;
  std::string infer_in, infer_out;
  CLI::App* gen = app.add_subcommand("gen-data", "synthesize the source/target dataset");
  gen->add_flag("--force", force, "overwrite a non-empty data directory");
  CLI::App* train = app.add_subcommand("train-source", "pre-train the source model");
  CLI::App* adapt = app.add_subcommand("adapt", "run source-free adaptation");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on all paired splits");
  CLI::App* infer = app.add_subcommand("infer", "upscale one image with a checkpoint");
  infer->add_option("--input", infer_in, "input image (.srf32 or .ppm)")->required();
  infer->add_option("--output", infer_out, "output image (.ppm)")->required();
  for (CLI::App* sub : {gen, train, adapt, eval, infer}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = resolve_config(config_path, store);
    if (gen->parsed()) return cmd_gen_data(cfg, force);
    if (train->parsed()) return cmd_train_source(cfg);
    if (adapt->parsed()) return cmd_adapt(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    return cmd_infer(cfg, infer_in, infer_out);
  } catch (const sodasr::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const MissingInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

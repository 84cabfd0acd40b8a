// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "sodasr/backbone.hpp"
#include "sodasr/checkpoint.hpp"
#include "sodasr/wat.hpp"

namespace sodasr {
namespace {

namespace fs = std::filesystem;

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

std::vector<char> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
}

TEST(Checkpoint, ByteLayoutFrozen) {
  Tensor<float> t = Tensor<float>::from_vector({2}, {1.5f, -2.0f});
  std::string path = tmp_path("sodasr_ckpt_layout.ckpt");
  save_checkpoint(path, {{"a", &t}});

  std::vector<char> want;
  const char magic[8] = {'S', 'O', 'D', 'A', 'S', 'R', '\0', '\1'};
  want.insert(want.end(), magic, magic + 8);
  uint32_t count = 1;
  want.insert(want.end(), (char*)&count, (char*)&count + 4);
  uint16_t nl = 1;
  want.insert(want.end(), (char*)&nl, (char*)&nl + 2);
  want.push_back('a');
  want.push_back((char)1);  // rank
  uint32_t dim = 2;
  want.insert(want.end(), (char*)&dim, (char*)&dim + 4);
  float vals[2] = {1.5f, -2.0f};
  want.insert(want.end(), (char*)vals, (char*)vals + 8);

  std::vector<char> got = read_all(path);
  ASSERT_EQ(got.size(), want.size());
  EXPECT_EQ(std::memcmp(got.data(), want.data(), want.size()), 0);
  fs::remove(path);
}

TEST(Checkpoint, NetRoundtripBitExact) {
  Rng rng(70);
  ToySRNet<float> a, b;
  a.init(8, 2, 4, rng);
  b.init(8, 2, 4, rng);  // different draw, so b != a before loading
  std::string path = tmp_path("sodasr_ckpt_net.ckpt");
  save_checkpoint(path, prefixed("student.", a.named_params()));
  load_checkpoint(path, prefixed("student.", b.named_params()));
  auto pa = a.params(), pb = b.params();
  for (size_t i = 0; i < pa.size(); ++i)
    ASSERT_EQ(std::memcmp(pa[i]->data(), pb[i]->data(),
                          sizeof(float) * (size_t)pa[i]->numel()),
              0);
  fs::remove(path);
}

TEST(Checkpoint, MultiPrefixSingleFile) {
  Rng rng(71);
  ToySRNet<float> student, teacher;
  student.init(8, 1, 4, rng);
  teacher.init(8, 1, 4, rng);
  WatParams<float> wat;
  wat.init(8, rng);
  Discriminator<float> disc;
  disc.init(9, rng);

  NamedTensorList all;
  for (auto& e : prefixed("student.", student.named_params())) all.push_back(e);
  for (auto& e : prefixed("teacher.", teacher.named_params())) all.push_back(e);
  for (auto& e : prefixed("wat.", wat.named_params())) all.push_back(e);
  for (auto& e : prefixed("disc.", disc.named_params())) all.push_back(e);

  std::string path = tmp_path("sodasr_ckpt_multi.ckpt");
  save_checkpoint(path, all);

  EXPECT_TRUE(checkpoint_has_prefix(path, "teacher."));
  EXPECT_TRUE(checkpoint_has_prefix(path, "wat."));
  EXPECT_FALSE(checkpoint_has_prefix(path, "zebra."));

  ToySRNet<float> t2;
  t2.init(8, 1, 4, rng);
  load_checkpoint(path, prefixed("teacher.", t2.named_params()));
  auto pa = teacher.params(), pb = t2.params();
  for (size_t i = 0; i < pa.size(); ++i)
    ASSERT_EQ(std::memcmp(pa[i]->data(), pb[i]->data(),
                          sizeof(float) * (size_t)pa[i]->numel()),
              0);
  fs::remove(path);
}

TEST(Checkpoint, ErrorsAreDetected) {
  std::string missing = tmp_path("sodasr_ckpt_missing.ckpt");
  fs::remove(missing);
  Tensor<float> t = Tensor<float>::from_vector({2}, {1.0f, 2.0f});
  EXPECT_THROW(load_checkpoint(missing, {{"a", &t}}), std::runtime_error);

  std::string path = tmp_path("sodasr_ckpt_bad.ckpt");
  save_checkpoint(path, {{"a", &t}});

  // flip a magic byte
  {
    auto bytes = read_all(path);
    bytes[0] = 'X';
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), (std::streamsize)bytes.size());
  }
  EXPECT_THROW(load_checkpoint_all(path), std::runtime_error);

  // truncate payload
  save_checkpoint(path, {{"a", &t}});
  {
    auto bytes = read_all(path);
    bytes.resize(bytes.size() - 3);
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), (std::streamsize)bytes.size());
  }
  EXPECT_THROW(load_checkpoint_all(path), std::runtime_error);

  // trailing garbage
  save_checkpoint(path, {{"a", &t}});
  {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    f << "junk";
  }
  EXPECT_THROW(load_checkpoint_all(path), std::runtime_error);

  // missing tensor name and shape mismatch
  save_checkpoint(path, {{"a", &t}});
  Tensor<float> other = Tensor<float>::zeros({2});
  EXPECT_THROW(load_checkpoint(path, {{"b", &other}}), std::runtime_error);
  Tensor<float> wrong = Tensor<float>::zeros({3});
  EXPECT_THROW(load_checkpoint(path, {{"a", &wrong}}), std::runtime_error);

  fs::remove(path);
}

}  // namespace
}  // namespace sodasr

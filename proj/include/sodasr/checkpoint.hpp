// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_CHECKPOINT_HPP_
#define SODASR_CHECKPOINT_HPP_

// Shared checkpoint container: 8-byte magic "SODASR\0\1", u32 tensor count,
// then per tensor u16 name length, name, u8 rank, u32 dims, f32 payload,
// everything little-endian. Loading validates the magic and total length.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sodasr/tensor.hpp"

namespace sodasr {

using NamedTensorList = std::vector<std::pair<std::string, Tensor<float>*>>;

inline constexpr char kCheckpointMagic[8] = {'S', 'O', 'D', 'A', 'S', 'R', '\0', '\1'};

inline void save_checkpoint(const std::string& path, const NamedTensorList& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, 8);
  uint32_t count = (uint32_t)tensors.size();
  f.write((const char*)&count, 4);
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xffff) throw std::runtime_error("save_checkpoint: name too long");
    uint16_t nl = (uint16_t)name.size();
    f.write((const char*)&nl, 2);
    f.write(name.data(), nl);
    uint8_t rank = (uint8_t)t->ndim();
    f.write((const char*)&rank, 1);
    for (int d = 0; d < (int)rank; ++d) {
      uint32_t dim = (uint32_t)t->shape()[d];
      f.write((const char*)&dim, 4);
    }
    f.write((const char*)t->data(), (std::streamsize)(t->numel() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

// Whole-file load for inspection and filtering.
inline std::map<std::string, Tensor<float>> load_checkpoint_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  uint32_t count = 0;
  f.read((char*)&count, 4);
  std::map<std::string, Tensor<float>> out;
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t nl = 0;
    f.read((char*)&nl, 2);
    std::string name((size_t)nl, '\0');
    f.read(name.data(), nl);
    uint8_t rank = 0;
    f.read((char*)&rank, 1);
    Shape shape((size_t)rank);
    for (int d = 0; d < (int)rank; ++d) {
      uint32_t dim = 0;
      f.read((char*)&dim, 4);
      shape[(size_t)d] = (long)dim;
    }
    if (!f) throw std::runtime_error("load_checkpoint: truncated header in " + path);
    Tensor<float> t = Tensor<float>::zeros(shape);
    f.read((char*)t.data(), (std::streamsize)(t.numel() * sizeof(float)));
    if (!f) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
    out.emplace(name, t);
  }
  f.peek();
  if (!f.eof()) throw std::runtime_error("load_checkpoint: trailing bytes in " + path);
  return out;
}

// Strict load into an existing tensor list: every requested name must be
// present with a matching shape. Extra tensors in the file are ignored.
inline void load_checkpoint(const std::string& path, const NamedTensorList& tensors) {
  auto all = load_checkpoint_all(path);
  for (const auto& [name, t] : tensors) {
    auto it = all.find(name);
    if (it == all.end())
      throw std::runtime_error("load_checkpoint: missing tensor " + name + " in " + path);
    if (it->second.shape() != t->shape())
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name + " in " + path);
    std::copy(it->second.data(), it->second.data() + it->second.numel(), t->data());
  }
}

// Prefix every name in a list, e.g. prefixed("student.", net.named_params()).
template <typename T>
inline NamedTensorList prefixed(const std::string& prefix,
                                const std::vector<std::pair<std::string, Tensor<T>*>>& list) {
  static_assert(std::is_same_v<T, float>, "checkpoints are f32");
  NamedTensorList out;
  for (const auto& [name, t] : list) out.push_back({prefix + name, t});
  return out;
}

inline bool checkpoint_has_prefix(const std::string& path, const std::string& prefix) {
  auto all = load_checkpoint_all(path);
  for (const auto& [name, t] : all)
    if (name.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace sodasr

#endif  // SODASR_CHECKPOINT_HPP_

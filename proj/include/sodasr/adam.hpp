// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_ADAM_HPP_
#define SODASR_ADAM_HPP_

#include <cmath>
#include <vector>

#include "sodasr/tensor.hpp"

namespace sodasr {

// Adam with bias correction.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, T lr, T beta1 = T(0.9), T beta2 = T(0.999),
       T eps = T(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& p : params) {
      Slot s;
      s.param = p;
      s.m.assign((size_t)p.numel(), T(0));
      s.v.assign((size_t)p.numel(), T(0));
      slots_.push_back(std::move(s));
    }
  }

  void step() {
    ++t_;
    T bc1 = T(1) - std::pow(beta1_, (T)t_);
    T bc2 = T(1) - std::pow(beta2_, (T)t_);
    for (auto& s : slots_) {
      s.param.ensure_grad();
      const T* g = s.param.grad().data();
      T* p = s.param.data();
      long n = s.param.numel();
      for (long i = 0; i < n; ++i) {
        s.m[(size_t)i] = beta1_ * s.m[(size_t)i] + (T(1) - beta1_) * g[i];
        s.v[(size_t)i] = beta2_ * s.v[(size_t)i] + (T(1) - beta2_) * g[i] * g[i];
        T mhat = s.m[(size_t)i] / bc1;
        T vhat = s.v[(size_t)i] / bc2;
        p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void zero_grad() {
    for (auto& s : slots_) s.param.zero_grad();
  }

  void set_lr(T lr) { lr_ = lr; }
  T lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  struct Slot {
    Tensor<T> param;
    std::vector<T> m, v;
  };
  std::vector<Slot> slots_;
  T lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace sodasr

#endif  // SODASR_ADAM_HPP_

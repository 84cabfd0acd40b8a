// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_GRADCHECK_HPP_
#define SODASR_GRADCHECK_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "sodasr/tensor.hpp"

namespace sodasr {

// Central finite differences against reverse mode gradients, f64 only.
// f must rebuild its graph from the current input values on every call
// and return a scalar. Returns the worst relative error over all input
// elements, where relerr = |a - n| / max(1, |a|, |n|).
inline double finite_difference_check(const std::function<Tensor<double>()>& f,
                                      std::vector<Tensor<double>> inputs,
                                      double h = 1e-5) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  Tensor<double> y = f();
  y.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& in : inputs) analytic.push_back(in.grad());

  double worst = 0.0;
  NoGrad ng;
  for (size_t t = 0; t < inputs.size(); ++t) {
    auto& in = inputs[t];
    for (long i = 0; i < in.numel(); ++i) {
      double keep = in.data()[i];
      in.data()[i] = keep + h;
      double fp = f().item();
      in.data()[i] = keep - h;
      double fm = f().item();
      in.data()[i] = keep;
      double num = (fp - fm) / (2.0 * h);
      double ana = analytic[t][(size_t)i];
      double rel = std::abs(ana - num) / std::max({1.0, std::abs(ana), std::abs(num)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace sodasr

#endif  // SODASR_GRADCHECK_HPP_

#pragma once

#include <cstdint>

#include "xag/tensor.hpp"

namespace xag {

/// Per-parameter Adam accumulator with bias correction.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_param(const Tensor& param, double lr);
};

/// One Adam update of `param` in place. With `ascend` the step is applied
/// with the gradient negated (gradient ascent).
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, bool ascend = false);

}  // namespace xag

#include "xag/optim.hpp"

#include <cmath>

#include "xag/errors.hpp"

namespace xag {

AdamState AdamState::for_param(const Tensor& param, double lr) {
  AdamState s;
  s.first_moment = Tensor::zeros(param.rows(), param.cols());
  s.second_moment = Tensor::zeros(param.rows(), param.cols());
  s.lr = lr;
  return s;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, bool ascend) {
  if (!param.same_shape(grad)) {
    throw DimensionError("adam_step: grad " + grad.shape_str() + " vs param " +
                         param.shape_str());
  }
  if (!param.same_shape(state.first_moment)) {
    throw DimensionError("adam_step: state " + state.first_moment.shape_str() + " vs param " +
                         param.shape_str());
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double sign = ascend ? 1.0 : -1.0;

  auto p = param.values();
  auto g = grad.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] += sign * state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace xag

#pragma once

#include <cstdint>
#include <vector>

#include "zsar/tensor.hpp"

namespace zsar {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0001;
};

// Momentum SGD with L2 weight decay folded into the gradient:
//   v <- momentum * v + g + weight_decay * p
//   p <- p - learning_rate * v
struct SgdState {
  SgdConfig config;
  Tensor velocity;
};

SgdState make_sgd_state(const SgdConfig& config, const std::vector<int>& dims);

void sgd_step(Tensor& params, const Tensor& grads, SgdState& state);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Step decay: the effective rate is learning_rate *
  // lr_gamma^floor(step_count / lr_step_size), evaluated on the count of
  // completed steps.
  std::int64_t lr_step_size = 200000;
  double lr_gamma = 0.5;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step_count = 0;  // completed steps
  Tensor first_moment;
  Tensor second_moment;
};

AdamState make_adam_state(const AdamConfig& config,
                          const std::vector<int>& dims);

double adam_effective_lr(const AdamState& state);

// Standard Adam with bias correction; the decay schedule above selects the
// rate for each step.
void adam_step(Tensor& params, const Tensor& grads, AdamState& state);

}  // namespace zsar

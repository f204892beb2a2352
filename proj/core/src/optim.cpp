#include "zsar/optim.hpp"

#include <cmath>

#include "zsar/error.hpp"

namespace zsar {

namespace {

void validate_sgd_config(const SgdConfig& config) {
  if (config.learning_rate < 0 || config.weight_decay < 0) {
    throw ConfigError("sgd: learning_rate and weight_decay must be >= 0");
  }
  if (config.momentum < 0 || config.momentum >= 1) {
    throw ConfigError("sgd: momentum must lie in [0, 1)");
  }
}

void validate_adam_config(const AdamConfig& config) {
  if (config.learning_rate < 0) {
    throw ConfigError("adam: learning_rate must be >= 0");
  }
  if (config.beta1 <= 0 || config.beta1 >= 1 || config.beta2 <= 0 ||
      config.beta2 >= 1) {
    throw ConfigError("adam: beta1 and beta2 must lie in (0, 1)");
  }
  if (config.epsilon <= 0) {
    throw ConfigError("adam: epsilon must be > 0");
  }
  if (config.lr_step_size <= 0) {
    throw ConfigError("adam: lr_step_size must be positive");
  }
  if (config.lr_gamma <= 0 || config.lr_gamma > 1) {
    throw ConfigError("adam: lr_gamma must lie in (0, 1]");
  }
}

}  // namespace

SgdState make_sgd_state(const SgdConfig& config,
                        const std::vector<int>& dims) {
  validate_sgd_config(config);
  return SgdState{config, Tensor::zeros(dims)};
}

void sgd_step(Tensor& params, const Tensor& grads, SgdState& state) {
  check_same_dims(params, grads, "sgd_step params/grads");
  check_same_dims(params, state.velocity, "sgd_step params/velocity");
  const SgdConfig& c = state.config;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v =
        c.momentum * state.velocity[i] + grads[i] + c.weight_decay * params[i];
    state.velocity[i] = v;
    params[i] -= c.learning_rate * v;
  }
  check_finite(params, "sgd_step params");
}

AdamState make_adam_state(const AdamConfig& config,
                          const std::vector<int>& dims) {
  validate_adam_config(config);
  return AdamState{config, 0, Tensor::zeros(dims), Tensor::zeros(dims)};
}

double adam_effective_lr(const AdamState& state) {
  const AdamConfig& c = state.config;
  const std::int64_t decays = state.step_count / c.lr_step_size;
  return c.learning_rate * std::pow(c.lr_gamma, static_cast<double>(decays));
}

void adam_step(Tensor& params, const Tensor& grads, AdamState& state) {
  check_same_dims(params, grads, "adam_step params/grads");
  check_same_dims(params, state.first_moment, "adam_step params/moments");
  const AdamConfig& c = state.config;
  // Rate is chosen from the completed-step count, then the counter advances.
  const double lr = adam_effective_lr(state);
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
    const double v = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
    state.first_moment[i] = m;
    state.second_moment[i] = v;
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
  check_finite(params, "adam_step params");
}

}  // namespace zsar

#include <cmath>

#include "bld/error.hpp"
#include "bld/nn.hpp"

namespace bld::nn {

double learning_rate_at(const AdamConfig& cfg, std::int64_t step) {
  const double warmup = cfg.warmup_fraction * static_cast<double>(cfg.total_steps);
  if (warmup > 0.0 && static_cast<double>(step) < warmup)
    return cfg.lr * static_cast<double>(step) / warmup;
  return cfg.lr;
}

double adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw DimensionError("adam_step: parameter, gradient and moment sizes differ");
  const auto& cfg = state.config;
  state.step += 1;
  const double lr = learning_rate_at(cfg, state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const double b1 = cfg.beta1, b2 = cfg.beta2, eps = cfg.eps;
  double* m = state.m.data();
  double* v = state.v.data();
  const auto n = static_cast<std::int64_t>(params.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::int64_t i = 0; i < n; ++i) {
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  return lr;
}

}  // namespace bld::nn

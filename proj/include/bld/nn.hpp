#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bld/rng.hpp"

namespace bld::nn {

/// A named row-major tensor inside a flat parameter buffer.
struct TensorSlot {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

/// Ordered list of named tensors; parameters, gradients and optimizer
/// moments all share one layout so they can live in flat buffers.
class ParamLayout {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);
  const TensorSlot& operator[](std::size_t i) const { return slots_[i]; }
  const TensorSlot* find(const std::string& name) const;
  const std::vector<TensorSlot>& slots() const { return slots_; }
  std::size_t total() const { return total_; }

 private:
  std::vector<TensorSlot> slots_;
  std::size_t total_ = 0;
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// x * sigmoid(x)
inline double silu(double x) { return x * sigmoid(x); }

inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

/// y = W x + b, W is rows x cols row-major.
void affine(std::span<const double> W, std::span<const double> b, std::span<const double> x,
            std::span<double> y);
/// dx += W^T dy
void affine_backward_input(std::span<const double> W, std::span<const double> dy,
                           std::span<double> dx);
/// dW += dy x^T, db += dy
void affine_backward_params(std::span<const double> dy, std::span<const double> x,
                            std::span<double> dW, std::span<double> db);

/// He-normal fill: N(0, 2/fan_in).
void he_normal(std::span<double> w, std::size_t fan_in, Rng& rng);

/// Dense network with x*sigmoid(x) on hidden layers and a linear output.
/// Used for the autoencoder's encoder and decoder.
class Mlp {
 public:
  struct Cache {
    const Mlp* owner = nullptr;
    std::vector<std::vector<double>> inputs;  // input of each layer
    std::vector<std::vector<double>> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  /// dims = {in, hidden..., out}
  explicit Mlp(std::vector<std::size_t> dims);

  void init(Rng& rng);
  std::vector<double> forward(std::span<const double> x, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients into `grad`; returns dL/dx.
  std::vector<double> backward(const Cache& cache, std::span<const double> dout,
                               std::span<double> grad) const;

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  const ParamLayout& layout() const { return layout_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

 private:
  std::vector<std::size_t> dims_;
  ParamLayout layout_;
  std::vector<double> params_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Fraction of total_steps over which lr ramps linearly from 0.
  double warmup_fraction = 0.0;
  std::int64_t total_steps = 0;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg) : config(cfg), m(n, 0.0), v(n, 0.0) {}
};

/// Learning rate for 1-based optimizer step `step`.
double learning_rate_at(const AdamConfig& cfg, std::int64_t step);

/// One bias-corrected Adam update in place. Returns the learning rate used.
double adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace bld::nn

#include <algorithm>
#include <cmath>

#include "bld/error.hpp"
#include "bld/nn.hpp"

namespace bld::nn {

std::size_t ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
  slots_.push_back({std::move(name), rows, cols, total_});
  total_ += rows * cols;
  return slots_.size() - 1;
}

const TensorSlot* ParamLayout::find(const std::string& name) const {
  for (const auto& s : slots_)
    if (s.name == name) return &s;
  return nullptr;
}

void affine(std::span<const double> W, std::span<const double> b, std::span<const double> x,
            std::span<double> y) {
  const std::size_t rows = y.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
}

void affine_backward_input(std::span<const double> W, std::span<const double> dy,
                           std::span<double> dx) {
  const std::size_t rows = dy.size();
  const std::size_t cols = dx.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* w = W.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dx[c] += w[c] * g;
  }
}

void affine_backward_params(std::span<const double> dy, std::span<const double> x,
                            std::span<double> dW, std::span<double> db) {
  const std::size_t rows = dy.size();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    db[r] += g;
    if (g == 0.0) continue;
    double* w = dW.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) w[c] += g * x[c];
  }
}

void he_normal(std::span<double> w, std::size_t fan_in, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : w) v = rng.normal(0.0, sd);
}

Mlp::Mlp(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw DimensionError("Mlp needs at least input and output dims");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layout_.add("W" + std::to_string(l), dims_[l + 1], dims_[l]);
    layout_.add("b" + std::to_string(l), dims_[l + 1], 1);
  }
  params_.assign(layout_.total(), 0.0);
}

void Mlp::init(Rng& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const auto& w = layout_[2 * l];
    he_normal(std::span(params_).subspan(w.offset, w.size()), dims_[l], rng);
  }
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache* cache) const {
  if (x.size() != input_dim())
    throw DimensionError("Mlp input has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(input_dim()));
  const std::size_t layers = dims_.size() - 1;
  if (cache) {
    cache->owner = this;
    cache->inputs.assign(layers, {});
    cache->pre.assign(layers, {});
  }
  std::vector<double> h(x.begin(), x.end());
  const std::span<const double> p = params_;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = layout_[2 * l];
    const auto& b = layout_[2 * l + 1];
    std::vector<double> z(dims_[l + 1]);
    affine(p.subspan(w.offset, w.size()), p.subspan(b.offset, b.size()), h, z);
    if (cache) {
      cache->inputs[l] = h;
      cache->pre[l] = z;
    }
    if (l + 1 < layers)
      for (auto& v : z) v = silu(v);
    h = std::move(z);
  }
  return h;
}

std::vector<double> Mlp::backward(const Cache& cache, std::span<const double> dout,
                                  std::span<double> grad) const {
  if (cache.owner != this || cache.pre.size() + 1 != dims_.size())
    throw ValidationError("Mlp::backward called with a cache from a different forward pass");
  if (dout.size() != output_dim()) throw DimensionError("Mlp::backward upstream size mismatch");
  const std::size_t layers = dims_.size() - 1;
  const std::span<const double> p = params_;
  std::vector<double> dy(dout.begin(), dout.end());
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers)
      for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= silu_grad(cache.pre[l][i]);
    const auto& w = layout_[2 * l];
    const auto& b = layout_[2 * l + 1];
    affine_backward_params(dy, cache.inputs[l], grad.subspan(w.offset, w.size()),
                           grad.subspan(b.offset, b.size()));
    std::vector<double> dx(dims_[l], 0.0);
    affine_backward_input(p.subspan(w.offset, w.size()), dy, dx);
    dy = std::move(dx);
  }
  return dy;
}

}  // namespace bld::nn

#include "bld/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bld/error.hpp"

namespace bld {

using nn::affine;
using nn::affine_backward_input;
using nn::affine_backward_params;
using nn::silu;
using nn::silu_grad;

DenoiserNet::DenoiserNet(DenoiserConfig cfg) : cfg_(cfg) {
  if (cfg.input_dim < 1 || cfg.hidden_dim < 1 || cfg.depth < 0 || cfg.steps < 1 ||
      cfg.num_classes < 0)
    throw ConfigError("invalid denoiser dimensions");
  const auto D = static_cast<std::size_t>(cfg.input_dim);
  const auto H = static_cast<std::size_t>(cfg.hidden_dim);
  w_in_ = layout_.add("w_in", H, D);
  b_in_ = layout_.add("b_in", H, 1);
  for (int l = 0; l < cfg.depth; ++l) {
    w_blk_.push_back(layout_.add("w_block" + std::to_string(l), H, H));
    b_blk_.push_back(layout_.add("b_block" + std::to_string(l), H, 1));
  }
  w_out_ = layout_.add("w_out", D, H);
  b_out_ = layout_.add("b_out", D, 1);
  time_ = layout_.add("time_embed", static_cast<std::size_t>(cfg.steps), H);
  if (cfg.num_classes > 0)
    class_ = layout_.add("class_embed", static_cast<std::size_t>(cfg.num_classes) + 1, H);
  params_.assign(layout_.total(), 0.0);
}

std::size_t DenoiserNet::param_count(const DenoiserConfig& c) {
  const std::size_t D = c.input_dim, H = c.hidden_dim;
  std::size_t n = H * D + H + c.depth * (H * H + H) + D * H + D + c.steps * H;
  if (c.num_classes > 0) n += (c.num_classes + 1) * H;
  return n;
}

void DenoiserNet::init(Rng& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  auto slot = [&](std::size_t i) {
    const auto& s = layout_[i];
    return std::span(params_).subspan(s.offset, s.size());
  };
  nn::he_normal(slot(w_in_), cfg_.input_dim, rng);
  for (auto w : w_blk_) nn::he_normal(slot(w), cfg_.hidden_dim, rng);
  for (auto& v : slot(time_)) v = rng.normal(0.0, 0.02);
  if (conditional())
    for (auto& v : slot(class_)) v = rng.normal(0.0, 0.02);
  // w_out stays zero so every initial flip probability is 0.5.
}

int DenoiserNet::class_row(int cls) const {
  if (!conditional()) {
    if (cls != kNoClass) throw DimensionError("class id given to an unconditional denoiser");
    return -1;
  }
  if (cls == kNoClass) return cfg_.num_classes;
  if (cls < 0 || cls >= cfg_.num_classes)
    throw DimensionError("class id " + std::to_string(cls) + " outside [0, " +
                         std::to_string(cfg_.num_classes) + ")");
  return cls;
}

std::vector<double> DenoiserNet::forward(BitSpan z_t, int t, int cls, Cache* cache) const {
  const auto D = static_cast<std::size_t>(cfg_.input_dim);
  const auto H = static_cast<std::size_t>(cfg_.hidden_dim);
  if (z_t.size() != D)
    throw DimensionError("denoiser input has " + std::to_string(z_t.size()) + " bits, expected " +
                         std::to_string(D));
  if (t < 1 || t > cfg_.steps)
    throw RangeError("denoiser step " + std::to_string(t) + " outside [1, " +
                     std::to_string(cfg_.steps) + "]");
  const int crow = class_row(cls);
  const std::span<const double> p = params_;
  auto slot = [&](std::size_t i) {
    const auto& s = layout_[i];
    return p.subspan(s.offset, s.size());
  };

  std::vector<double> x(D);
  for (std::size_t i = 0; i < D; ++i) x[i] = z_t[i] ? 1.0 : -1.0;

  std::vector<double> u(H);
  affine(slot(w_in_), slot(b_in_), x, u);
  const double* te = p.data() + layout_[time_].offset + static_cast<std::size_t>(t - 1) * H;
  for (std::size_t j = 0; j < H; ++j) u[j] += te[j];
  if (crow >= 0) {
    const double* ce = p.data() + layout_[class_].offset + static_cast<std::size_t>(crow) * H;
    for (std::size_t j = 0; j < H; ++j) u[j] += ce[j];
  }

  std::vector<double> h(H);
  for (std::size_t j = 0; j < H; ++j) h[j] = silu(u[j]);
  if (cache) {
    cache->owner = this;
    cache->t = t;
    cache->class_row = crow;
    cache->input = x;
    cache->u0 = u;
    cache->hidden.assign(1, h);
    cache->block_pre.clear();
  }
  std::vector<double> a(H);
  for (int l = 0; l < cfg_.depth; ++l) {
    affine(slot(w_blk_[l]), slot(b_blk_[l]), h, a);
    for (std::size_t j = 0; j < H; ++j) h[j] += silu(a[j]);
    if (cache) {
      cache->block_pre.push_back(a);
      cache->hidden.push_back(h);
    }
  }
  std::vector<double> logits(D);
  affine(slot(w_out_), slot(b_out_), h, logits);
  return logits;
}

void DenoiserNet::backward(const Cache& cache, std::span<const double> dlogits,
                           std::span<double> grad) const {
  const auto D = static_cast<std::size_t>(cfg_.input_dim);
  const auto H = static_cast<std::size_t>(cfg_.hidden_dim);
  if (cache.owner != this || cache.hidden.size() != static_cast<std::size_t>(cfg_.depth) + 1)
    throw ValidationError("denoiser backward needs the cache of a forward pass on this net");
  if (dlogits.size() != D || grad.size() != params_.size())
    throw DimensionError("denoiser backward: gradient buffer size mismatch");
  const std::span<const double> p = params_;
  auto pslot = [&](std::size_t i) {
    const auto& s = layout_[i];
    return p.subspan(s.offset, s.size());
  };
  auto gslot = [&](std::size_t i) {
    const auto& s = layout_[i];
    return grad.subspan(s.offset, s.size());
  };

  std::vector<double> dh(H, 0.0);
  affine_backward_params(dlogits, cache.hidden.back(), gslot(w_out_), gslot(b_out_));
  affine_backward_input(pslot(w_out_), dlogits, dh);

  std::vector<double> da(H);
  for (int l = cfg_.depth; l-- > 0;) {
    // h_{l+1} = h_l + silu(a_l): the skip path passes dh through unchanged.
    const auto& a = cache.block_pre[l];
    for (std::size_t j = 0; j < H; ++j) da[j] = dh[j] * silu_grad(a[j]);
    affine_backward_params(da, cache.hidden[l], gslot(w_blk_[l]), gslot(b_blk_[l]));
    affine_backward_input(pslot(w_blk_[l]), da, dh);
  }

  std::vector<double> du(H);
  for (std::size_t j = 0; j < H; ++j) du[j] = dh[j] * silu_grad(cache.u0[j]);
  affine_backward_params(du, cache.input, gslot(w_in_), gslot(b_in_));
  double* gt = grad.data() + layout_[time_].offset + static_cast<std::size_t>(cache.t - 1) * H;
  for (std::size_t j = 0; j < H; ++j) gt[j] += du[j];
  if (cache.class_row >= 0) {
    double* gc = grad.data() + layout_[class_].offset + static_cast<std::size_t>(cache.class_row) * H;
    for (std::size_t j = 0; j < H; ++j) gc[j] += du[j];
  }
}

std::string DenoiserNet::describe() const {
  std::ostringstream os;
  os << "DenoiserNet D=" << cfg_.input_dim << " H=" << cfg_.hidden_dim << " L=" << cfg_.depth
     << " T=" << cfg_.steps << " classes=" << cfg_.num_classes << '\n';
  for (const auto& s : layout_.slots())
    os << "  " << s.name << " [" << s.rows << " x " << s.cols << "] = " << s.size() << '\n';
  os << "  total parameters: " << params_.size() << '\n';
  return os.str();
}

}  // namespace bld
